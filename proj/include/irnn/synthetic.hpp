#pragma once

// Stochastic LTI generator and steady-state Kalman filter oracle.
//
//   x_{t+1} = A x_t + B u_t + w_t,   w_t ~ N(0, Q)
//   y_t     = C x_t + D u_t + v_t,   v_t ~ N(0, R)

#include <cstddef>
#include <cstdint>
#include <vector>

#include "irnn/data.hpp"
#include "irnn/numerics.hpp"

namespace irnn {

struct LtiSystem {
  Matrix A, B, C, D, Q, R;

  std::size_t n_x() const noexcept { return A.rows(); }
  std::size_t n_u() const noexcept { return B.cols(); }
  std::size_t n_y() const noexcept { return C.rows(); }

  /// Throws ShapeError on inconsistent shapes, DataError when A is not stable
  /// (spectral radius ≥ 1) or Q, R are not symmetric PSD. R = 0 is allowed
  /// for noiseless simulation; riccati_gain then needs C P Cᵀ to be PD.
  void validate() const;
  double spectral_radius() const;

  /// Scalar system with C = 1 and B = D = 0 (n_u = 1 so inputs exist but do nothing).
  static LtiSystem scalar(double a, double q, double r);
};

/// Simulates T steps from x_1 = 0. `u` must hold T input vectors, or be empty
/// for u ≡ 0. Noise is drawn from Rng(seed) through a symmetric square root of
/// Q and R, so each covariance may be singular PSD.
RawSeries simulate(const LtiSystem& sys, const std::vector<Vector>& u, std::size_t T, std::uint64_t seed);

struct KalmanOracle {
  Matrix K;  // n_x × n_y
  Matrix P;  // steady-state one-step prediction error covariance
  Matrix S;  // innovation covariance C P Cᵀ + R
  std::size_t iterations = 0;
  double residual = 0.0;  // Frobenius norm of the last Riccati update
};

/// Fixed-point iteration P ← A(P − PCᵀ S⁻¹ C P)Aᵀ + Q from P = Q until the
/// update norm drops below `tolerance`. Throws NumericalError with the
/// residual after `max_iterations`, or when S is singular.
KalmanOracle riccati_gain(const LtiSystem& sys, double tolerance = 1e-12, std::size_t max_iterations = 1000000);

/// Residual ‖Riccati(P) − P‖_F of the oracle's covariance.
double riccati_residual(const LtiSystem& sys, const Matrix& P);

struct KfResult {
  std::vector<Vector> y_hat;        // ŷ_t = C x̂_t + D u_t
  std::vector<Vector> innovations;  // e_t = y_t − ŷ_t
  double mse = 0.0;                 // mean ||e_t||² over the series
};

/// Steady-state predictor-form filter from x̂_1 = 0:
/// x̂_{t+1} = A x̂_t + B u_t + K e_t.
KfResult kf_predict(const KalmanOracle& oracle, const LtiSystem& sys, const RawSeries& series);

}  // namespace irnn
