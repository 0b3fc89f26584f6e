#include "irnn/synthetic.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "irnn/errors.hpp"
#include "irnn/rng.hpp"

namespace irnn {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat to_eigen(const Matrix& m) {
  Mat out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

Matrix from_eigen(const Mat& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  return out;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError(std::string("LTI system: ") + name + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

void require_psd(const Matrix& m, const char* name) {
  const Mat e = to_eigen(m);
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  if ((e - e.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DataError(std::string("LTI system: ") + name + " is not symmetric");
  if (e.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(e);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    throw DataError(std::string("LTI system: ") + name + " is not positive semidefinite");
}

// Symmetric square root of a PSD matrix; tolerates singular covariances.
Mat psd_sqrt(const Matrix& m) {
  const Mat e = to_eigen(m);
  if (e.size() == 0) return e;
  Eigen::SelfAdjointEigenSolver<Mat> es(e);
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Mat riccati_map(const Mat& A, const Mat& C, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat S = C * P * C.transpose() + R;
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("riccati_gain: innovation covariance is not positive definite");
  const Mat PCt = P * C.transpose();
  const Mat Pf = P - PCt * llt.solve(PCt.transpose());
  return A * Pf * A.transpose() + Q;
}

}  // namespace

void LtiSystem::validate() const {
  const std::size_t nx = A.rows(), nu = B.cols(), ny = C.rows();
  if (nx == 0 || ny == 0) throw ShapeError("LTI system: A and C must be non-empty");
  require_shape(A, nx, nx, "A");
  require_shape(B, nx, nu, "B");
  require_shape(C, ny, nx, "C");
  require_shape(D, ny, nu, "D");
  require_shape(Q, nx, nx, "Q");
  require_shape(R, ny, ny, "R");
  const double rho = spectral_radius();
  if (!(rho < 1.0))
    throw DataError("LTI system: spectral radius of A is " + std::to_string(rho) + ", must be below 1");
  require_psd(Q, "Q");
  require_psd(R, "R");
}

double LtiSystem::spectral_radius() const {
  Eigen::EigenSolver<Mat> es(to_eigen(A), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LtiSystem LtiSystem::scalar(double a, double q, double r) {
  return LtiSystem{Matrix{{a}}, Matrix{{0.0}}, Matrix{{1.0}}, Matrix{{0.0}}, Matrix{{q}}, Matrix{{r}}};
}

RawSeries simulate(const LtiSystem& sys, const std::vector<Vector>& u, std::size_t T, std::uint64_t seed) {
  sys.validate();
  const std::size_t nx = sys.n_x(), nu = sys.n_u(), ny = sys.n_y();
  if (!u.empty() && u.size() != T)
    throw ShapeError("simulate: " + std::to_string(u.size()) + " inputs for " + std::to_string(T) + " steps");
  for (const Vector& v : u)
    if (v.dim() != nu) throw ShapeError("simulate: input dim mismatch");

  const Mat A = to_eigen(sys.A), B = to_eigen(sys.B), C = to_eigen(sys.C), D = to_eigen(sys.D);
  const Mat Lq = psd_sqrt(sys.Q), Lr = psd_sqrt(sys.R);

  RawSeries s;
  for (std::size_t i = 0; i < nu; ++i) s.input_names.push_back("u" + std::to_string(i + 1));
  for (std::size_t i = 0; i < ny; ++i) s.target_names.push_back("y" + std::to_string(i + 1));

  Rng rng(seed);
  Vec x = Vec::Zero(static_cast<Eigen::Index>(nx));
  Vec ut(static_cast<Eigen::Index>(nu)), zv(static_cast<Eigen::Index>(ny)), zw(static_cast<Eigen::Index>(nx));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < nu; ++i) ut(static_cast<Eigen::Index>(i)) = u.empty() ? 0.0 : u[t][i];
    for (Eigen::Index i = 0; i < zv.size(); ++i) zv(i) = rng.normal();
    for (Eigen::Index i = 0; i < zw.size(); ++i) zw(i) = rng.normal();
    const Vec y = C * x + D * ut + Lr * zv;
    x = A * x + B * ut + Lq * zw;

    s.timestamps.push_back(std::to_string(t + 1));
    s.u.emplace_back(std::vector<double>(ut.data(), ut.data() + ut.size()));
    s.y.emplace_back(std::vector<double>(y.data(), y.data() + y.size()));
  }
  return s;
}

KalmanOracle riccati_gain(const LtiSystem& sys, double tolerance, std::size_t max_iterations) {
  sys.validate();
  const Mat A = to_eigen(sys.A), C = to_eigen(sys.C), Q = to_eigen(sys.Q), R = to_eigen(sys.R);

  Mat P = Q;
  double residual = 0.0;
  std::size_t it = 0;
  while (true) {
    const Mat next = riccati_map(A, C, Q, R, P);
    residual = (next - P).norm();
    P = next;
    ++it;
    if (residual < tolerance) break;
    if (!std::isfinite(residual) || it >= max_iterations)
      throw NumericalError("riccati_gain: no convergence after " + std::to_string(it) +
                           " iterations, residual " + std::to_string(residual));
  }

  const Mat S = C * P * C.transpose() + R;
  const Mat K = A * P * C.transpose() * S.inverse();
  KalmanOracle o;
  o.K = from_eigen(K);
  o.P = from_eigen(P);
  o.S = from_eigen(S);
  o.iterations = it;
  o.residual = residual;
  return o;
}

double riccati_residual(const LtiSystem& sys, const Matrix& P) {
  const Mat p = to_eigen(P);
  return (riccati_map(to_eigen(sys.A), to_eigen(sys.C), to_eigen(sys.Q), to_eigen(sys.R), p) - p).norm();
}

KfResult kf_predict(const KalmanOracle& oracle, const LtiSystem& sys, const RawSeries& series) {
  const std::size_t nx = sys.n_x(), ny = sys.n_y();
  if (series.n_y() != ny || series.n_u() != sys.n_u())
    throw ShapeError("kf_predict: series channels do not match the system");
  if (oracle.K.rows() != nx || oracle.K.cols() != ny)
    throw ShapeError("kf_predict: oracle gain does not match the system");

  const Mat A = to_eigen(sys.A), B = to_eigen(sys.B), C = to_eigen(sys.C), D = to_eigen(sys.D);
  const Mat K = to_eigen(oracle.K);
  KfResult out;
  Vec xh = Vec::Zero(static_cast<Eigen::Index>(nx));
  double sum = 0.0;
  for (std::size_t t = 0; t < series.length(); ++t) {
    const Vec u = Eigen::Map<const Vec>(series.u[t].data(), static_cast<Eigen::Index>(series.n_u()));
    const Vec y = Eigen::Map<const Vec>(series.y[t].data(), static_cast<Eigen::Index>(ny));
    const Vec yh = C * xh + D * u;
    const Vec e = y - yh;
    sum += e.squaredNorm();
    out.y_hat.emplace_back(std::vector<double>(yh.data(), yh.data() + yh.size()));
    out.innovations.emplace_back(std::vector<double>(e.data(), e.data() + e.size()));
    xh = A * xh + B * u + K * e;
  }
  out.mse = series.length() ? sum / static_cast<double>(series.length()) : 0.0;
  return out;
}

}  // namespace irnn
