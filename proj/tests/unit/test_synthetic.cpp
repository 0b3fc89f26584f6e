#include <cmath>

#include "doctest.h"
#include "irnn/errors.hpp"
#include "irnn/rng.hpp"
#include "irnn/synthetic.hpp"

using namespace irnn;

namespace {

double sample_variance(const std::vector<Vector>& v, std::size_t ch = 0) {
  double s = 0, s2 = 0;
  for (const auto& x : v) {
    s += x[ch];
    s2 += x[ch] * x[ch];
  }
  const double n = static_cast<double>(v.size());
  return s2 / n - (s / n) * (s / n);
}

double autocorrelation(const std::vector<Vector>& e, std::size_t lag) {
  double mean = 0;
  for (const auto& x : e) mean += x[0];
  mean /= static_cast<double>(e.size());
  double num = 0, den = 0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    den += (e[t][0] - mean) * (e[t][0] - mean);
    if (t >= lag) num += (e[t][0] - mean) * (e[t - lag][0] - mean);
  }
  return num / den;
}

// Closed-form root of P² − 0.81P − 1 = 0.
const double kP = (0.81 + std::sqrt(0.81 * 0.81 + 4.0)) / 2.0;

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("validation") {
  LtiSystem s = LtiSystem::scalar(0.9, 1.0, 1.0);
  CHECK_NOTHROW(s.validate());
  CHECK(s.spectral_radius() == doctest::Approx(0.9));
  CHECK_THROWS_AS(LtiSystem::scalar(1.0, 1.0, 1.0).validate(), DataError);
  CHECK_THROWS_AS(LtiSystem::scalar(-1.2, 1.0, 1.0).validate(), DataError);
  CHECK_THROWS_AS(LtiSystem::scalar(0.5, -1.0, 1.0).validate(), DataError);
  LtiSystem bad = s;
  bad.C = Matrix(1, 2);
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  LtiSystem asym{Matrix{{0.5, 0.0}, {0.0, 0.5}}, Matrix(2, 1), Matrix{{1.0, 0.0}}, Matrix(1, 1),
                 Matrix{{1.0, 0.5}, {0.0, 1.0}}, Matrix{{1.0}}};
  CHECK_THROWS_AS(asym.validate(), DataError);
  // Rotation with |eig| = 0.95: stable although entries are large.
  LtiSystem rot{Matrix{{0.0, -0.95}, {0.95, 0.0}}, Matrix(2, 1), Matrix{{1.0, 0.0}}, Matrix(1, 1),
                Matrix::identity(2), Matrix{{1.0}}};
  CHECK(rot.spectral_radius() == doctest::Approx(0.95));
}

TEST_CASE("noiseless simulation is deterministic") {
  LtiSystem s{Matrix{{0.5}}, Matrix{{1.0}}, Matrix{{2.0}}, Matrix{{0.5}}, Matrix{{0.0}}, Matrix{{0.0}}};
  std::vector<Vector> u;
  for (int t = 0; t < 10; ++t) u.push_back(Vector{static_cast<double>(t % 3)});
  const RawSeries a = simulate(s, u, 10, 1), b = simulate(s, u, 10, 99);
  CHECK(a.y == b.y);
  double x = 0.0;
  for (int t = 0; t < 10; ++t) {
    CHECK(a.y[t][0] == 2.0 * x + 0.5 * u[t][0]);
    x = 0.5 * x + u[t][0];
  }
}

TEST_CASE("degenerate dynamics give pure measurement noise") {
  LtiSystem s{Matrix{{0.0}}, Matrix{{0.0}}, Matrix{{1.0}}, Matrix{{0.0}}, Matrix{{0.0}}, Matrix{{2.0}}};
  const RawSeries r = simulate(s, {}, 100000, 3);
  CHECK(std::abs(sample_variance(r.y) - 2.0) < 0.03 * 2.0);
}

TEST_CASE("stationary output variance of the scalar system") {
  const LtiSystem s = LtiSystem::scalar(0.9, 1.0, 1.0);
  const RawSeries r = simulate(s, {}, 100000, 5);
  const double expected = 1.0 / (1.0 - 0.81) + 1.0;  // Lyapunov fixed point + R
  CHECK(std::abs(sample_variance(r.y) - expected) < 0.03 * expected);
  CHECK(simulate(s, {}, 50, 5).y == simulate(s, {}, 50, 5).y);
}

TEST_CASE("riccati scalar closed form") {
  const KalmanOracle o = riccati_gain(LtiSystem::scalar(0.9, 1.0, 1.0));
  CHECK(std::abs(o.P(0, 0) - kP) < 1e-9);
  CHECK(std::abs(o.K(0, 0) - 0.9 * kP / (kP + 1.0)) < 1e-9);
  CHECK(std::abs(o.S(0, 0) - (kP + 1.0)) < 1e-9);
  CHECK(std::abs(o.P(0, 0) - 1.48385) < 1e-4);
  CHECK(std::abs(o.K(0, 0) - 0.53765) < 1e-4);
  CHECK(o.residual < 1e-12);
  CHECK(riccati_residual(LtiSystem::scalar(0.9, 1.0, 1.0), o.P) < 1e-10);
}

TEST_CASE("no persistence: A = 0 gives P = Q and K = 0") {
  LtiSystem s{Matrix(2, 2), Matrix(2, 1), Matrix{{1.0, 1.0}}, Matrix(1, 1), Matrix{{2.0, 0.3}, {0.3, 1.0}},
              Matrix{{0.5}}};
  const KalmanOracle o = riccati_gain(s);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(o.P(i, j) == s.Q(i, j));
    CHECK(o.K(i, 0) == 0.0);
  }
}

TEST_CASE("gain shrinks as measurements get noisier") {
  double prev = INFINITY;
  for (double r : {1.0, 10.0, 100.0}) {
    LtiSystem s{Matrix{{0.8, 0.1}, {0.0, 0.7}}, Matrix(2, 1), Matrix::identity(2), Matrix(2, 1),
                Matrix::identity(2), Matrix{{r, 0.0}, {0.0, r}}};
    const KalmanOracle o = riccati_gain(s);
    double norm = 0;
    for (double v : o.K.values()) norm += v * v;
    norm = std::sqrt(norm);
    CHECK(norm < prev);
    prev = norm;
    CHECK(riccati_residual(s, o.P) < 1e-10);
  }
}

TEST_CASE("non-convergence is reported") {
  CHECK_THROWS_AS(riccati_gain(LtiSystem::scalar(0.9, 1.0, 1.0), 1e-12, 3), NumericalError);
}

TEST_CASE("KF innovations: variance S and whiteness") {
  const LtiSystem s = LtiSystem::scalar(0.9, 1.0, 1.0);
  const KalmanOracle o = riccati_gain(s);
  const RawSeries r = simulate(s, {}, 100000, 17);
  const KfResult kf = kf_predict(o, s, r);
  CHECK(std::abs(sample_variance(kf.innovations) - o.S(0, 0)) < 0.03 * o.S(0, 0));
  CHECK(std::abs(kf.mse - o.S(0, 0)) < 0.03 * o.S(0, 0));
  for (std::size_t lag = 1; lag <= 5; ++lag) CHECK(std::abs(autocorrelation(kf.innovations, lag)) < 0.02);
  // The raw output, by contrast, is strongly correlated.
  CHECK(autocorrelation(r.y, 1) > 0.5);
}

TEST_CASE("exact noiseless model has zero innovations") {
  LtiSystem s{Matrix{{0.5, 0.2}, {0.0, 0.3}}, Matrix{{1.0}, {0.5}}, Matrix{{1.0, -1.0}}, Matrix{{0.1}},
              Matrix(2, 2), Matrix(1, 1)};
  std::vector<Vector> u;
  Rng rng(2);
  for (int t = 0; t < 200; ++t) u.push_back(Vector{rng.normal()});
  const RawSeries r = simulate(s, u, 200, 1);
  LtiSystem for_gain = s;
  for_gain.R = Matrix{{1e-9}};
  const KalmanOracle o = riccati_gain(for_gain);
  const KfResult kf = kf_predict(o, s, r);
  for (std::size_t t = 50; t < 200; ++t) CHECK(std::abs(kf.innovations[t][0]) < 1e-12);
}

}  // TEST_SUITE
