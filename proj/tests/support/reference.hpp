#pragma once

// Straight-line reference evaluator used as an oracle by the unit tests.
// Reads weights by block name and evaluates the recurrences with plain scalar
// loops; shares no code with irnn::step_unchecked or the matvec kernels.

#include <cmath>
#include <string>
#include <vector>

#include "irnn/cells.hpp"
#include "irnn/rng.hpp"
#include "irnn/trajectory.hpp"

namespace irnn::testing {

using Vec = std::vector<double>;

inline double ref_sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline Vec ref_affine(const WeightSet& w, const std::string& p, const Vec& x, const Vec& u, const Vec& y,
                      const Vec& e, bool reset_gru = false, const Vec& reset = {}) {
  const Dims d = w.dims();
  Vec out(d.n_x, 0.0);
  const auto Wx = w.block("W_" + p + "x");
  const auto Wu = w.block("W_" + p + "u");
  const auto Wy = w.block("W_" + p + "y");
  const auto b = w.block("b_" + p);
  const bool has_e = w.has_block("W_" + p + "e");
  for (std::size_t i = 0; i < d.n_x; ++i) {
    double rec = 0.0;
    for (std::size_t j = 0; j < d.n_x; ++j) rec += Wx(i, j) * x[j];
    if (reset_gru) rec *= reset[i];
    double s = rec;
    for (std::size_t j = 0; j < d.n_u; ++j) s += Wu(i, j) * u[j];
    for (std::size_t j = 0; j < d.n_y; ++j) s += Wy(i, j) * y[j];
    if (has_e) {
      const auto We = w.block("W_" + p + "e");
      for (std::size_t j = 0; j < d.n_y; ++j) s += We(i, j) * e[j];
    }
    out[i] = s + b(i, 0);
  }
  return out;
}

struct RefState {
  Vec x, c;
};

/// One step; returns ŷ_t and updates `s`.
inline Vec ref_step(const WeightSet& w, RefState& s, const Vec& u, const Vec& y, const Vec& e) {
  const Dims d = w.dims();
  Vec x_new(d.n_x);
  switch (w.kind()) {
    case CellKind::Rnn:
    case CellKind::Irnn: {
      const Vec a = ref_affine(w, "x", s.x, u, y, e);
      for (std::size_t i = 0; i < d.n_x; ++i)
        x_new[i] = w.hidden_activation() == Activation::Tanh ? std::tanh(a[i]) : ref_sigmoid(a[i]);
      break;
    }
    case CellKind::Gru:
    case CellKind::Igru: {
      const Vec ar = ref_affine(w, "r", s.x, u, y, e);
      const Vec au = ref_affine(w, "u", s.x, u, y, e);
      Vec r(d.n_x), z(d.n_x);
      for (std::size_t i = 0; i < d.n_x; ++i) {
        r[i] = ref_sigmoid(ar[i]);
        z[i] = ref_sigmoid(au[i]);
      }
      const Vec ac = ref_affine(w, "x", s.x, u, y, e, true, r);
      for (std::size_t i = 0; i < d.n_x; ++i)
        x_new[i] = s.x[i] * (1.0 - z[i]) + std::tanh(ac[i]) * z[i];
      break;
    }
    case CellKind::Lstm:
    case CellKind::Ilstm: {
      const Vec af = ref_affine(w, "f", s.x, u, y, e);
      const Vec ai = ref_affine(w, "i", s.x, u, y, e);
      const Vec ao = ref_affine(w, "o", s.x, u, y, e);
      const Vec ac = ref_affine(w, "c", s.x, u, y, e);
      for (std::size_t i = 0; i < d.n_x; ++i) {
        s.c[i] = std::tanh(ac[i]) * ref_sigmoid(ai[i]) + s.c[i] * ref_sigmoid(af[i]);
        x_new[i] = std::tanh(s.c[i]) * ref_sigmoid(ao[i]);
      }
      break;
    }
  }
  s.x = x_new;
  const auto Wyx = w.block("W_yx");
  const auto by = w.block("b_y");
  Vec yhat(d.n_y);
  for (std::size_t k = 0; k < d.n_y; ++k) {
    double acc = by(k, 0);
    for (std::size_t j = 0; j < d.n_x; ++j) acc += Wyx(k, j) * s.x[j];
    yhat[k] = acc;
  }
  return yhat;
}

inline RefState ref_zero_state(const WeightSet& w) {
  return {Vec(w.dims().n_x, 0.0), Vec(w.dims().n_x, 0.0)};
}

inline Vec to_vec(const Vector& v) { return Vec(v.begin(), v.end()); }

/// Training-time forward with stored innovations: returns ŷ_1..ŷ_T.
inline std::vector<Vec> ref_forward(const WeightSet& w, const Trajectory& tr) {
  const Dims d = w.dims();
  RefState s = ref_zero_state(w);
  std::vector<Vec> out;
  Vec zeros(d.n_y, 0.0);
  for (std::size_t t = 1; t <= tr.length(); ++t) {
    Vec y_in = zeros, e_in = zeros;
    if (t <= tr.t_past) {
      if (t > 1) {
        y_in = to_vec(tr.y[t - 2]);
        e_in = to_vec(tr.e_stored[t - 2]);
      }
    } else {
      y_in = out.back();
    }
    out.push_back(ref_step(w, s, to_vec(tr.u[t - 1]), y_in, e_in));
  }
  return out;
}

/// Self-consistent innovations over the warmup: e_t = y_t - ŷ_t with ŷ_t
/// computed from e_{t-1} of the same pass.
inline std::vector<Vec> ref_innovations(const WeightSet& w, const Trajectory& tr, RefState* final_state = nullptr) {
  const Dims d = w.dims();
  RefState s = ref_zero_state(w);
  std::vector<Vec> e;
  Vec y_in(d.n_y, 0.0), e_in(d.n_y, 0.0);
  for (std::size_t t = 1; t <= tr.t_past; ++t) {
    const Vec yhat = ref_step(w, s, to_vec(tr.u[t - 1]), y_in, e_in);
    Vec et(d.n_y);
    for (std::size_t k = 0; k < d.n_y; ++k) et[k] = tr.y[t - 1][k] - yhat[k];
    e.push_back(et);
    y_in = to_vec(tr.y[t - 1]);
    e_in = et;
  }
  if (final_state) *final_state = s;
  return e;
}

/// Random trajectory with N(0, 1) data and, optionally, random stored innovations.
inline Trajectory random_trajectory(Dims d, std::size_t t_past, std::size_t t_future, std::uint64_t seed,
                                    bool random_innovations = true) {
  Rng rng(seed);
  Trajectory tr;
  tr.t_past = t_past;
  tr.t_future = t_future;
  for (std::size_t t = 0; t < t_past + t_future; ++t) {
    Vector u(d.n_u), y(d.n_y);
    for (auto& v : u) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    tr.u.push_back(u);
    tr.y.push_back(y);
  }
  for (std::size_t t = 0; t < t_past; ++t) {
    Vector e(d.n_y);
    if (random_innovations)
      for (auto& v : e) v = 0.5 * rng.normal();
    tr.e_stored.push_back(e);
  }
  return tr;
}

/// Copies every block present in both weight sets from `src` into `dst`.
inline void copy_shared_blocks(const WeightSet& src, WeightSet& dst) {
  for (const auto& b : src.layout()) {
    if (!dst.has_block(b.name)) continue;
    const auto s = src.block(b.name);
    auto t = dst.block(b.name);
    for (std::size_t i = 0; i < b.rows * b.cols; ++i) t.data[i] = s.data[i];
  }
}

}  // namespace irnn::testing
