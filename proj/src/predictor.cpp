#include "irnn/predictor.hpp"

#include <string>

#include "irnn/errors.hpp"

namespace irnn {

namespace {

void check_dims(const WeightSet& w, std::span<const Vector> u, std::span<const Vector> y, const char* who) {
  const Dims d = w.dims();
  if (!y.empty() && u.size() != y.size())
    throw ShapeError(std::string(who) + ": " + std::to_string(u.size()) + " inputs but " +
                     std::to_string(y.size()) + " outputs");
  for (const auto& v : u)
    if (v.dim() != d.n_u) throw ShapeError(std::string(who) + ": input dim mismatch");
  for (const auto& v : y)
    if (v.dim() != d.n_y) throw ShapeError(std::string(who) + ": output dim mismatch");
}

double squared_norm_diff(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double r = a[i] - b[i];
    s += r * r;
  }
  return s;
}

}  // namespace

WarmupResult warmup(const WeightSet& w, std::span<const Vector> u, std::span<const Vector> y) {
  if (u.empty()) throw ShapeError("warmup: T_p must be at least 1");
  check_dims(w, u, y, "warmup");
  if (y.size() != u.size()) throw ShapeError("warmup: outputs required for every warmup step");

  const std::size_t n_y = w.dims().n_y;
  const bool uses_e = w.mask().any();
  WarmupResult out;
  out.state = zero_state(w);
  out.y_hat.reserve(u.size());
  out.innovations.reserve(u.size());

  Vector y_in(n_y), e_in(n_y);
  StepRecord rec;
  for (std::size_t t = 0; t < u.size(); ++t) {
    step_unchecked(w, out.state, u[t].span(), y_in.span(),
                   uses_e ? e_in.span() : std::span<const double>{}, rec);
    if (!rec.x.all_finite() || !rec.y_hat.all_finite())
      throw NumericalError("warmup: non-finite state or prediction", static_cast<std::ptrdiff_t>(t + 1));
    out.state.x = rec.x;
    out.state.c = rec.c;
    Vector e(n_y);
    for (std::size_t i = 0; i < n_y; ++i) e[i] = y[t][i] - rec.y_hat[i];
    out.y_hat.push_back(rec.y_hat);
    out.innovations.push_back(e);
    y_in = y[t];
    e_in = e;
  }
  return out;
}

RolloutResult rollout(const WeightSet& w, const CellState& state, const Vector& last_y_hat,
                      std::span<const Vector> u_future, std::span<const Vector> y_future) {
  if (u_future.empty()) throw ShapeError("rollout: T_f must be at least 1");
  check_dims(w, u_future, y_future, "rollout");
  if (last_y_hat.dim() != w.dims().n_y) throw ShapeError("rollout: last prediction has wrong dim");
  if (state.x.dim() != w.dims().n_x) throw ShapeError("rollout: state has wrong dim");

  const Vector zeros(w.dims().n_y);
  const bool uses_e = w.mask().any();
  RolloutResult out;
  out.state = state;
  Vector y_in = last_y_hat;
  StepRecord rec;
  for (std::size_t k = 0; k < u_future.size(); ++k) {
    step_unchecked(w, out.state, u_future[k].span(), y_in.span(),
                   uses_e ? zeros.span() : std::span<const double>{}, rec);
    if (!rec.x.all_finite() || !rec.y_hat.all_finite())
      throw NumericalError("rollout: non-finite state or prediction", static_cast<std::ptrdiff_t>(k + 1));
    out.state.x = rec.x;
    out.state.c = rec.c;
    out.predictions.push_back(rec.y_hat);
    if (!y_future.empty()) out.squared_errors.push_back(squared_norm_diff(y_future[k], rec.y_hat));
    y_in = rec.y_hat;
  }
  return out;
}

StepMse evaluate(const WeightSet& w, std::span<const Trajectory> test_set) {
  if (test_set.empty()) throw UsageError("evaluate: empty test set");
  const std::size_t t_future = test_set.front().t_future;
  if (t_future == 0) throw UsageError("evaluate: trajectories have no prediction horizon");

  StepMse out;
  out.per_step.assign(t_future, 0.0);
  for (const Trajectory& tr : test_set) {
    tr.validate(w.dims());
    if (tr.t_future != t_future) throw ShapeError("evaluate: trajectories differ in horizon length");
    const std::span<const Vector> u(tr.u), y(tr.y);
    const WarmupResult wu = warmup(w, u.first(tr.t_past), y.first(tr.t_past));
    const RolloutResult ro =
        rollout(w, wu.state, wu.last_prediction(), u.subspan(tr.t_past), y.subspan(tr.t_past));
    for (std::size_t k = 0; k < t_future; ++k) out.per_step[k] += ro.squared_errors[k];
  }
  const double m = static_cast<double>(test_set.size());
  double sum = 0.0;
  for (double& v : out.per_step) {
    v /= m;
    sum += v;
  }
  out.average = sum / static_cast<double>(t_future);
  out.trajectories = test_set.size();
  return out;
}

StepMse naive_baseline(std::span<const Trajectory> test_set) {
  if (test_set.empty()) throw UsageError("naive_baseline: empty test set");
  const std::size_t t_future = test_set.front().t_future;
  if (t_future == 0) throw UsageError("naive_baseline: trajectories have no prediction horizon");

  StepMse out;
  out.per_step.assign(t_future, 0.0);
  for (const Trajectory& tr : test_set) {
    if (tr.t_future != t_future || tr.y.size() != tr.length() || tr.t_past == 0)
      throw ShapeError("naive_baseline: inconsistent trajectory");
    const Vector& held = tr.y[tr.t_past - 1];
    for (std::size_t k = 0; k < t_future; ++k)
      out.per_step[k] += squared_norm_diff(tr.y[tr.t_past + k], held);
  }
  const double m = static_cast<double>(test_set.size());
  double sum = 0.0;
  for (double& v : out.per_step) {
    v /= m;
    sum += v;
  }
  out.average = sum / static_cast<double>(t_future);
  out.trajectories = test_set.size();
  return out;
}

double one_step_mse(const WeightSet& w, std::span<const Vector> u, std::span<const Vector> y,
                    std::size_t burn_in) {
  if (u.size() <= burn_in) throw UsageError("one_step_mse: series shorter than the burn-in");
  const WarmupResult wu = warmup(w, u, y);
  double sum = 0.0;
  for (std::size_t t = burn_in; t < wu.innovations.size(); ++t) {
    const Vector& e = wu.innovations[t];
    for (std::size_t i = 0; i < e.dim(); ++i) sum += e[i] * e[i];
  }
  return sum / static_cast<double>(u.size() - burn_in);
}

}  // namespace irnn
