#include "irnn/bptt.hpp"

#include <algorithm>
#include <cmath>

#include "irnn/errors.hpp"

namespace irnn {

namespace {

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Parameter-gradient and input-gradient accumulation for one family whose
// pre-activation gradient is `da`. When `recurrent` is false the x_{t-1} term
// is handled by the caller (GRU candidate).
void accumulate_family(const WeightSet& w, WeightSet& g, std::size_t k, const StepRecord& r,
                       std::span<const double> da, bool recurrent, std::span<double> dx_prev,
                       std::span<double> dy_in) {
  const auto& f = w.family(k);
  if (recurrent) {
    outer_acc(g.view(f.wx), da, r.x_prev.span());
    matvec_transpose_acc(w.view(f.wx), da, dx_prev);
  }
  outer_acc(g.view(f.wu), da, r.u.span());
  outer_acc(g.view(f.wy), da, r.y_in.span());
  matvec_transpose_acc(w.view(f.wy), da, dy_in);
  if (f.we != WeightSet::kNone) outer_acc(g.view(f.we), da, r.e_in.span());
  double* b = g.view(f.b).data;
  for (std::size_t i = 0; i < da.size(); ++i) b[i] += da[i];
}

}  // namespace

std::string to_string(InnovationSource s) {
  return s == InnovationSource::Stored ? "stored" : "in_pass_detached";
}

InnovationSource parse_innovation_source(const std::string& name) {
  if (name == "stored") return InnovationSource::Stored;
  if (name == "in_pass_detached") return InnovationSource::InPassDetached;
  throw UsageError("unknown innovation_source '" + name + "' (expected stored or in_pass_detached)");
}

bool Gradients::all_finite() const noexcept { return finite(values); }

ForwardResult forward(const WeightSet& w, const Trajectory& traj, InnovationSource source) {
  const Dims d = w.dims();
  traj.validate(d);
  const std::size_t T = traj.length();
  const bool uses_e = w.mask().any();

  ForwardResult out;
  out.tape.t_past = traj.t_past;
  out.tape.t_future = traj.t_future;
  out.tape.steps.resize(T);
  out.y_hat.reserve(T);

  const Vector zeros_y(d.n_y);
  Vector e_in(d.n_y);
  CellState state = zero_state(w);

  for (std::size_t t = 1; t <= T; ++t) {
    std::span<const double> y_in = zeros_y.span();
    e_in.fill(0.0);
    if (t <= traj.t_past) {
      if (t > 1) {
        y_in = traj.y[t - 2].span();
        if (source == InnovationSource::Stored) {
          e_in = traj.e_stored[t - 2];
        } else {
          const Vector& prev = out.y_hat[t - 2];
          for (std::size_t i = 0; i < d.n_y; ++i) e_in[i] = traj.y[t - 2][i] - prev[i];
        }
      }
    } else {
      y_in = out.y_hat[t - 2].span();
    }

    StepRecord& rec = out.tape.steps[t - 1];
    step_unchecked(w, state, traj.u[t - 1].span(), y_in,
                   uses_e ? e_in.span() : std::span<const double>{}, rec);
    if (!finite(rec.y_hat.span()) || !finite(rec.x.span()) || !finite(rec.c.span()))
      throw NumericalError("forward: non-finite value at time step " + std::to_string(t),
                           static_cast<std::ptrdiff_t>(t));
    state.x = rec.x;
    state.c = rec.c;
    out.y_hat.push_back(rec.y_hat);
  }
  return out;
}

double loss(const std::vector<Vector>& y_hat, const Trajectory& traj) {
  if (traj.t_future == 0) throw UsageError("loss: prediction horizon T_f must be at least 1");
  if (y_hat.size() != traj.length())
    throw ShapeError("loss: " + std::to_string(y_hat.size()) + " predictions for a trajectory of length " +
                     std::to_string(traj.length()));
  double total = 0.0;
  for (std::size_t t = traj.t_past; t < traj.length(); ++t) {
    if (y_hat[t].dim() != traj.y[t].dim()) throw ShapeError("loss: prediction/target dim mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < y_hat[t].dim(); ++i) {
      const double r = traj.y[t][i] - y_hat[t][i];
      sq += r * r;
    }
    total += sq;
  }
  return total / static_cast<double>(traj.t_future);
}

Gradients backward(const Tape& tape, const Trajectory& traj, const WeightSet& w) {
  const Dims d = w.dims();
  const std::size_t T = traj.length();
  if (tape.steps.size() != T || tape.t_past != traj.t_past || tape.t_future != traj.t_future)
    throw ShapeError("backward: tape does not match the trajectory");
  if (traj.t_future == 0) throw UsageError("backward: prediction horizon T_f must be at least 1");
  if (!tape.steps.empty() && tape.steps.front().x.dim() != d.n_x)
    throw ShapeError("backward: tape was recorded with different weights");

  WeightSet g = w;
  std::fill(g.flat().begin(), g.flat().end(), 0.0);

  const std::size_t n_x = d.n_x;
  const double scale = 2.0 / static_cast<double>(traj.t_future);
  const ConstMatrixView w_yx = w.view(w.output_weight_index());
  const MatrixView g_yx = g.view(g.output_weight_index());
  double* g_by = g.view(g.output_bias_index()).data;

  Vector dx(n_x), dc(n_x), dx_prev(n_x), dc_prev(n_x);
  Vector dy(d.n_y), dy_in(d.n_y), feedback(d.n_y);
  std::array<Vector, 4> da;
  for (auto& v : da) v = Vector(n_x);

  for (std::size_t t = T; t >= 1; --t) {
    const StepRecord& r = tape.steps[t - 1];

    // dℓ/dŷ_t: direct loss term on the horizon plus the feedback from step t+1.
    dy = feedback;
    if (t > traj.t_past)
      for (std::size_t i = 0; i < d.n_y; ++i) dy[i] += scale * (r.y_hat[i] - traj.y[t - 1][i]);
    outer_acc(g_yx, dy.span(), r.x.span());
    for (std::size_t i = 0; i < d.n_y; ++i) g_by[i] += dy[i];
    matvec_transpose_acc(w_yx, dy.span(), dx.span());

    dx_prev.fill(0.0);
    dc_prev.fill(0.0);
    dy_in.fill(0.0);

    switch (w.kind()) {
      case CellKind::Rnn:
      case CellKind::Irnn: {
        const Activation act = w.hidden_activation();
        for (std::size_t i = 0; i < n_x; ++i) da[0][i] = dx[i] * activation_derivative(act, r.gate[0][i]);
        accumulate_family(w, g, 0, r, da[0].span(), true, dx_prev.span(), dy_in.span());
        break;
      }
      case CellKind::Gru:
      case CellKind::Igru: {
        const Vector& reset = r.gate[0];
        const Vector& update = r.gate[1];
        const Vector& cand = r.gate[2];
        const Vector& q = r.recurrent_candidate;
        Vector& da_r = da[0];
        Vector& da_u = da[1];
        Vector& da_c = da[2];
        Vector& dq = da[3];
        for (std::size_t i = 0; i < n_x; ++i) {
          dx_prev[i] = dx[i] * (1.0 - update[i]);
          const double dcand = dx[i] * update[i];
          const double dupdate = dx[i] * (cand[i] - r.x_prev[i]);
          da_c[i] = dcand * (1.0 - cand[i] * cand[i]);
          dq[i] = da_c[i] * reset[i];
          const double dreset = da_c[i] * q[i];
          da_r[i] = dreset * reset[i] * (1.0 - reset[i]);
          da_u[i] = dupdate * update[i] * (1.0 - update[i]);
        }
        const auto& fc = w.family(2);
        outer_acc(g.view(fc.wx), dq.span(), r.x_prev.span());
        matvec_transpose_acc(w.view(fc.wx), dq.span(), dx_prev.span());
        accumulate_family(w, g, 2, r, da_c.span(), false, dx_prev.span(), dy_in.span());
        accumulate_family(w, g, 0, r, da_r.span(), true, dx_prev.span(), dy_in.span());
        accumulate_family(w, g, 1, r, da_u.span(), true, dx_prev.span(), dy_in.span());
        break;
      }
      case CellKind::Lstm:
      case CellKind::Ilstm: {
        const Vector& forget = r.gate[0];
        const Vector& input = r.gate[1];
        const Vector& output = r.gate[2];
        const Vector& cell_in = r.gate[3];
        for (std::size_t i = 0; i < n_x; ++i) {
          const double tc = std::tanh(r.c[i]);
          const double doutput = dx[i] * tc;
          const double dcell = dc[i] + dx[i] * output[i] * (1.0 - tc * tc);
          const double dcell_in = dcell * input[i];
          const double dinput = dcell * cell_in[i];
          const double dforget = dcell * r.c_prev[i];
          dc_prev[i] = dcell * forget[i];
          da[0][i] = dforget * forget[i] * (1.0 - forget[i]);
          da[1][i] = dinput * input[i] * (1.0 - input[i]);
          da[2][i] = doutput * output[i] * (1.0 - output[i]);
          da[3][i] = dcell_in * (1.0 - cell_in[i] * cell_in[i]);
        }
        for (std::size_t k = 0; k < 4; ++k)
          accumulate_family(w, g, k, r, da[k].span(), true, dx_prev.span(), dy_in.span());
        break;
      }
    }

    // Step t reads ŷ_{t-1} only on the horizon; in the warmup y_{t-1} is data.
    if (t > traj.t_past)
      feedback = dy_in;
    else
      feedback.fill(0.0);
    std::swap(dx, dx_prev);
    std::swap(dc, dc_prev);
  }

  Gradients out;
  out.values.assign(g.flat().begin(), g.flat().end());
  return out;
}

std::string parameter_name(const WeightSet& w, std::size_t index) {
  for (const auto& b : w.layout()) {
    if (index >= b.offset && index < b.offset + b.rows * b.cols) {
      const std::size_t local = index - b.offset;
      if (b.is_bias) return b.name + "[" + std::to_string(local) + "]";
      return b.name + "[" + std::to_string(local / b.cols) + "," + std::to_string(local % b.cols) + "]";
    }
  }
  return "?";
}

GradCheckReport compare_gradients(const WeightSet& w, const Trajectory& traj,
                                  const Gradients& analytic, double h, InnovationSource source) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw UsageError("grad_check: step size h must lie in [1e-7, 1e-3]");
  if (analytic.size() != w.parameter_count())
    throw ShapeError("grad_check: gradient has " + std::to_string(analytic.size()) +
                     " entries, weights have " + std::to_string(w.parameter_count()));

  // Detached innovations are constants of the gradient: freeze them at their
  // values under w and difference the stored-innovation loss instead.
  Trajectory frozen = traj;
  if (source == InnovationSource::InPassDetached) {
    const ForwardResult base = forward(w, traj, source);
    for (std::size_t t = 0; t < traj.t_past; ++t)
      for (std::size_t i = 0; i < w.dims().n_y; ++i)
        frozen.e_stored[t][i] = traj.y[t][i] - base.y_hat[t][i];
  }

  GradCheckReport report;
  WeightSet probe = w;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < w.parameter_count(); ++i) {
    const double theta = w.flat()[i];
    probe.flat()[i] = theta + h;
    const double up = loss(forward(probe, frozen).y_hat, frozen);
    probe.flat()[i] = theta - h;
    const double down = loss(forward(probe, frozen).y_hat, frozen);
    probe.flat()[i] = theta;

    GradCheckEntry e;
    e.index = i;
    e.name = parameter_name(w, i);
    e.analytic = analytic.values[i];
    e.numeric = (up - down) / (2.0 * h);
    if (e.analytic == 0.0 && e.numeric == 0.0) {
      e.skipped = true;
      ++report.skipped;
    } else {
      const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-8});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      sum += e.rel_error;
      ++counted;
      if (counted == 1 || e.rel_error > report.max_rel_error) {
        report.max_rel_error = e.rel_error;
        report.worst = report.entries.size();
      }
    }
    report.entries.push_back(std::move(e));
  }
  report.mean_rel_error = counted ? sum / static_cast<double>(counted) : 0.0;
  return report;
}

GradCheckReport grad_check(const WeightSet& w, const Trajectory& traj, double h, InnovationSource source) {
  const ForwardResult fw = forward(w, traj, source);
  return compare_gradients(w, traj, backward(fw.tape, traj, w), h, source);
}

}  // namespace irnn
