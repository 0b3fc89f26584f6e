#pragma once

// Forward pass over a trajectory, horizon loss, and exact reverse-mode
// gradients.
//
// Warmup (t <= T_p): step t consumes (u_t, y_{t-1}, e_{t-1}) with y_0 = e_0 = 0.
// Horizon (t > T_p): step t consumes (u_t, ŷ_{t-1}, 0), i.e. the network's own
// prediction is fed back and future innovations are zero.
//
// Loss: (1/T_f) Σ_{t = T_p+1..T} ||y_t - ŷ_t||².
//
// Backward treats the innovations fed to the network as constants, whichever
// way they were produced, and propagates through hidden/cell states over all
// T steps and through the ŷ feedback chain of the horizon.

#include <cstddef>
#include <string>
#include <vector>

#include "irnn/cells.hpp"
#include "irnn/trajectory.hpp"

namespace irnn {

enum class InnovationSource {
  Stored,          // consume Trajectory::e_stored (refreshed by the trainer)
  InPassDetached,  // recompute e_t = y_t - ŷ_t during the warmup, no gradient through it
};

std::string to_string(InnovationSource s);
InnovationSource parse_innovation_source(const std::string& name);

struct Tape {
  std::vector<StepRecord> steps;  // steps[t-1] is time step t
  std::size_t t_past = 0;
  std::size_t t_future = 0;

  bool is_warmup(std::size_t t) const noexcept { return t <= t_past; }  // t is 1-based
};

struct ForwardResult {
  std::vector<Vector> y_hat;  // length T; y_hat[t-1] = ŷ_t
  Tape tape;
};

/// Throws ShapeError on inconsistent trajectories, NumericalError naming the
/// first time step whose state or prediction is non-finite.
ForwardResult forward(const WeightSet& w, const Trajectory& traj,
                      InnovationSource source = InnovationSource::Stored);

/// Horizon MSE. Throws UsageError when T_f = 0.
double loss(const std::vector<Vector>& y_hat, const Trajectory& traj);

/// Gradient in WeightSet::flat() order.
struct Gradients {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool all_finite() const noexcept;
};

/// Throws ShapeError when the tape does not belong to (traj, w).
Gradients backward(const Tape& tape, const Trajectory& traj, const WeightSet& w);

struct GradCheckEntry {
  std::size_t index = 0;  // position in the flattened vector
  std::string name;       // e.g. "W_xe[3,0]"
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;  // |a - n| / max(|a|, |n|, 1e-8)
  bool skipped = false;    // both exactly zero (loss-invariant direction)
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t worst = 0;  // index into entries
  std::size_t skipped = 0;

  bool passed(double tolerance = 1e-4) const noexcept { return max_rel_error < tolerance; }
  const GradCheckEntry& worst_entry() const { return entries.at(worst); }
};

/// Compares `analytic` against central differences (ℓ(θ+h) - ℓ(θ-h)) / 2h,
/// holding the trajectory and its innovations fixed. In InPassDetached mode the
/// innovations are frozen at their in-pass values under `w`. h must lie in
/// [1e-7, 1e-3].
GradCheckReport compare_gradients(const WeightSet& w, const Trajectory& traj,
                                  const Gradients& analytic, double h,
                                  InnovationSource source = InnovationSource::Stored);

/// compare_gradients against backward().
GradCheckReport grad_check(const WeightSet& w, const Trajectory& traj, double h = 1e-5,
                           InnovationSource source = InnovationSource::Stored);

/// "W_xx[1,2]"-style label of a flattened parameter index.
std::string parameter_name(const WeightSet& w, std::size_t index);

}  // namespace irnn
