#pragma once

// Inference: warmup over observed data with innovations computed on the fly,
// then closed-loop rollout with zero future innovations and ŷ feedback.

#include <cstddef>
#include <span>
#include <vector>

#include "irnn/cells.hpp"
#include "irnn/trajectory.hpp"

namespace irnn {

struct WarmupResult {
  CellState state;                   // state after consuming step T_p
  std::vector<Vector> y_hat;         // one-step predictions ŷ_1..ŷ_{T_p}
  std::vector<Vector> innovations;   // e_t = y_t - ŷ_t, t = 1..T_p
  const Vector& last_prediction() const { return y_hat.back(); }
};

/// Warmup recursion from the zero state: step t consumes (u_t, y_{t-1}, e_{t-1})
/// with y_0 = e_0 = 0, where e_{t-1} comes from this same pass.
/// Throws ShapeError for T_p = 0 or mismatched lengths/dims.
WarmupResult warmup(const WeightSet& w, std::span<const Vector> u, std::span<const Vector> y);

struct RolloutResult {
  std::vector<Vector> predictions;   // ŷ_{T_p+k | T_p}, k = 1..T_f
  std::vector<double> squared_errors;  // ||y - ŷ||² per step; empty without targets
  CellState state;                   // terminal state
};

/// Iterates step t consuming (u_t, ŷ_{t-1}, 0), starting from `state` and the
/// last prediction. `y_future` may be empty (no error accounting) or match
/// `u_future` in length.
RolloutResult rollout(const WeightSet& w, const CellState& state, const Vector& last_y_hat,
                      std::span<const Vector> u_future, std::span<const Vector> y_future = {});

/// Per-horizon-step mean of ||y - ŷ||² over a set of trajectories.
struct StepMse {
  std::vector<double> per_step;  // k = 1..T_f
  double average = 0.0;          // mean of per_step
  std::size_t trajectories = 0;
};

/// Throws UsageError for an empty set, ShapeError for inconsistent trajectories.
StepMse evaluate(const WeightSet& w, std::span<const Trajectory> test_set);

/// Hold-last-value predictor ŷ_{T_p+k | T_p} = y_{T_p}.
StepMse naive_baseline(std::span<const Trajectory> test_set);

/// Mean one-step-ahead squared error of the warmup recursion run over a whole
/// series, skipping the first `burn_in` predictions.
double one_step_mse(const WeightSet& w, std::span<const Vector> u, std::span<const Vector> y,
                    std::size_t burn_in = 0);

}  // namespace irnn
