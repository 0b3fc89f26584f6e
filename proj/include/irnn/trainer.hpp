#pragma once

// IU-BPTT training: Adam over mini-batches with innovations held fixed,
// alternating with a refresh of the stored innovations every N epochs, and
// early stopping on validation loss.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "irnn/bptt.hpp"
#include "irnn/cells.hpp"
#include "irnn/trajectory.hpp"

namespace irnn {

struct TrainConfig {
  double learning_rate = 6e-4;
  std::size_t epochs = 100;
  std::size_t innovation_interval = 1;  // N: refresh when epoch mod N == 0
  std::size_t batch_size = 64;
  std::size_t early_stop_tolerance = 5;  // 0 disables early stopping
  std::size_t t_past = 24;
  std::size_t t_future = 5;
  std::uint64_t seed = 0;
  InnovationSource innovation_source = InnovationSource::Stored;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Defaults with the learning rate for `kind`: 6e-4 for (I)RNN, 3e-4 otherwise.
  static TrainConfig defaults_for(CellKind kind);
  /// Throws UsageError on zero batch size, N = 0, non-positive rates or bad Adam constants.
  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place. Throws NumericalError (leaving `w` and
/// `st` untouched) when a gradient entry is non-finite, ShapeError on size mismatch.
void adam_step(WeightSet& w, const Gradients& g, AdamState& st, double eta, double beta1,
               double beta2, double epsilon);

/// Trajectory order of epoch `epoch` (1-based) under `seed`.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// One pass over `data` in the shuffled order; one Adam step per mini-batch on
/// the mean gradient. Returns the mean training loss over all trajectories.
double train_epoch(WeightSet& w, AdamState& st, std::span<const Trajectory> data,
                   const TrainConfig& cfg, std::size_t epoch);

/// Recomputes every trajectory's e_stored by the self-consistent warmup
/// recursion under `w`. u and y are untouched.
void update_innovations(const WeightSet& w, std::span<Trajectory> data);

/// Mean horizon loss over `data` (forward only).
double mean_loss(const WeightSet& w, std::span<const Trajectory> data,
                 InnovationSource source = InnovationSource::Stored);

/// Early-stopping bookkeeping: an epoch improves when its validation loss is
/// strictly below the best so far; training stops after `tolerance`
/// consecutive epochs without improvement (never when tolerance is 0).
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t tolerance) : tolerance_(tolerance) {}

  /// Returns true when `val_loss` is a new best.
  bool observe(double val_loss);
  bool should_stop() const noexcept { return tolerance_ > 0 && since_best_ >= tolerance_; }
  double best() const noexcept { return best_; }

 private:
  std::size_t tolerance_;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;       // wall time of train_epoch plus the refresh
  bool refreshed = false;     // training-set innovations refreshed after this epoch
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stop_epoch = 0;  // last epoch run
  std::size_t best_epoch = 0;  // 0 only when no epoch ran; best is then w0
  double best_val_loss = 0.0;
  bool early_stopped = false;
  WeightSet best;
  WeightSet last;
};

/// Runs up to cfg.epochs epochs from w0. Both sets are modified only in their
/// e_stored slots. Throws UsageError for empty sets.
TrainReport fit(const WeightSet& w0, std::vector<Trajectory>& train, std::vector<Trajectory>& val,
                const TrainConfig& cfg);

}  // namespace irnn
