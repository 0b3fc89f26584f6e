#include "irnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "irnn/errors.hpp"
#include "irnn/predictor.hpp"
#include "irnn/rng.hpp"

namespace irnn {

TrainConfig TrainConfig::defaults_for(CellKind kind) {
  TrainConfig cfg;
  const CellKind base = vanilla_counterpart(kind);
  cfg.learning_rate = base == CellKind::Rnn ? 6e-4 : 3e-4;
  return cfg;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw UsageError("learning_rate must be a finite non-negative number");
  if (batch_size == 0) throw UsageError("batch_size must be at least 1");
  if (innovation_interval == 0) throw UsageError("innovation_interval must be at least 1");
  if (t_past == 0 || t_future == 0) throw UsageError("t_past and t_future must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw UsageError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw UsageError("Adam epsilon must be positive");
}

void adam_step(WeightSet& w, const Gradients& g, AdamState& st, double eta, double beta1,
               double beta2, double epsilon) {
  auto theta = w.flat();
  if (g.size() != theta.size() || st.m.size() != theta.size() || st.v.size() != theta.size())
    throw ShapeError("adam_step: gradient has " + std::to_string(g.size()) + " entries, parameters " +
                     std::to_string(theta.size()) + ", moments " + std::to_string(st.m.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g.values[i]))
      throw NumericalError("adam_step: non-finite gradient for " + parameter_name(w, i));

  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = g.values[i];
    st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * gi;
    st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * gi * gi;
    const double m_hat = st.m[i] / c1;
    const double v_hat = st.v[i] / c2;
    theta[i] -= eta * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, epoch);
  rng.shuffle(order.begin(), order.end());
  return order;
}

double train_epoch(WeightSet& w, AdamState& st, std::span<const Trajectory> data,
                   const TrainConfig& cfg, std::size_t epoch) {
  if (data.empty()) throw UsageError("train_epoch: empty training set");
  if (st.m.size() != w.parameter_count()) st = AdamState(w.parameter_count());

  const std::vector<std::size_t> order = epoch_order(data.size(), cfg.seed, epoch);
  const std::size_t n_params = w.parameter_count();
  Gradients batch;
  double loss_sum = 0.0;

  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
    batch.values.assign(n_params, 0.0);
    for (std::size_t b = begin; b < end; ++b) {
      const Trajectory& tr = data[order[b]];
      const ForwardResult fr = forward(w, tr, cfg.innovation_source);
      loss_sum += loss(fr.y_hat, tr);
      const Gradients g = backward(fr.tape, tr, w);
      for (std::size_t i = 0; i < n_params; ++i) batch.values[i] += g.values[i];
    }
    const double count = static_cast<double>(end - begin);
    for (double& v : batch.values) v /= count;
    adam_step(w, batch, st, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  }
  return loss_sum / static_cast<double>(data.size());
}

void update_innovations(const WeightSet& w, std::span<Trajectory> data) {
  for (Trajectory& tr : data) {
    tr.validate(w.dims());
    const std::span<const Vector> u(tr.u), y(tr.y);
    WarmupResult wu = warmup(w, u.first(tr.t_past), y.first(tr.t_past));
    tr.e_stored = std::move(wu.innovations);
  }
}

double mean_loss(const WeightSet& w, std::span<const Trajectory> data, InnovationSource source) {
  if (data.empty()) throw UsageError("mean_loss: empty set");
  double sum = 0.0;
  for (const Trajectory& tr : data) sum += loss(forward(w, tr, source).y_hat, tr);
  return sum / static_cast<double>(data.size());
}

bool EarlyStopper::observe(double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

TrainReport fit(const WeightSet& w0, std::vector<Trajectory>& train, std::vector<Trajectory>& val,
                const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw UsageError("fit: empty training set");
  if (val.empty()) throw UsageError("fit: empty validation set");
  for (const auto& tr : train) tr.validate(w0.dims());
  for (const auto& tr : val) tr.validate(w0.dims());

  // Stored innovations are only read by innovation kinds in Stored mode; in
  // the other cases the refresh would be dead work.
  const bool refreshes = w0.mask().any() && cfg.innovation_source == InnovationSource::Stored;
  using clock = std::chrono::steady_clock;

  auto validation_loss = [&](const WeightSet& w) {
    if (refreshes) update_innovations(w, val);
    return mean_loss(w, val, cfg.innovation_source);
  };

  TrainReport report;
  report.best = w0;
  report.last = w0;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  if (cfg.epochs == 0) {
    report.best_val_loss = validation_loss(w0);
    return report;
  }

  WeightSet w = w0;
  AdamState st(w.parameter_count());
  EarlyStopper stopper(cfg.early_stop_tolerance);
  for (std::size_t k = 1; k <= cfg.epochs; ++k) {
    EpochRecord rec;
    rec.epoch = k;
    const auto t0 = clock::now();
    rec.train_loss = train_epoch(w, st, train, cfg, k);
    if (refreshes && k % cfg.innovation_interval == 0) {
      update_innovations(w, train);
      rec.refreshed = true;
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    rec.val_loss = validation_loss(w);
    if (!std::isfinite(rec.val_loss))
      throw NumericalError("fit: non-finite validation loss at epoch " + std::to_string(k));
    report.epochs.push_back(rec);
    report.stop_epoch = k;

    if (stopper.observe(rec.val_loss)) {
      report.best_val_loss = rec.val_loss;
      report.best = w;
      report.best_epoch = k;
    }
    if (stopper.should_stop()) {
      report.early_stopped = k < cfg.epochs;
      break;
    }
  }
  report.last = std::move(w);
  return report;
}

}  // namespace irnn
