#pragma once

// Single-step recurrences for the six cell kinds.
//
// Every kind is built from "families": one affine map per gate or hidden unit,
//
//     a = W_·x · x_{t-1} + W_·u · u_t + W_·y · y_{t-1} + W_·e · e_{t-1} + b_·
//
// followed by the family's nonlinearity. The innovation term W_·e · e_{t-1}
// exists only for families enabled in the InnovationMask.
//
//   Rnn/Irnn    families {hidden}                         prefix x
//   Gru/Igru    families {reset, update, candidate}       prefixes r, u, x
//   Lstm/Ilstm  families {forget, input, output, cell}    prefixes f, i, o, c
//
// GRU candidate: x' = tanh((W_xx x_{t-1}) ⊙ g^r + W_xu u + W_xy y + W_xe e + b_x),
// x_t = x_{t-1} ⊙ (1 - g^u) + x' ⊙ g^u.
// LSTM: c_t = tanh(a_c) ⊙ g^i + c_{t-1} ⊙ g^f, x_t = tanh(c_t) ⊙ g^o.
// All kinds: ŷ_t = W_yx x_t + b_y.

#include <array>
#include <bitset>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irnn/numerics.hpp"

namespace irnn {

enum class CellKind : std::uint8_t { Rnn = 0, Irnn = 1, Gru = 2, Igru = 3, Lstm = 4, Ilstm = 5 };

inline constexpr std::array<CellKind, 6> kAllCellKinds = {CellKind::Rnn,  CellKind::Irnn,
                                                          CellKind::Gru,  CellKind::Igru,
                                                          CellKind::Lstm, CellKind::Ilstm};

std::string to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);  // case-insensitive: "rnn", "IGRU", ...

bool is_innovation_kind(CellKind kind) noexcept;
CellKind vanilla_counterpart(CellKind kind) noexcept;
CellKind innovation_counterpart(CellKind kind) noexcept;
bool is_lstm(CellKind kind) noexcept;
bool is_gru(CellKind kind) noexcept;

/// Number of gate/hidden families: 1, 3 or 4.
std::size_t family_count(CellKind kind) noexcept;
/// Module names in family order, e.g. {"reset", "update", "candidate"}.
std::span<const std::string_view> module_names(CellKind kind) noexcept;

/// Which families receive the innovation e_{t-1}.
class InnovationMask {
 public:
  InnovationMask() = default;

  /// Every family enabled for innovation kinds; nothing for vanilla kinds.
  static InnovationMask full(CellKind kind);
  static InnovationMask none(CellKind kind);
  /// Enable exactly the named modules. Throws UsageError on an unknown name
  /// or when the kind carries no innovations.
  static InnovationMask only(CellKind kind, std::span<const std::string> modules);
  static InnovationMask from_bits(CellKind kind, std::uint8_t bits);

  CellKind kind() const noexcept { return kind_; }
  bool enabled(std::size_t family) const noexcept { return bits_.test(family); }
  bool any() const noexcept { return bits_.any(); }
  std::uint8_t bits() const noexcept { return static_cast<std::uint8_t>(bits_.to_ulong()); }

  /// Copy with one module switched. Throws UsageError for unknown modules.
  InnovationMask with(std::string_view module, bool on) const;

  /// "all", "none", or a '+'-joined list such as "reset+candidate".
  std::string describe() const;

  friend bool operator==(const InnovationMask& a, const InnovationMask& b) noexcept {
    return a.kind_ == b.kind_ && a.bits_ == b.bits_;
  }

 private:
  CellKind kind_ = CellKind::Rnn;
  std::bitset<4> bits_;
};

/// Every mask a kind admits (2^families for innovation kinds, one for vanilla).
std::vector<InnovationMask> all_masks(CellKind kind);

struct Dims {
  std::size_t n_x = 0;  // hidden size
  std::size_t n_u = 0;  // exogenous inputs
  std::size_t n_y = 0;  // outputs
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct BlockInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for biases
  std::size_t offset = 0;
  bool is_bias = false;
};

/// Version tag of the flattened parameter ordering below.
inline constexpr std::uint32_t kLayoutVersion = 1;

/// All parameters of one cell, stored as one flat vector.
///
/// Flattened ordering (layout version 1): families in the order given by
/// module_names(), and within a family W_·x, W_·u, W_·y, [W_·e], b_·, each
/// matrix row-major; then W_yx and b_y. W_·e is present only when the mask
/// enables that family.
class WeightSet {
 public:
  WeightSet() = default;

  /// All-zero parameters. Throws UsageError on zero dims or a mask whose kind
  /// differs from `kind`.
  static WeightSet zeros(CellKind kind, Dims dims, const InnovationMask& mask,
                         Activation hidden_activation = Activation::Tanh);

  CellKind kind() const noexcept { return kind_; }
  Dims dims() const noexcept { return dims_; }
  const InnovationMask& mask() const noexcept { return mask_; }
  /// σ of the Rnn/Irnn hidden update (gated kinds use their fixed activations).
  Activation hidden_activation() const noexcept { return activation_; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> flat() noexcept { return params_; }
  std::span<const double> flat() const noexcept { return params_; }
  /// Replace all parameters. Throws ShapeError on a length mismatch.
  void unflatten(std::span<const double> values);

  const std::vector<BlockInfo>& layout() const noexcept { return layout_; }
  bool has_block(std::string_view name) const noexcept;
  /// Throws std::out_of_range for absent blocks.
  MatrixView block(std::string_view name);
  ConstMatrixView block(std::string_view name) const;

  struct Family {
    std::size_t wx, wu, wy, we, b;  // layout indices; we == kNone when masked
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  const Family& family(std::size_t k) const noexcept { return families_[k]; }
  ConstMatrixView view(std::size_t layout_index) const noexcept;
  MatrixView view(std::size_t layout_index) noexcept;
  std::size_t output_weight_index() const noexcept { return w_yx_; }
  std::size_t output_bias_index() const noexcept { return b_y_; }

  friend bool operator==(const WeightSet& a, const WeightSet& b) noexcept {
    return a.kind_ == b.kind_ && a.dims_ == b.dims_ && a.mask_ == b.mask_ &&
           a.activation_ == b.activation_ && a.params_ == b.params_;
  }

 private:
  CellKind kind_ = CellKind::Rnn;
  Dims dims_;
  InnovationMask mask_;
  Activation activation_ = Activation::Tanh;
  std::vector<double> params_;
  std::vector<BlockInfo> layout_;
  std::array<Family, 4> families_{};
  std::size_t w_yx_ = 0;
  std::size_t b_y_ = 0;
};

/// Scaled-uniform init: each matrix entry ~ U(±sqrt(6 / (rows + cols))),
/// biases zero. Each block draws from its own stream keyed by (seed, block
/// name), so kinds sharing a block name share its initial values.
WeightSet init_weights(CellKind kind, Dims dims, const InnovationMask& mask, std::uint64_t seed,
                       Activation hidden_activation = Activation::Tanh);

struct CellState {
  Vector x;  // hidden state
  Vector c;  // cell state (LSTM kinds only, otherwise empty)
};

/// x_0 = 0 (and c_0 = 0 for LSTM kinds).
CellState zero_state(const WeightSet& w);

/// Everything one step computed; the unit of the BPTT tape.
struct StepRecord {
  Vector x_prev, c_prev;
  Vector u, y_in, e_in;
  std::array<Vector, 4> gate;  // post-activation value of each family
  Vector recurrent_candidate;  // GRU only: W_xx · x_prev before the reset gate
  Vector x, c;
  Vector y_hat;
};

struct StepResult {
  CellState state;
  Vector y_hat;
};

/// One recurrence step. `e_prev` is ignored by families without innovation
/// weights (all families of vanilla kinds). Throws ShapeError on dimension
/// mismatch, NumericalError on non-finite inputs.
StepResult step(const WeightSet& w, const CellState& s, const Vector& u_t, const Vector& y_prev,
                const Vector& e_prev);

/// Same computation without validation, optionally recording intermediates.
/// Hot path for BPTT and rollouts.
void step_unchecked(const WeightSet& w, const CellState& s, std::span<const double> u_t,
                    std::span<const double> y_prev, std::span<const double> e_prev,
                    StepRecord& out);

/// e_t = y_t - ŷ_t. Throws ShapeError on mismatch.
Vector compute_innovation(const Vector& y_t, const Vector& y_hat);

}  // namespace irnn
