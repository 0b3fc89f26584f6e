#include "irnn/cells.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "irnn/errors.hpp"
#include "irnn/rng.hpp"

namespace irnn {

namespace {

constexpr std::array<std::string_view, 1> kRnnModules = {"hidden"};
constexpr std::array<std::string_view, 3> kGruModules = {"reset", "update", "candidate"};
constexpr std::array<std::string_view, 4> kLstmModules = {"forget", "input", "output", "cell"};

constexpr std::array<std::string_view, 1> kRnnPrefixes = {"x"};
constexpr std::array<std::string_view, 3> kGruPrefixes = {"r", "u", "x"};
constexpr std::array<std::string_view, 4> kLstmPrefixes = {"f", "i", "o", "c"};

std::span<const std::string_view> prefixes(CellKind kind) noexcept {
  if (is_gru(kind)) return kGruPrefixes;
  if (is_lstm(kind)) return kLstmPrefixes;
  return kRnnPrefixes;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t module_index(CellKind kind, std::string_view module) {
  const auto names = module_names(kind);
  const auto it = std::find(names.begin(), names.end(), module);
  if (it == names.end()) {
    std::string valid;
    for (auto n : names) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw UsageError("module '" + std::string(module) + "' does not exist in " + to_string(kind) +
                     " (valid: " + valid + ")");
  }
  return static_cast<std::size_t>(it - names.begin());
}

void copy_into(Vector& dst, std::span<const double> src) {
  if (dst.dim() != src.size()) dst = Vector(src.size());
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Rnn: return "Rnn";
    case CellKind::Irnn: return "Irnn";
    case CellKind::Gru: return "Gru";
    case CellKind::Igru: return "Igru";
    case CellKind::Lstm: return "Lstm";
    case CellKind::Ilstm: return "Ilstm";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  const std::string n = lower(name);
  for (CellKind k : kAllCellKinds)
    if (lower(to_string(k)) == n) return k;
  throw UsageError("unknown cell kind '" + std::string(name) +
                   "' (expected rnn, irnn, gru, igru, lstm, ilstm)");
}

bool is_innovation_kind(CellKind kind) noexcept {
  return kind == CellKind::Irnn || kind == CellKind::Igru || kind == CellKind::Ilstm;
}

CellKind vanilla_counterpart(CellKind kind) noexcept {
  switch (kind) {
    case CellKind::Irnn: return CellKind::Rnn;
    case CellKind::Igru: return CellKind::Gru;
    case CellKind::Ilstm: return CellKind::Lstm;
    default: return kind;
  }
}

CellKind innovation_counterpart(CellKind kind) noexcept {
  switch (kind) {
    case CellKind::Rnn: return CellKind::Irnn;
    case CellKind::Gru: return CellKind::Igru;
    case CellKind::Lstm: return CellKind::Ilstm;
    default: return kind;
  }
}

bool is_lstm(CellKind kind) noexcept { return kind == CellKind::Lstm || kind == CellKind::Ilstm; }
bool is_gru(CellKind kind) noexcept { return kind == CellKind::Gru || kind == CellKind::Igru; }

std::size_t family_count(CellKind kind) noexcept { return prefixes(kind).size(); }

std::span<const std::string_view> module_names(CellKind kind) noexcept {
  if (is_gru(kind)) return kGruModules;
  if (is_lstm(kind)) return kLstmModules;
  return kRnnModules;
}

// ---------------------------------------------------------------------------
// InnovationMask

InnovationMask InnovationMask::full(CellKind kind) {
  InnovationMask m;
  m.kind_ = kind;
  if (is_innovation_kind(kind))
    for (std::size_t k = 0; k < family_count(kind); ++k) m.bits_.set(k);
  return m;
}

InnovationMask InnovationMask::none(CellKind kind) {
  InnovationMask m;
  m.kind_ = kind;
  return m;
}

InnovationMask InnovationMask::only(CellKind kind, std::span<const std::string> modules) {
  InnovationMask m = none(kind);
  for (const auto& name : modules) m = m.with(name, true);
  return m;
}

InnovationMask InnovationMask::from_bits(CellKind kind, std::uint8_t bits) {
  const std::size_t n = family_count(kind);
  if (bits >> n) throw UsageError("mask bits exceed the number of modules of " + to_string(kind));
  if (bits && !is_innovation_kind(kind))
    throw UsageError(to_string(kind) + " carries no innovation inputs");
  InnovationMask m;
  m.kind_ = kind;
  m.bits_ = std::bitset<4>(bits);
  return m;
}

InnovationMask InnovationMask::with(std::string_view module, bool on) const {
  const std::size_t k = module_index(kind_, module);
  if (on && !is_innovation_kind(kind_))
    throw UsageError(to_string(kind_) + " carries no innovation inputs; use " +
                     to_string(innovation_counterpart(kind_)));
  InnovationMask m = *this;
  m.bits_.set(k, on);
  return m;
}

std::string InnovationMask::describe() const {
  const std::size_t n = family_count(kind_);
  if (bits_.none()) return "none";
  if (bits_.count() == n) return "all";
  std::string out;
  const auto names = module_names(kind_);
  for (std::size_t k = 0; k < n; ++k)
    if (bits_.test(k)) out += (out.empty() ? "" : "+") + std::string(names[k]);
  return out;
}

std::vector<InnovationMask> all_masks(CellKind kind) {
  if (!is_innovation_kind(kind)) return {InnovationMask::none(kind)};
  std::vector<InnovationMask> out;
  const unsigned n = 1u << family_count(kind);
  for (unsigned bits = 0; bits < n; ++bits)
    out.push_back(InnovationMask::from_bits(kind, static_cast<std::uint8_t>(bits)));
  return out;
}

// ---------------------------------------------------------------------------
// WeightSet

WeightSet WeightSet::zeros(CellKind kind, Dims dims, const InnovationMask& mask,
                           Activation hidden_activation) {
  if (dims.n_x == 0 || dims.n_u == 0 || dims.n_y == 0)
    throw UsageError("cell dimensions must be positive (n_x, n_u, n_y)");
  if (mask.kind() != kind)
    throw UsageError("mask built for " + to_string(mask.kind()) + " used with " + to_string(kind));
  if (mask.any() && !is_innovation_kind(kind))
    throw UsageError(to_string(kind) + " carries no innovation inputs");

  WeightSet w;
  w.kind_ = kind;
  w.dims_ = dims;
  w.mask_ = mask;
  w.activation_ = hidden_activation;

  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool bias) {
    w.layout_.push_back({std::move(name), rows, cols, offset, bias});
    offset += rows * cols;
    return w.layout_.size() - 1;
  };

  const auto pre = prefixes(kind);
  for (std::size_t k = 0; k < pre.size(); ++k) {
    const std::string p(pre[k]);
    Family f{};
    f.wx = add("W_" + p + "x", dims.n_x, dims.n_x, false);
    f.wu = add("W_" + p + "u", dims.n_x, dims.n_u, false);
    f.wy = add("W_" + p + "y", dims.n_x, dims.n_y, false);
    f.we = mask.enabled(k) ? add("W_" + p + "e", dims.n_x, dims.n_y, false) : kNone;
    f.b = add("b_" + p, dims.n_x, 1, true);
    w.families_[k] = f;
  }
  w.w_yx_ = add("W_yx", dims.n_y, dims.n_x, false);
  w.b_y_ = add("b_y", dims.n_y, 1, true);
  w.params_.assign(offset, 0.0);
  return w;
}

void WeightSet::unflatten(std::span<const double> values) {
  if (values.size() != params_.size())
    throw ShapeError("unflatten: expected " + std::to_string(params_.size()) + " values, got " +
                     std::to_string(values.size()));
  std::copy(values.begin(), values.end(), params_.begin());
}

bool WeightSet::has_block(std::string_view name) const noexcept {
  return std::any_of(layout_.begin(), layout_.end(), [&](const BlockInfo& b) { return b.name == name; });
}

MatrixView WeightSet::block(std::string_view name) {
  for (std::size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].name == name) return view(i);
  throw std::out_of_range("no block '" + std::string(name) + "' in " + to_string(kind_));
}

ConstMatrixView WeightSet::block(std::string_view name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].name == name) return view(i);
  throw std::out_of_range("no block '" + std::string(name) + "' in " + to_string(kind_));
}

ConstMatrixView WeightSet::view(std::size_t i) const noexcept {
  const BlockInfo& b = layout_[i];
  return {b.rows, b.cols, params_.data() + b.offset};
}

MatrixView WeightSet::view(std::size_t i) noexcept {
  const BlockInfo& b = layout_[i];
  return {b.rows, b.cols, params_.data() + b.offset};
}

WeightSet init_weights(CellKind kind, Dims dims, const InnovationMask& mask, std::uint64_t seed,
                       Activation hidden_activation) {
  WeightSet w = WeightSet::zeros(kind, dims, mask, hidden_activation);
  for (std::size_t i = 0; i < w.layout().size(); ++i) {
    const BlockInfo& b = w.layout()[i];
    if (b.is_bias) continue;
    const auto stream = stable_hash(b.name);
    Rng rng(seed, stream);
    const double bound = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    MatrixView m = w.view(i);
    for (std::size_t j = 0; j < b.rows * b.cols; ++j) m.data[j] = rng.uniform(-bound, bound);
  }
  return w;
}

CellState zero_state(const WeightSet& w) {
  CellState s;
  s.x = Vector(w.dims().n_x);
  if (is_lstm(w.kind())) s.c = Vector(w.dims().n_x);
  return s;
}

// ---------------------------------------------------------------------------
// Forward step

void step_unchecked(const WeightSet& w, const CellState& s, std::span<const double> u_t,
                    std::span<const double> y_prev, std::span<const double> e_prev,
                    StepRecord& r) {
  const std::size_t n_x = w.dims().n_x;
  copy_into(r.x_prev, s.x.span());
  copy_into(r.c_prev, s.c.span());
  copy_into(r.u, u_t);
  copy_into(r.y_in, y_prev);
  copy_into(r.e_in, e_prev);

  // Accumulates the non-recurrent terms and the bias of family k into `out`.
  auto add_inputs = [&](const WeightSet::Family& f, std::span<double> out) {
    matvec_acc(w.view(f.wu), r.u.span(), out);
    matvec_acc(w.view(f.wy), r.y_in.span(), out);
    if (f.we != WeightSet::kNone) matvec_acc(w.view(f.we), r.e_in.span(), out);
    const ConstMatrixView b = w.view(f.b);
    for (std::size_t i = 0; i < n_x; ++i) out[i] += b.data[i];
  };
  auto affine = [&](std::size_t k) -> Vector& {
    Vector& g = r.gate[k];
    if (g.dim() != n_x) g = Vector(n_x);
    g.fill(0.0);
    const auto& f = w.family(k);
    matvec_acc(w.view(f.wx), r.x_prev.span(), g.span());
    add_inputs(f, g.span());
    return g;
  };

  if (r.x.dim() != n_x) r.x = Vector(n_x);

  switch (w.kind()) {
    case CellKind::Rnn:
    case CellKind::Irnn: {
      Vector& g = affine(0);
      activation_inplace(w.hidden_activation(), g.span());
      r.x = g;
      r.c = Vector();
      break;
    }
    case CellKind::Gru:
    case CellKind::Igru: {
      Vector& reset = affine(0);
      activation_inplace(Activation::Sigmoid, reset.span());
      Vector& update = affine(1);
      activation_inplace(Activation::Sigmoid, update.span());

      const auto& f = w.family(2);
      Vector& q = r.recurrent_candidate;
      if (q.dim() != n_x) q = Vector(n_x);
      q.fill(0.0);
      matvec_acc(w.view(f.wx), r.x_prev.span(), q.span());
      Vector& cand = r.gate[2];
      if (cand.dim() != n_x) cand = Vector(n_x);
      for (std::size_t i = 0; i < n_x; ++i) cand[i] = q[i] * reset[i];
      add_inputs(f, cand.span());
      activation_inplace(Activation::Tanh, cand.span());

      for (std::size_t i = 0; i < n_x; ++i)
        r.x[i] = r.x_prev[i] * (1.0 - update[i]) + cand[i] * update[i];
      r.c = Vector();
      break;
    }
    case CellKind::Lstm:
    case CellKind::Ilstm: {
      Vector& forget = affine(0);
      activation_inplace(Activation::Sigmoid, forget.span());
      Vector& input = affine(1);
      activation_inplace(Activation::Sigmoid, input.span());
      Vector& output = affine(2);
      activation_inplace(Activation::Sigmoid, output.span());
      Vector& cell_in = affine(3);
      activation_inplace(Activation::Tanh, cell_in.span());

      if (r.c.dim() != n_x) r.c = Vector(n_x);
      for (std::size_t i = 0; i < n_x; ++i) {
        r.c[i] = cell_in[i] * input[i] + r.c_prev[i] * forget[i];
        r.x[i] = std::tanh(r.c[i]) * output[i];
      }
      break;
    }
  }

  if (r.y_hat.dim() != w.dims().n_y) r.y_hat = Vector(w.dims().n_y);
  r.y_hat.fill(0.0);
  matvec_acc(w.view(w.output_weight_index()), r.x.span(), r.y_hat.span());
  const ConstMatrixView b_y = w.view(w.output_bias_index());
  for (std::size_t i = 0; i < r.y_hat.dim(); ++i) r.y_hat[i] += b_y.data[i];
}

StepResult step(const WeightSet& w, const CellState& s, const Vector& u_t, const Vector& y_prev,
                const Vector& e_prev) {
  const Dims d = w.dims();
  auto check = [](const char* what, std::size_t got, std::size_t want) {
    if (got != want)
      throw ShapeError(std::string("step: ") + what + " has dim " + std::to_string(got) +
                       ", expected " + std::to_string(want));
  };
  check("x_{t-1}", s.x.dim(), d.n_x);
  check("c_{t-1}", s.c.dim(), is_lstm(w.kind()) ? d.n_x : 0);
  check("u_t", u_t.dim(), d.n_u);
  check("y_{t-1}", y_prev.dim(), d.n_y);
  const bool uses_e = w.mask().any();
  if (uses_e) check("e_{t-1}", e_prev.dim(), d.n_y);

  if (!s.x.all_finite() || !s.c.all_finite() || !u_t.all_finite() || !y_prev.all_finite() ||
      (uses_e && !e_prev.all_finite()))
    throw NumericalError("step: non-finite input");

  StepRecord r;
  const std::span<const double> e = uses_e ? e_prev.span() : std::span<const double>{};
  step_unchecked(w, s, u_t.span(), y_prev.span(), e, r);
  return {CellState{std::move(r.x), std::move(r.c)}, std::move(r.y_hat)};
}

Vector compute_innovation(const Vector& y_t, const Vector& y_hat) {
  if (y_t.dim() != y_hat.dim())
    throw ShapeError("compute_innovation: y has dim " + std::to_string(y_t.dim()) +
                     " but y_hat has dim " + std::to_string(y_hat.dim()));
  Vector e(y_t.dim());
  for (std::size_t i = 0; i < e.dim(); ++i) e[i] = y_t[i] - y_hat[i];
  return e;
}

}  // namespace irnn
