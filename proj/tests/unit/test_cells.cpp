#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "irnn/cells.hpp"
#include "irnn/errors.hpp"
#include "irnn/rng.hpp"
#include "reference.hpp"

using namespace irnn;
using namespace irnn::testing;

namespace {

WeightSet zero_cell(CellKind kind, Dims d = {1, 1, 1}) {
  return WeightSet::zeros(kind, d, InnovationMask::full(kind));
}

Vector randn(Rng& rng, std::size_t n, double scale = 1.0) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

void randomize(WeightSet& w, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  for (double& p : w.flat()) p = scale * rng.normal();
}

}  // namespace

TEST_SUITE("cells") {

TEST_CASE("kind names and counterparts") {
  for (CellKind k : kAllCellKinds) {
    CHECK(parse_cell_kind(to_string(k)) == k);
    CHECK(!is_innovation_kind(vanilla_counterpart(k)));
    CHECK(is_innovation_kind(innovation_counterpart(k)));
  }
  CHECK(parse_cell_kind("igru") == CellKind::Igru);
  CHECK(parse_cell_kind("ILSTM") == CellKind::Ilstm);
  CHECK_THROWS_AS(parse_cell_kind("transformer"), UsageError);
  CHECK(family_count(CellKind::Irnn) == 1);
  CHECK(family_count(CellKind::Gru) == 3);
  CHECK(family_count(CellKind::Ilstm) == 4);
}

TEST_CASE("masks") {
  const auto full = InnovationMask::full(CellKind::Igru);
  CHECK(full.describe() == "all");
  CHECK(full.with("candidate", false).describe() == "reset+update");
  CHECK(InnovationMask::none(CellKind::Ilstm).describe() == "none");
  CHECK_THROWS_AS(full.with("forget", false), UsageError);
  CHECK_THROWS_AS(InnovationMask::none(CellKind::Gru).with("reset", true), UsageError);
  CHECK(all_masks(CellKind::Ilstm).size() == 16);
  CHECK(all_masks(CellKind::Lstm).size() == 1);
  const std::vector<std::string> only{"cell"};
  CHECK(InnovationMask::only(CellKind::Ilstm, only).bits() == 0b1000);
  CHECK_THROWS_AS(InnovationMask::from_bits(CellKind::Irnn, 2), UsageError);
}

TEST_CASE("innovation blocks exist exactly where the mask enables them") {
  Dims d{3, 2, 1};
  CHECK(WeightSet::zeros(CellKind::Irnn, d, InnovationMask::full(CellKind::Irnn)).has_block("W_xe"));
  CHECK(!WeightSet::zeros(CellKind::Rnn, d, InnovationMask::none(CellKind::Rnn)).has_block("W_xe"));
  const auto m = InnovationMask::full(CellKind::Ilstm).with("output", false);
  const WeightSet w = WeightSet::zeros(CellKind::Ilstm, d, m);
  CHECK(w.has_block("W_fe"));
  CHECK(w.has_block("W_ie"));
  CHECK(!w.has_block("W_oe"));
  CHECK(w.has_block("W_ce"));
  CHECK_THROWS_AS(WeightSet::zeros(CellKind::Rnn, d, InnovationMask::full(CellKind::Irnn)), UsageError);
  CHECK_THROWS_AS(WeightSet::zeros(CellKind::Rnn, {0, 1, 1}, InnovationMask::none(CellKind::Rnn)), UsageError);
}

TEST_CASE("parameter counts at (128, 6, 1)") {
  const Dims d{128, 6, 1};
  auto count = [&](CellKind k) { return WeightSet::zeros(k, d, InnovationMask::full(k)).parameter_count(); };
  CHECK(count(CellKind::Rnn) == 17537);
  CHECK(count(CellKind::Irnn) == 17665);
  CHECK(count(CellKind::Gru) == 52353);
  CHECK(count(CellKind::Igru) == 52737);
  CHECK(count(CellKind::Lstm) == 69761);
  CHECK(count(CellKind::Ilstm) == 70273);
}

TEST_CASE("flatten and unflatten round trip exactly") {
  for (CellKind k : kAllCellKinds) {
    WeightSet w = init_weights(k, {4, 2, 2}, InnovationMask::full(k), 7);
    const std::vector<double> flat(w.flat().begin(), w.flat().end());
    WeightSet v = WeightSet::zeros(k, {4, 2, 2}, InnovationMask::full(k));
    v.unflatten(flat);
    CHECK(v == w);
    CHECK_THROWS_AS(v.unflatten(std::vector<double>(flat.size() + 1)), ShapeError);
  }
}

TEST_CASE("layout is contiguous and documented order") {
  const WeightSet w = WeightSet::zeros(CellKind::Igru, {2, 1, 1}, InnovationMask::full(CellKind::Igru));
  const std::vector<std::string> names{"W_rx", "W_ru", "W_ry", "W_re", "b_r", "W_ux", "W_uu", "W_uy",
                                       "W_ue", "b_u",  "W_xx", "W_xu", "W_xy", "W_xe", "b_x", "W_yx",
                                       "b_y"};
  REQUIRE(w.layout().size() == names.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(w.layout()[i].name == names[i]);
    CHECK(w.layout()[i].offset == offset);
    offset += w.layout()[i].rows * w.layout()[i].cols;
  }
  CHECK(offset == w.parameter_count());
}

TEST_CASE("init: zero biases, bounded, deterministic") {
  const Dims d{128, 6, 1};
  for (CellKind k : kAllCellKinds) {
    const WeightSet a = init_weights(k, d, InnovationMask::full(k), 123);
    const WeightSet b = init_weights(k, d, InnovationMask::full(k), 123);
    CHECK(a == b);
    for (const auto& blk : a.layout()) {
      const auto v = a.block(blk.name);
      const double bound = std::sqrt(6.0 / static_cast<double>(blk.rows + blk.cols));
      for (std::size_t i = 0; i < blk.rows * blk.cols; ++i) {
        if (blk.is_bias)
          CHECK(v.data[i] == 0.0);
        else
          CHECK(std::abs(v.data[i]) <= bound);
      }
    }
  }
  const WeightSet w = init_weights(CellKind::Irnn, d, InnovationMask::full(CellKind::Irnn), 5);
  const auto wxx = w.block("W_xx");
  double max_abs = 0.0;
  for (std::size_t i = 0; i < 128 * 128; ++i) max_abs = std::max(max_abs, std::abs(wxx.data[i]));
  CHECK(max_abs <= 0.15309310892394863);
  CHECK(max_abs > 0.15);  // the bound is actually approached
  CHECK(init_weights(CellKind::Irnn, d, InnovationMask::full(CellKind::Irnn), 6) != w);
  CHECK_THROWS_AS(init_weights(CellKind::Rnn, {4, 0, 1}, InnovationMask::none(CellKind::Rnn), 1), UsageError);
}

TEST_CASE("init shares values across kinds with the same block") {
  const Dims d{5, 2, 1};
  const WeightSet r = init_weights(CellKind::Rnn, d, InnovationMask::none(CellKind::Rnn), 9);
  const WeightSet i = init_weights(CellKind::Irnn, d, InnovationMask::full(CellKind::Irnn), 9);
  for (const auto& blk : r.layout()) {
    const auto a = r.block(blk.name), b = i.block(blk.name);
    for (std::size_t k = 0; k < blk.rows * blk.cols; ++k) CHECK(a.data[k] == b.data[k]);
  }
}

TEST_CASE("zero-weight Irnn is a fixed point at zero") {
  const WeightSet w = zero_cell(CellKind::Irnn, {3, 2, 1});
  const StepResult r = step(w, zero_state(w), Vector{1.0, -2.0}, Vector{5.0}, Vector{0.3});
  CHECK(r.state.x == Vector(3));
  CHECK(r.y_hat == Vector(1));
}

TEST_CASE("zero-weight Igru halves the previous state") {
  const WeightSet w = zero_cell(CellKind::Igru);
  CellState s{Vector{0.8}, {}};
  const StepResult r = step(w, s, Vector{1.0}, Vector{1.0}, Vector{1.0});
  CHECK(r.state.x[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("zero-weight Ilstm cell step") {
  const WeightSet w = zero_cell(CellKind::Ilstm);
  CellState s{Vector{0.0}, Vector{1.0}};
  const StepResult r = step(w, s, Vector{1.0}, Vector{1.0}, Vector{1.0});
  CHECK(r.state.c[0] == 0.5);
  // tanh(0.5)·0.5 to 50 digits: 0.231058578630004879...
  CHECK(std::abs(r.state.x[0] - 0.23105857863000488) < 1e-15);
}

TEST_CASE("step rejects bad dims and non-finite inputs") {
  const WeightSet w = zero_cell(CellKind::Irnn, {2, 2, 1});
  const CellState s = zero_state(w);
  CHECK_THROWS_AS(step(w, s, Vector(3), Vector(1), Vector(1)), ShapeError);
  CHECK_THROWS_AS(step(w, s, Vector(2), Vector(2), Vector(1)), ShapeError);
  CHECK_THROWS_AS(step(w, s, Vector(2), Vector(1), Vector(2)), ShapeError);
  CHECK_THROWS_AS(step(w, s, Vector{NAN, 0.0}, Vector(1), Vector(1)), NumericalError);
  CHECK_THROWS_AS(step(w, s, Vector(2), Vector(1), Vector{INFINITY}), NumericalError);
  const WeightSet v = WeightSet::zeros(CellKind::Rnn, {2, 2, 1}, InnovationMask::none(CellKind::Rnn));
  CHECK_NOTHROW(step(v, zero_state(v), Vector(2), Vector(1), Vector()));
}

TEST_CASE("compute_innovation") {
  CHECK(compute_innovation(Vector{2.0}, Vector{2.0}) == Vector{0.0});
  CHECK(compute_innovation(Vector{1.0}, Vector{0.3})[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(compute_innovation(Vector{0.0, 1.0}, Vector{1.0, 0.0}) == Vector{-1.0, 1.0});
  CHECK_THROWS_AS(compute_innovation(Vector(1), Vector(2)), ShapeError);
}

TEST_CASE("step matches the scalar reference evaluator") {
  Rng rng(77);
  for (CellKind k : kAllCellKinds) {
    for (const auto& mask : all_masks(k)) {
      for (Activation act : {Activation::Tanh, Activation::Sigmoid}) {
        const Dims d{4, 2, 2};
        WeightSet w = WeightSet::zeros(k, d, mask, act);
        randomize(w, rng.next_u64());
        CellState s = zero_state(w);
        s.x = randn(rng, 4, 0.5);
        if (is_lstm(k)) s.c = randn(rng, 4, 0.5);
        const Vector u = randn(rng, 2), y = randn(rng, 2), e = randn(rng, 2);
        RefState rs{to_vec(s.x), is_lstm(k) ? to_vec(s.c) : Vec(4, 0.0)};
        const Vec ref_y = ref_step(w, rs, to_vec(u), to_vec(y), to_vec(e));
        const StepResult r = step(w, s, u, y, e);
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.state.x[i] - rs.x[i]) < 1e-14);
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(r.y_hat[i] - ref_y[i]) < 1e-14);
      }
    }
  }
}

TEST_CASE("reduction: zero innovation weights give the vanilla step bit for bit") {
  Rng rng(101);
  for (CellKind k : {CellKind::Irnn, CellKind::Igru, CellKind::Ilstm}) {
    const Dims d{5, 3, 2};
    for (int trial = 0; trial < 20; ++trial) {
      const std::uint64_t seed = rng.next_u64();
      const WeightSet van = init_weights(vanilla_counterpart(k), d, InnovationMask::none(vanilla_counterpart(k)), seed);
      WeightSet inn = init_weights(k, d, InnovationMask::full(k), seed);
      for (const auto& blk : inn.layout())
        if (blk.name.size() == 4 && blk.name.back() == 'e') {
          auto v = inn.block(blk.name);
          std::fill(v.data, v.data + blk.rows * blk.cols, 0.0);
        }
      CellState s = zero_state(van);
      s.x = randn(rng, 5);
      if (is_lstm(k)) s.c = randn(rng, 5);
      const Vector u = randn(rng, 3), y = randn(rng, 2), e = randn(rng, 2);
      const StepResult a = step(van, s, u, y, Vector());
      const StepResult b = step(inn, s, u, y, e);
      CHECK(a.state.x == b.state.x);
      CHECK(a.state.c == b.state.c);
      CHECK(a.y_hat == b.y_hat);

      // Arbitrary innovation weights but e = 0.
      const WeightSet inn2 = init_weights(k, d, InnovationMask::full(k), seed);
      const StepResult c = step(inn2, s, u, y, Vector(2));
      CHECK(a.state.x == c.state.x);
      CHECK(a.y_hat == c.y_hat);
    }
  }
}

TEST_CASE("gate ranges and bounded hidden state") {
  Rng rng(4);
  for (CellKind k : kAllCellKinds) {
    WeightSet w = init_weights(k, {6, 2, 1}, InnovationMask::full(k), 3);
    randomize(w, 55, 2.0);
    CellState s = zero_state(w);
    StepRecord rec;
    for (int t = 0; t < 30; ++t) {
      const Vector u = randn(rng, 2, 3.0), y = randn(rng, 1, 3.0), e = randn(rng, 1, 3.0);
      step_unchecked(w, s, u.span(), y.span(), w.mask().any() ? e.span() : std::span<const double>{}, rec);
      if (!is_gru(k) && !is_lstm(k)) {
        for (double v : rec.x) CHECK(std::abs(v) <= 1.0);  // tanh may round to ±1
      } else {
        const std::size_t gates = is_gru(k) ? 2 : 3;
        for (std::size_t g = 0; g < gates; ++g)
          for (double v : rec.gate[g]) {
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
          }
      }
      s.x = rec.x;
      s.c = rec.c;
    }
  }
}

TEST_CASE("step is deterministic") {
  const WeightSet w = init_weights(CellKind::Ilstm, {4, 2, 1}, InnovationMask::full(CellKind::Ilstm), 2);
  CellState s = zero_state(w);
  s.x = Vector{0.1, 0.2, 0.3, 0.4};
  const StepResult a = step(w, s, Vector{1.0, 2.0}, Vector{0.5}, Vector{-0.5});
  const StepResult b = step(w, s, Vector{1.0, 2.0}, Vector{0.5}, Vector{-0.5});
  CHECK(a.state.x == b.state.x);
  CHECK(a.y_hat == b.y_hat);
}

}  // TEST_SUITE
