#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "irnn/checkpoint.hpp"
#include "irnn/errors.hpp"

using namespace irnn;

TEST_SUITE("checkpoint") {

TEST_CASE("round trip for every kind, mask and activation") {
  for (CellKind k : kAllCellKinds)
    for (const auto& mask : all_masks(k))
      for (Activation a : {Activation::Tanh, Activation::Sigmoid}) {
        const WeightSet w = init_weights(k, {3, 2, 2}, mask, 17, a);
        const WeightSet back = decode_checkpoint(encode_checkpoint(w));
        CHECK(back == w);
        CHECK(back.mask() == mask);
        CHECK(back.hidden_activation() == a);
      }
}

TEST_CASE("header layout") {
  const WeightSet w = init_weights(CellKind::Igru, {4, 6, 1}, InnovationMask::full(CellKind::Igru), 1);
  const auto bytes = encode_checkpoint(w);
  REQUIRE(bytes.size() == 40 + 8 * w.parameter_count() + 8);
  CHECK(std::memcmp(bytes.data(), "IRNNCKPT", 8) == 0);
  CHECK(bytes[8] == 1);   // format version, little-endian
  CHECK(bytes[12] == kLayoutVersion);
  CHECK(bytes[16] == 3);  // Igru
  CHECK(bytes[17] == 1);  // tanh
  CHECK(bytes[18] == 0b111);
  CHECK(bytes[20] == 4);
  CHECK(bytes[24] == 6);
  CHECK(bytes[28] == 1);
  std::uint64_t p = 0;
  for (int i = 7; i >= 0; --i) p = (p << 8) | bytes[32 + i];
  CHECK(p == w.parameter_count());
}

TEST_CASE("corruption and truncation are detected") {
  const WeightSet w = init_weights(CellKind::Irnn, {3, 1, 1}, InnovationMask::full(CellKind::Irnn), 4);
  auto bytes = encode_checkpoint(w);
  auto flipped = bytes;
  flipped[48] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), DataError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), DataError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), DataError);
  auto bad_kind = bytes;
  bad_kind[16] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_kind), DataError);
  CHECK_THROWS_AS(decode_checkpoint({}), DataError);
}

TEST_CASE("file round trip") {
  namespace fs = std::filesystem;
  fs::create_directories(IRNN_TEST_TMP);
  const fs::path p = fs::path(IRNN_TEST_TMP) / "w.ckpt";
  const WeightSet w = init_weights(CellKind::Lstm, {3, 2, 1}, InnovationMask::none(CellKind::Lstm), 8);
  save_checkpoint(p, w);
  CHECK(load_checkpoint(p) == w);
  CHECK_THROWS_AS(load_checkpoint(fs::path(IRNN_TEST_TMP) / "missing.ckpt"), DataError);
}

}  // TEST_SUITE
