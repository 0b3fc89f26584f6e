#include "irnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "irnn/errors.hpp"

namespace irnn {

namespace {

constexpr std::string_view kMagic = "IRNNCKPT";
constexpr std::size_t kHeaderSize = 40;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const WeightSet& w) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 8 * w.parameter_count() + 8);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointFormatVersion);
  put_u32(out, kLayoutVersion);
  out.push_back(static_cast<std::uint8_t>(w.kind()));
  out.push_back(w.hidden_activation() == Activation::Sigmoid ? 0 : 1);
  out.push_back(w.mask().bits());
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(w.dims().n_x));
  put_u32(out, static_cast<std::uint32_t>(w.dims().n_u));
  put_u32(out, static_cast<std::uint32_t>(w.dims().n_y));
  put_u64(out, w.parameter_count());
  const std::size_t body = out.size();
  for (double v : w.flat()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  put_u64(out, fnv1a(out.data() + body, out.size() - body));
  return out;
}

WeightSet decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize + 8 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw DataError("checkpoint: bad magic or truncated header");
  const std::uint8_t* p = bytes.data();
  if (get_u32(p + 8) != kCheckpointFormatVersion)
    throw DataError("checkpoint: unsupported format version " + std::to_string(get_u32(p + 8)));
  if (get_u32(p + 12) != kLayoutVersion)
    throw DataError("checkpoint: unsupported layout version " + std::to_string(get_u32(p + 12)));
  if (p[16] > static_cast<std::uint8_t>(CellKind::Ilstm) || p[17] > 1)
    throw DataError("checkpoint: invalid cell kind or activation byte");

  const auto kind = static_cast<CellKind>(p[16]);
  const Activation act = p[17] == 0 ? Activation::Sigmoid : Activation::Tanh;
  const Dims dims{get_u32(p + 20), get_u32(p + 24), get_u32(p + 28)};
  const std::uint64_t count = get_u64(p + 32);

  WeightSet w;
  try {
    w = WeightSet::zeros(kind, dims, InnovationMask::from_bits(kind, p[18]), act);
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: inconsistent header: ") + e.what());
  }
  if (count != w.parameter_count())
    throw DataError("checkpoint: header declares " + std::to_string(count) +
                    " parameters, layout implies " + std::to_string(w.parameter_count()));
  if (bytes.size() != kHeaderSize + 8 * count + 8)
    throw DataError("checkpoint: size mismatch (truncated or trailing bytes)");
  if (fnv1a(p + kHeaderSize, 8 * count) != get_u64(p + kHeaderSize + 8 * count))
    throw DataError("checkpoint: checksum mismatch");

  auto flat = w.flat();
  for (std::size_t i = 0; i < count; ++i)
    flat[i] = std::bit_cast<double>(get_u64(p + kHeaderSize + 8 * i));
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const WeightSet& w) {
  const auto bytes = encode_checkpoint(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

WeightSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace irnn
