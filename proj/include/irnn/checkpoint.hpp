#pragma once

// Binary checkpoint of a WeightSet. All integers little-endian, doubles as
// little-endian IEEE-754 binary64.
//
//   offset  size  field
//   0       8     magic "IRNNCKPT"
//   8       4     u32 format version (1)
//   12      4     u32 flatten-ordering version (kLayoutVersion)
//   16      1     u8 cell kind (Rnn=0 Irnn=1 Gru=2 Igru=3 Lstm=4 Ilstm=5)
//   17      1     u8 hidden activation (0 sigmoid, 1 tanh)
//   18      1     u8 innovation mask bits (bit k = k-th module, see module_names)
//   19      1     u8 reserved, 0
//   20      4     u32 n_x
//   24      4     u32 n_u
//   28      4     u32 n_y
//   32      8     u64 parameter count P
//   40      8P    f64 parameters in flattened order
//   40+8P   8     u64 FNV-1a of the 8P parameter bytes

#include <cstdint>
#include <filesystem>
#include <vector>

#include "irnn/cells.hpp"

namespace irnn {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const WeightSet& w);
/// Throws DataError on a malformed, truncated or corrupted buffer.
WeightSet decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const WeightSet& w);
WeightSet load_checkpoint(const std::filesystem::path& path);

}  // namespace irnn
