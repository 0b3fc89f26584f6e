#pragma once

// CSV ingestion, z-score normalization, segmentation into fixed-length
// trajectories, shuffled splitting, and the dataset manifest that records all
// of it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "irnn/numerics.hpp"
#include "irnn/trajectory.hpp"

namespace irnn {

struct RawSeries {
  std::vector<std::string> timestamps;  // as written in the file, or row numbers
  std::vector<Vector> u;                // n_u per row
  std::vector<Vector> y;                // n_y per row
  std::vector<std::string> input_names;
  std::vector<std::string> target_names;

  std::size_t length() const noexcept { return y.size(); }
  std::size_t n_u() const noexcept { return input_names.size(); }
  std::size_t n_y() const noexcept { return target_names.size(); }
};

/// Reads a headered CSV. `timestamp_column` may be empty, in which case row
/// numbers stand in for timestamps. Timestamps must be strictly increasing
/// (numerically when every value parses as a number, else lexicographically,
/// which orders ISO-8601 dates). Throws DataError naming the column or the
/// 1-based data row at fault.
RawSeries load_csv(const std::filesystem::path& path, std::span<const std::string> target_columns,
                   std::span<const std::string> input_columns, const std::string& timestamp_column = "date");

/// Writes a RawSeries with columns (t, inputs..., targets...) at full precision.
void write_csv(const std::filesystem::path& path, const RawSeries& series);

struct NormalizationStats {
  std::vector<double> u_mean, u_std;
  std::vector<double> y_mean, y_std;

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// Per-channel mean and population standard deviation over `rows` of `series`.
/// Throws DataError when a channel is constant over those rows.
NormalizationStats fit_normalize(const RawSeries& series, std::span<const std::size_t> rows);

RawSeries apply_normalize(const RawSeries& series, const NormalizationStats& stats);
RawSeries invert_normalize(const RawSeries& series, const NormalizationStats& stats);

/// Windows of length T_p + T_f starting at rows 0, stride, 2·stride, ...;
/// the trailing remainder is dropped. Stored innovations start at zero.
/// Throws DataError when the series is shorter than one window, UsageError
/// for stride 0 or T_p/T_f = 0.
std::vector<Trajectory> segment(const RawSeries& series, std::size_t t_past, std::size_t t_future,
                                std::size_t stride);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;  // indices into the segment list
};

/// Shuffles segment indices under `seed` and cuts them into contiguous blocks
/// of ⌊r₀·M⌋, ⌊r₁·M⌋ and the remainder. Throws UsageError when the ratios do
/// not sum to 1 or a split would be empty.
SplitIndices split_shuffle(std::size_t segment_count, std::array<double, 3> ratios, std::uint64_t seed);

enum class Split { Train, Val, Test };
std::string to_string(Split s);
Split parse_split(const std::string& name);

struct PrepareOptions {
  std::vector<std::string> targets;
  std::vector<std::string> inputs;
  std::string timestamp_column = "date";
  std::size_t t_past = 24;
  std::size_t t_future = 5;
  std::size_t stride = 0;  // 0 means T_p + T_f
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  bool normalize = true;
};

struct Dataset {
  std::vector<Trajectory> train, val, test;
  std::optional<NormalizationStats> stats;
  nlohmann::json manifest;

  std::vector<Trajectory>& split(Split s);
  const std::vector<Trajectory>& split(Split s) const;
};

inline constexpr const char* kManifestSchema = "irnn.manifest/1";

/// Loads the CSV, segments, splits, fits normalization on the rows of the
/// training segments and applies it everywhere. The manifest records the
/// source path and checksum, column roles, stats, stride, ratios, seed and the
/// segment start rows of every split.
Dataset prepare_dataset(const std::filesystem::path& csv_path, const PrepareOptions& opt);

/// Same, from an in-memory series (source recorded as `source_label`).
Dataset prepare_dataset(const RawSeries& series, const PrepareOptions& opt,
                        const std::string& source_label = "", std::uint64_t source_checksum = 0);

/// Rebuilds the exact dataset described by a manifest. A relative source path
/// is resolved against `base_dir`. Throws DataError if the source file's
/// checksum no longer matches.
Dataset load_dataset(const nlohmann::json& manifest, const std::filesystem::path& base_dir = {});
Dataset load_dataset(const std::filesystem::path& manifest_path);

void write_manifest(const std::filesystem::path& path, const nlohmann::json& manifest);

/// FNV-1a over the bytes of a file.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace irnn
