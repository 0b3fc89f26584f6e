#include "irnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "irnn/errors.hpp"
#include "irnn/rng.hpp"

namespace irnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const fs::path& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw DataError(path.string() + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t window_stride(const PrepareOptions& opt) {
  return opt.stride == 0 ? opt.t_past + opt.t_future : opt.stride;
}

json stats_to_json(const NormalizationStats& s) {
  return json{{"u_mean", s.u_mean}, {"u_std", s.u_std}, {"y_mean", s.y_mean}, {"y_std", s.y_std}};
}

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats s;
  j.at("u_mean").get_to(s.u_mean);
  j.at("u_std").get_to(s.u_std);
  j.at("y_mean").get_to(s.y_mean);
  j.at("y_std").get_to(s.y_std);
  return s;
}

void channel_stats(const std::vector<Vector>& rows_data, std::span<const std::size_t> rows,
                   const std::vector<std::string>& names, std::vector<double>& mean,
                   std::vector<double>& sd) {
  const std::size_t n = names.size();
  mean.assign(n, 0.0);
  sd.assign(n, 0.0);
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < n; ++c) mean[c] += rows_data[r][c];
  const double count = static_cast<double>(rows.size());
  for (double& m : mean) m /= count;
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < n; ++c) {
      const double d = rows_data[r][c] - mean[c];
      sd[c] += d * d;
    }
  for (std::size_t c = 0; c < n; ++c) {
    sd[c] = std::sqrt(sd[c] / count);
    if (!(sd[c] > 0.0))
      throw DataError("channel '" + names[c] + "' is constant over the training rows; cannot normalize");
  }
}

RawSeries transform(const RawSeries& series, const NormalizationStats& st, bool forward) {
  if (st.u_mean.size() != series.n_u() || st.y_mean.size() != series.n_y())
    throw ShapeError("normalization stats do not match the series channels");
  RawSeries out = series;
  auto apply = [forward](std::vector<Vector>& rows, const std::vector<double>& mean,
                         const std::vector<double>& sd) {
    for (Vector& v : rows)
      for (std::size_t c = 0; c < v.dim(); ++c)
        v[c] = forward ? (v[c] - mean[c]) / sd[c] : v[c] * sd[c] + mean[c];
  };
  apply(out.u, st.u_mean, st.u_std);
  apply(out.y, st.y_mean, st.y_std);
  return out;
}

fs::path resolve_source(const std::string& recorded, const fs::path& base_dir) {
  fs::path p(recorded);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  if (fs::exists(p)) return p;
  if (const char* dir = std::getenv("IRNN_DATA_DIR")) {
    const fs::path alt = fs::path(dir) / fs::path(recorded).filename();
    if (fs::exists(alt)) return alt;
  }
  throw DataError("dataset source '" + recorded + "' not found");
}

}  // namespace

RawSeries load_csv(const fs::path& path, std::span<const std::string> target_columns,
                   std::span<const std::string> input_columns, const std::string& timestamp_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  if (target_columns.empty()) throw UsageError("load_csv: at least one target column is required");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError(path.string() + ": empty file");
  std::vector<std::string> header = split_row(line);
  if (!header.empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

  const bool has_ts = !timestamp_column.empty();
  const std::size_t ts_col = has_ts ? column_index(header, timestamp_column, path) : 0;
  std::vector<std::size_t> in_cols, out_cols;
  for (const auto& c : input_columns) in_cols.push_back(column_index(header, c, path));
  for (const auto& c : target_columns) out_cols.push_back(column_index(header, c, path));

  RawSeries s;
  s.input_names.assign(input_columns.begin(), input_columns.end());
  s.target_names.assign(target_columns.begin(), target_columns.end());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    auto read = [&](std::size_t col) {
      double v = 0.0;
      if (!parse_double(cells[col], v))
        throw DataError(path.string() + ": row " + std::to_string(row) + ", column '" + header[col] +
                        "': not a finite number: '" + cells[col] + "'");
      return v;
    };
    Vector u(in_cols.size()), y(out_cols.size());
    for (std::size_t k = 0; k < in_cols.size(); ++k) u[k] = read(in_cols[k]);
    for (std::size_t k = 0; k < out_cols.size(); ++k) y[k] = read(out_cols[k]);
    s.timestamps.push_back(has_ts ? cells[ts_col] : std::to_string(row));
    s.u.push_back(std::move(u));
    s.y.push_back(std::move(y));
  }
  if (s.length() == 0) throw DataError(path.string() + ": no data rows");

  if (has_ts) {
    std::vector<double> numeric(s.length());
    bool all_numeric = true;
    for (std::size_t i = 0; i < s.length() && all_numeric; ++i)
      all_numeric = parse_double(s.timestamps[i], numeric[i]);
    for (std::size_t i = 1; i < s.length(); ++i) {
      const bool ok = all_numeric ? numeric[i] > numeric[i - 1] : s.timestamps[i] > s.timestamps[i - 1];
      if (!ok)
        throw DataError(path.string() + ": row " + std::to_string(i + 1) + ": timestamp '" +
                        s.timestamps[i] + "' does not follow '" + s.timestamps[i - 1] + "'");
    }
  }
  return s;
}

void write_csv(const fs::path& path, const RawSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "t";
  for (const auto& n : series.input_names) out << ',' << n;
  for (const auto& n : series.target_names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < series.length(); ++t) {
    out << series.timestamps[t];
    for (double v : series.u[t]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    for (double v : series.y[t]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

NormalizationStats fit_normalize(const RawSeries& series, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("fit_normalize: no rows to fit on");
  for (std::size_t r : rows)
    if (r >= series.length()) throw ShapeError("fit_normalize: row index out of range");
  NormalizationStats st;
  channel_stats(series.u, rows, series.input_names, st.u_mean, st.u_std);
  channel_stats(series.y, rows, series.target_names, st.y_mean, st.y_std);
  return st;
}

RawSeries apply_normalize(const RawSeries& series, const NormalizationStats& stats) {
  return transform(series, stats, true);
}

RawSeries invert_normalize(const RawSeries& series, const NormalizationStats& stats) {
  return transform(series, stats, false);
}

std::vector<Trajectory> segment(const RawSeries& series, std::size_t t_past, std::size_t t_future,
                                std::size_t stride) {
  if (t_past == 0 || t_future == 0) throw UsageError("segment: T_p and T_f must be at least 1");
  if (stride == 0) throw UsageError("segment: stride must be at least 1");
  const std::size_t T = t_past + t_future;
  if (series.length() < T)
    throw DataError("series of length " + std::to_string(series.length()) +
                    " is shorter than one window of " + std::to_string(T));
  std::vector<Trajectory> out;
  for (std::size_t start = 0; start + T <= series.length(); start += stride) {
    Trajectory tr;
    tr.t_past = t_past;
    tr.t_future = t_future;
    tr.start = start;
    tr.u.assign(series.u.begin() + static_cast<std::ptrdiff_t>(start),
                series.u.begin() + static_cast<std::ptrdiff_t>(start + T));
    tr.y.assign(series.y.begin() + static_cast<std::ptrdiff_t>(start),
                series.y.begin() + static_cast<std::ptrdiff_t>(start + T));
    tr.reset_innovations(series.n_y());
    out.push_back(std::move(tr));
  }
  return out;
}

SplitIndices split_shuffle(std::size_t segment_count, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r >= 0.0)) throw UsageError("split ratios must be non-negative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw UsageError("split ratios must sum to 1");
  const double m = static_cast<double>(segment_count);
  // The small slack keeps 0.6·10 from flooring to 5 through representation error.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * m + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * m + 1e-9));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= segment_count)
    throw UsageError("split of " + std::to_string(segment_count) + " segments leaves an empty partition");

  std::vector<std::size_t> order(segment_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, stable_hash("split"));
  rng.shuffle(order.begin(), order.end());

  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val" || name == "validation") return Split::Val;
  if (name == "test") return Split::Test;
  throw UsageError("unknown split '" + name + "' (expected train, val or test)");
}

std::vector<Trajectory>& Dataset::split(Split s) {
  return s == Split::Train ? train : s == Split::Val ? val : test;
}

const std::vector<Trajectory>& Dataset::split(Split s) const {
  return s == Split::Train ? train : s == Split::Val ? val : test;
}

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Dataset prepare_dataset(const fs::path& csv_path, const PrepareOptions& opt) {
  const RawSeries series = load_csv(csv_path, opt.targets, opt.inputs, opt.timestamp_column);
  return prepare_dataset(series, opt, fs::absolute(csv_path).lexically_normal().string(),
                         file_checksum(csv_path));
}

Dataset prepare_dataset(const RawSeries& series, const PrepareOptions& opt, const std::string& source_label,
                        std::uint64_t source_checksum) {
  const std::size_t stride = window_stride(opt);
  const std::size_t T = opt.t_past + opt.t_future;
  std::vector<Trajectory> segments = segment(series, opt.t_past, opt.t_future, stride);
  const SplitIndices idx = split_shuffle(segments.size(), opt.ratios, opt.seed);

  Dataset ds;
  if (opt.normalize) {
    std::vector<bool> covered(series.length(), false);
    for (std::size_t i : idx.train)
      for (std::size_t r = segments[i].start; r < segments[i].start + T; ++r) covered[r] = true;
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < covered.size(); ++r)
      if (covered[r]) rows.push_back(r);
    ds.stats = fit_normalize(series, rows);
    segments = segment(apply_normalize(series, *ds.stats), opt.t_past, opt.t_future, stride);
  }

  auto starts = [&](const std::vector<std::size_t>& ids, std::vector<Trajectory>& dst) {
    std::vector<std::size_t> s;
    for (std::size_t i : ids) {
      dst.push_back(segments[i]);
      s.push_back(segments[i].start);
    }
    return s;
  };

  json m;
  m["schema"] = kManifestSchema;
  m["source"] = {{"path", source_label}, {"checksum", hex64(source_checksum)}, {"rows", series.length()}};
  m["columns"] = {{"timestamp", opt.timestamp_column}, {"inputs", opt.inputs}, {"targets", opt.targets}};
  m["t_past"] = opt.t_past;
  m["t_future"] = opt.t_future;
  m["stride"] = stride;
  m["ratios"] = opt.ratios;
  m["seed"] = opt.seed;
  m["normalization"] = ds.stats ? stats_to_json(*ds.stats) : json(nullptr);
  m["segments"] = segments.size();
  m["splits"] = {{"train", starts(idx.train, ds.train)},
                 {"val", starts(idx.val, ds.val)},
                 {"test", starts(idx.test, ds.test)}};
  ds.manifest = std::move(m);
  return ds;
}

Dataset load_dataset(const json& m, const fs::path& base_dir) {
  try {
    if (m.at("schema").get<std::string>() != kManifestSchema)
      throw DataError("unsupported manifest schema '" + m.at("schema").get<std::string>() + "'");
    const fs::path src = resolve_source(m.at("source").at("path").get<std::string>(), base_dir);
    const std::string recorded = m.at("source").at("checksum").get<std::string>();
    if (hex64(file_checksum(src)) != recorded)
      throw DataError("dataset source '" + src.string() + "' changed since the manifest was written");

    const auto& cols = m.at("columns");
    const auto inputs = cols.at("inputs").get<std::vector<std::string>>();
    const auto targets = cols.at("targets").get<std::vector<std::string>>();
    RawSeries series = load_csv(src, targets, inputs, cols.at("timestamp").get<std::string>());

    const auto t_past = m.at("t_past").get<std::size_t>();
    const auto t_future = m.at("t_future").get<std::size_t>();
    const auto stride = m.at("stride").get<std::size_t>();
    Dataset ds;
    if (!m.at("normalization").is_null()) {
      ds.stats = stats_from_json(m.at("normalization"));
      series = apply_normalize(series, *ds.stats);
    }
    const std::vector<Trajectory> segments = segment(series, t_past, t_future, stride);
    if (segments.size() != m.at("segments").get<std::size_t>())
      throw DataError("manifest segment count does not match the source");

    for (Split sp : {Split::Train, Split::Val, Split::Test}) {
      for (std::size_t start : m.at("splits").at(to_string(sp)).get<std::vector<std::size_t>>()) {
        if (start % stride != 0 || start / stride >= segments.size())
          throw DataError("manifest lists an invalid segment start " + std::to_string(start));
        ds.split(sp).push_back(segments[start / stride]);
      }
    }
    ds.manifest = m;
    return ds;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  return load_dataset(m, manifest_path.parent_path());
}

void write_manifest(const fs::path& path, const json& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << manifest.dump(2) << '\n';
}

}  // namespace irnn
