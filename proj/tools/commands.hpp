#pragma once

// The commands behind the `irnn` executable, as a library so tests and the
// acceptance driver can call them without spawning processes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "irnn/bptt.hpp"
#include "irnn/cells.hpp"
#include "irnn/data.hpp"
#include "irnn/predictor.hpp"
#include "irnn/synthetic.hpp"
#include "irnn/trainer.hpp"

namespace irnn::cli {

inline constexpr const char* kConfigSchema = "irnn.config/1";
inline constexpr const char* kReportSchema = "irnn.report/1";
inline constexpr const char* kEvalSchema = "irnn.eval/1";
inline constexpr const char* kLossCurveSchema = "irnn.loss_curve/1";
inline constexpr const char* kOracleSchema = "irnn.oracle/1";

enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kData = 3, kNumerical = 4 };

/// Maps the exception currently being handled to an exit code and prints it.
int report_exception(std::ostream& err);

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
  std::filesystem::path csv;
  std::filesystem::path manifest_out;
  PrepareOptions options;
};

nlohmann::json cmd_prepare(const PrepareArgs& args, std::ostream& out);

// ---------------------------------------------------------------------------
// train

struct RunConfig {
  CellKind kind = CellKind::Irnn;
  std::string mask = "all";  // "all", "none" or modules joined by '+'
  Activation activation = Activation::Tanh;
  std::size_t hidden = 32;
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  // Window settings are fixed by the manifest; when given here they must agree.
  std::optional<std::size_t> t_past, t_future, stride;
  TrainConfig train;

  InnovationMask innovation_mask() const;
};

/// Parses a config object. Missing numeric fields take the kind's defaults;
/// unknown keys are rejected. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Reads a config file, then applies the path overrides IRNN_MANIFEST and
/// IRNN_OUTPUT_DIR from the environment.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

struct EvalTable {
  std::string split;
  std::size_t t_future = 0;
  struct Row {
    std::string model;
    std::vector<double> per_step;
    double average = 0.0;
    friend bool operator==(const Row&, const Row&) = default;
  };
  std::vector<Row> rows;

  friend bool operator==(const EvalTable&, const EvalTable&) = default;
};

struct TrainOutcome {
  TrainReport report;
  EvalTable test;  // best checkpoint and the naive row on the test split
};

/// Trains into cfg.output_dir, writing config.json, manifest.json, best.ckpt,
/// last.ckpt, loss_curve.csv, report.json and timing.json. With `resume` the
/// run starts from that checkpoint instead of a fresh initialization.
TrainOutcome cmd_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume,
                       std::ostream& out);

// ---------------------------------------------------------------------------
// eval

std::string model_label(const WeightSet& w);
EvalTable evaluate_split(const WeightSet& w, const std::vector<Trajectory>& set, const std::string& split);

std::string eval_to_csv(const EvalTable& t);
EvalTable eval_from_csv(const std::string& text);
nlohmann::json eval_to_json(const EvalTable& t);
EvalTable eval_from_json(const nlohmann::json& j);

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  Split split = Split::Test;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> json_out;
};

EvalTable cmd_eval(const EvalArgs& args, std::ostream& out);

// ---------------------------------------------------------------------------
// ablate

/// "-module" switches one module off the base mask; "+module" keeps innovations
/// in that module only.
struct MaskChange {
  bool add = false;
  std::string module;
};

MaskChange parse_mask_change(const std::string& text);
InnovationMask apply_change(const InnovationMask& base, const MaskChange& change);

struct AblationResult {
  std::vector<std::string> variants;
  EvalTable table;  // one row per variant, in order, base first
};

/// Trains the base config and one variant per change, each in its own
/// subdirectory of cfg.output_dir, and writes ablation.csv there. Every change
/// is validated before any training starts.
AblationResult cmd_ablate(const RunConfig& base, const std::vector<std::string>& changes, std::ostream& out);

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  CellKind kind = CellKind::Irnn;
  std::string mask = "all";
  Dims dims{4, 2, 1};
  std::size_t t_past = 4;
  std::size_t t_future = 3;
  std::uint64_t seed = 0;
  std::size_t instances = 1;
  double step = 1e-5;
  double tolerance = 1e-4;
  InnovationSource source = InnovationSource::Stored;
  bool verbose = false;
};

struct GradcheckSummary {
  bool passed = false;
  double max_rel_error = 0.0;
  std::string worst;
};

GradcheckSummary cmd_gradcheck(const GradcheckArgs& args, std::ostream& out);

// ---------------------------------------------------------------------------
// synth

/// {"A": [[..]], "B": .., "C": .., "D": .., "Q": .., "R": ..} or the
/// shorthand {"scalar": {"a": .., "q": .., "r": ..}}. An optional
/// "inputs": "zero" | "gaussian" selects u (default zero).
struct SynthSystem {
  LtiSystem system;
  bool gaussian_inputs = false;
};

SynthSystem parse_synth_system(const nlohmann::json& j);

struct SynthArgs {
  SynthSystem model;
  std::size_t length = 10000;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  PrepareOptions prepare;  // columns are filled in by the command
};

/// Writes series.csv, manifest.json and oracle.json into the output directory.
nlohmann::json cmd_synth(const SynthArgs& args, std::ostream& out);

/// The input sequence cmd_synth feeds the system (empty for zero inputs).
std::vector<Vector> synth_inputs(const SynthSystem& model, std::size_t length, std::uint64_t seed);

}  // namespace irnn::cli
