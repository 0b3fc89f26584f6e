#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "irnn/errors.hpp"

using namespace irnn;
using namespace irnn::cli;

namespace {

std::array<double, 3> parse_ratios(const std::vector<double>& r) {
  if (r.size() != 3) throw UsageError("--ratios takes exactly three numbers");
  return {r[0], r[1], r[2]};
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Innovation-driven recurrent networks: data preparation, training and evaluation"};
  app.require_subcommand(1);

  // prepare
  PrepareArgs prep;
  std::string prep_csv, prep_out;
  std::vector<double> prep_ratios{0.6, 0.2, 0.2};
  std::size_t prep_stride = 0;
  bool prep_raw = false;
  auto* p = app.add_subcommand("prepare", "Segment and split a CSV, writing a dataset manifest");
  p->add_option("csv", prep_csv, "Input CSV file")->required();
  p->add_option("-o,--output", prep_out, "Manifest path")->required();
  p->add_option("--target", prep.options.targets, "Target column (repeatable)")->required();
  p->add_option("--input", prep.options.inputs, "Input column (repeatable)")->required();
  p->add_option("--timestamp", prep.options.timestamp_column, "Timestamp column, empty for row numbers")
      ->capture_default_str();
  p->add_option("--t-past", prep.options.t_past, "Warmup length T_p")->capture_default_str();
  p->add_option("--t-future", prep.options.t_future, "Horizon length T_f")->capture_default_str();
  p->add_option("--stride", prep_stride, "Window stride, 0 for T_p + T_f")->capture_default_str();
  p->add_option("--ratios", prep_ratios, "Train, validation and test fractions")->expected(3);
  p->add_option("--seed", prep.options.seed, "Shuffle seed")->capture_default_str();
  p->add_flag("--no-normalize", prep_raw, "Keep raw values instead of z-scoring");

  // train
  std::string train_config, train_resume;
  auto* t = app.add_subcommand("train", "Train one model from a JSON run config");
  t->add_option("config", train_config, "Run config (JSON)")->required();
  t->add_option("--resume", train_resume, "Start from this checkpoint");

  // eval
  EvalArgs ev;
  std::string ev_ckpt, ev_manifest, ev_split = "test", ev_csv, ev_json;
  auto* e = app.add_subcommand("eval", "Per-step MSE of a checkpoint with the naive baseline");
  e->add_option("checkpoint", ev_ckpt, "Checkpoint file")->required();
  e->add_option("manifest", ev_manifest, "Dataset manifest")->required();
  e->add_option("--split", ev_split, "train, val or test")->capture_default_str();
  e->add_option("--csv", ev_csv, "Write the table as CSV");
  e->add_option("--json", ev_json, "Write the table as JSON");

  // ablate
  std::string ab_config;
  std::vector<std::string> ab_changes;
  auto* a = app.add_subcommand("ablate", "Train mask variants of a base config and tabulate test MSE");
  a->add_option("config", ab_config, "Base run config (JSON)")->required();
  a->add_option("--change", ab_changes, "-module or +module (repeatable)")->allow_extra_args(false);

  // gradcheck
  GradcheckArgs gc;
  std::string gc_kind = "irnn", gc_source = "stored";
  auto* g = app.add_subcommand("gradcheck", "Compare BPTT gradients with central differences");
  g->add_option("--cell", gc_kind, "Cell kind")->capture_default_str();
  g->add_option("--mask", gc.mask, "all, none or modules joined by '+'")->capture_default_str();
  g->add_option("--hidden", gc.dims.n_x)->capture_default_str();
  g->add_option("--inputs", gc.dims.n_u)->capture_default_str();
  g->add_option("--outputs", gc.dims.n_y)->capture_default_str();
  g->add_option("--t-past", gc.t_past)->capture_default_str();
  g->add_option("--t-future", gc.t_future)->capture_default_str();
  g->add_option("--seed", gc.seed)->capture_default_str();
  g->add_option("--instances", gc.instances, "Random instances to check")->capture_default_str();
  g->add_option("--step", gc.step, "Finite-difference step")->capture_default_str();
  g->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  g->add_option("--innovations", gc_source, "stored or in_pass_detached")->capture_default_str();
  g->add_flag("-v,--verbose", gc.verbose, "Print every parameter");

  // synth
  SynthArgs sy;
  std::string sy_system, sy_out;
  std::vector<double> sy_scalar;
  std::vector<double> sy_ratios{0.6, 0.2, 0.2};
  std::size_t sy_stride = 0;
  bool sy_normalize = false;
  sy.prepare.normalize = false;
  auto* s = app.add_subcommand("synth", "Simulate an LTI system and report its Kalman oracle");
  auto* sys_opt = s->add_option("--system", sy_system, "System specification (JSON)");
  s->add_option("--scalar", sy_scalar, "Scalar system a q r")->expected(3)->excludes(sys_opt);
  s->add_option("-o,--output", sy_out, "Output directory")->required();
  s->add_option("--length", sy.length, "Number of steps")->capture_default_str();
  s->add_option("--seed", sy.seed)->capture_default_str();
  s->add_option("--t-past", sy.prepare.t_past)->capture_default_str();
  s->add_option("--t-future", sy.prepare.t_future)->capture_default_str();
  s->add_option("--stride", sy_stride, "Window stride, 0 for T_p + T_f")->capture_default_str();
  s->add_option("--ratios", sy_ratios)->expected(3);
  s->add_flag("--normalize", sy_normalize, "Z-score the manifest (raw by default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*p) {
      prep.csv = prep_csv;
      prep.manifest_out = prep_out;
      prep.options.stride = prep_stride;
      prep.options.ratios = parse_ratios(prep_ratios);
      prep.options.normalize = !prep_raw;
      cmd_prepare(prep, std::cout);
    } else if (*t) {
      const RunConfig cfg = load_run_config(train_config);
      std::optional<std::filesystem::path> resume;
      if (!train_resume.empty()) resume = train_resume;
      cmd_train(cfg, resume, std::cout);
    } else if (*e) {
      ev.checkpoint = ev_ckpt;
      ev.manifest = ev_manifest;
      ev.split = parse_split(ev_split);
      if (!ev_csv.empty()) ev.csv_out = ev_csv;
      if (!ev_json.empty()) ev.json_out = ev_json;
      cmd_eval(ev, std::cout);
    } else if (*a) {
      cmd_ablate(load_run_config(ab_config), ab_changes, std::cout);
    } else if (*g) {
      gc.kind = parse_cell_kind(gc_kind);
      gc.source = parse_innovation_source(gc_source);
      if (!cmd_gradcheck(gc, std::cout).passed) return kOther;
    } else if (*s) {
      if (!sy_scalar.empty()) {
        sy.model = parse_synth_system({{"scalar", {{"a", sy_scalar[0]}, {"q", sy_scalar[1]}, {"r", sy_scalar[2]}}}});
      } else if (!sy_system.empty()) {
        sy.model = parse_synth_system(read_json(sy_system));
      } else {
        throw UsageError("synth needs --system or --scalar");
      }
      sy.output_dir = sy_out;
      sy.prepare.stride = sy_stride;
      sy.prepare.ratios = parse_ratios(sy_ratios);
      sy.prepare.normalize = sy_normalize;
      cmd_synth(sy, std::cout);
    }
  } catch (...) {
    return report_exception(std::cerr);
  }
  return kOk;
}
