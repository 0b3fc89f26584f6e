#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "irnn/checkpoint.hpp"
#include "irnn/errors.hpp"
#include "irnn/rng.hpp"

namespace irnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

InnovationMask parse_mask(CellKind kind, const std::string& text) {
  if (text == "all") return InnovationMask::full(kind);
  if (text == "none") return InnovationMask::none(kind);
  std::vector<std::string> modules;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, '+');) modules.push_back(part);
  return InnovationMask::only(kind, modules);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* name) {
  if (j.is_number()) return Matrix{{j.get<double>()}};
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw UsageError(std::string("system matrix ") + name + " must be a number or a list of rows");
  const std::size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw UsageError(std::string("system matrix ") + name + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

void check_window(const std::optional<std::size_t>& wanted, std::size_t actual, const char* name) {
  if (wanted && *wanted != actual)
    throw UsageError(std::string("config asks for ") + name + " = " + std::to_string(*wanted) +
                     " but the manifest was prepared with " + std::to_string(actual));
}

std::string variant_dir(const std::string& change) {
  if (change.empty()) return "base";
  return (change[0] == '+' ? "plus_" : "minus_") + change.substr(1);
}

}  // namespace

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what();
    if (e.time_step() >= 0) err << " (time step " << e.time_step() << ')';
    err << '\n';
    return kNumerical;
  } catch (const json::exception& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
}

// ---------------------------------------------------------------------------

json cmd_prepare(const PrepareArgs& args, std::ostream& out) {
  const Dataset ds = prepare_dataset(args.csv, args.options);
  write_manifest(args.manifest_out, ds.manifest);
  out << "segments " << ds.manifest.at("segments").get<std::size_t>() << ": train " << ds.train.size()
      << ", val " << ds.val.size() << ", test " << ds.test.size() << '\n'
      << "manifest written to " << args.manifest_out.string() << '\n';
  return ds.manifest;
}

// ---------------------------------------------------------------------------

InnovationMask RunConfig::innovation_mask() const { return parse_mask(kind, mask); }

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> known = {
      "schema",     "cell",       "mask",          "activation",          "hidden",
      "manifest",   "output_dir", "learning_rate", "epochs",              "innovation_interval",
      "batch_size", "seed",       "t_past",        "early_stop_tolerance", "t_future",
      "stride",     "beta1",      "beta2",         "epsilon",             "innovation_source"};
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
  if (j.contains("schema") && j["schema"] != kConfigSchema)
    throw UsageError("unsupported config schema " + j["schema"].dump());

  try {
    RunConfig cfg;
    cfg.kind = parse_cell_kind(j.at("cell").get<std::string>());
    cfg.train = TrainConfig::defaults_for(cfg.kind);
    auto path = [&](const char* key) -> fs::path {
      if (!j.contains(key)) return {};
      fs::path p = j[key].get<std::string>();
      return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    cfg.manifest = path("manifest");
    cfg.output_dir = path("output_dir");
    if (j.contains("mask")) cfg.mask = j["mask"].get<std::string>();
    if (j.contains("activation")) cfg.activation = parse_activation(j["activation"].get<std::string>());
    if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::size_t>();
    if (j.contains("t_past")) cfg.t_past = j["t_past"].get<std::size_t>();
    if (j.contains("t_future")) cfg.t_future = j["t_future"].get<std::size_t>();
    if (j.contains("stride")) cfg.stride = j["stride"].get<std::size_t>();

    TrainConfig& t = cfg.train;
    if (j.contains("learning_rate")) t.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) t.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("innovation_interval")) t.innovation_interval = j["innovation_interval"].get<std::size_t>();
    if (j.contains("batch_size")) t.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("early_stop_tolerance")) t.early_stop_tolerance = j["early_stop_tolerance"].get<std::size_t>();
    if (j.contains("seed")) t.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("beta1")) t.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) t.beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) t.epsilon = j["epsilon"].get<double>();
    if (j.contains("innovation_source"))
      t.innovation_source = parse_innovation_source(j["innovation_source"].get<std::string>());
    if (cfg.hidden == 0) throw UsageError("hidden must be at least 1");
    t.validate();
    cfg.innovation_mask();  // reject module names early
    return cfg;
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  RunConfig cfg = parse_run_config(j, path.parent_path());
  if (const char* m = std::getenv("IRNN_MANIFEST")) cfg.manifest = m;
  if (const char* o = std::getenv("IRNN_OUTPUT_DIR")) cfg.output_dir = o;
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json j;
  j["schema"] = kConfigSchema;
  j["cell"] = to_string(cfg.kind);
  j["mask"] = cfg.innovation_mask().describe();
  j["activation"] = to_string(cfg.activation);
  j["hidden"] = cfg.hidden;
  j["manifest"] = cfg.manifest.generic_string();
  j["output_dir"] = cfg.output_dir.generic_string();
  if (cfg.t_past) j["t_past"] = *cfg.t_past;
  if (cfg.t_future) j["t_future"] = *cfg.t_future;
  if (cfg.stride) j["stride"] = *cfg.stride;
  j["learning_rate"] = t.learning_rate;
  j["epochs"] = t.epochs;
  j["innovation_interval"] = t.innovation_interval;
  j["batch_size"] = t.batch_size;
  j["early_stop_tolerance"] = t.early_stop_tolerance;
  j["seed"] = t.seed;
  j["innovation_source"] = to_string(t.innovation_source);
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["epsilon"] = t.epsilon;
  return j;
}

// ---------------------------------------------------------------------------

std::string model_label(const WeightSet& w) {
  std::string s = upper(to_string(w.kind()));
  if (is_innovation_kind(w.kind())) s += "(" + w.mask().describe() + ")";
  return s;
}

EvalTable evaluate_split(const WeightSet& w, const std::vector<Trajectory>& set, const std::string& split) {
  const StepMse model = evaluate(w, set);
  const StepMse naive = naive_baseline(set);
  EvalTable t;
  t.split = split;
  t.t_future = model.per_step.size();
  t.rows.push_back({model_label(w), model.per_step, model.average});
  t.rows.push_back({"naive", naive.per_step, naive.average});
  return t;
}

std::string eval_to_csv(const EvalTable& t) {
  std::ostringstream out;
  out << "# " << kEvalSchema << "\n# split=" << t.split << "\nmodel";
  for (std::size_t k = 1; k <= t.t_future; ++k) out << ',' << k;
  out << ",average\n";
  for (const auto& r : t.rows) {
    out << r.model;
    for (double v : r.per_step) out << ',' << fmt(v);
    out << ',' << fmt(r.average) << '\n';
  }
  return out.str();
}

EvalTable eval_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw DataError(std::string("evaluation CSV ends before the ") + what);
  };
  next("schema line");
  if (line != std::string("# ") + kEvalSchema) throw DataError("not an evaluation CSV: '" + line + "'");
  next("split line");
  if (line.rfind("# split=", 0) != 0) throw DataError("evaluation CSV lacks the split line");
  EvalTable t;
  t.split = line.substr(8);
  next("header");
  const auto columns = std::count(line.begin(), line.end(), ',');
  if (columns < 2) throw DataError("evaluation CSV header has too few columns");
  t.t_future = static_cast<std::size_t>(columns - 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    EvalTable::Row r;
    std::getline(ss, r.model, ',');
    std::vector<double> values;
    for (std::string cell; std::getline(ss, cell, ',');) {
      char* end = nullptr;
      values.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str() || *end != '\0') throw DataError("bad number '" + cell + "' in evaluation CSV");
    }
    if (values.size() != t.t_future + 1) throw DataError("evaluation CSV row '" + r.model + "' has wrong width");
    r.average = values.back();
    values.pop_back();
    r.per_step = std::move(values);
    t.rows.push_back(std::move(r));
  }
  return t;
}

json eval_to_json(const EvalTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"model", r.model}, {"per_step", r.per_step}, {"average", r.average}});
  return {{"schema", kEvalSchema}, {"split", t.split}, {"t_future", t.t_future}, {"rows", rows}};
}

EvalTable eval_from_json(const json& j) {
  try {
    if (j.at("schema") != kEvalSchema) throw DataError("not an evaluation document");
    EvalTable t;
    t.split = j.at("split").get<std::string>();
    t.t_future = j.at("t_future").get<std::size_t>();
    for (const auto& r : j.at("rows"))
      t.rows.push_back({r.at("model").get<std::string>(), r.at("per_step").get<std::vector<double>>(),
                        r.at("average").get<double>()});
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed evaluation document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

TrainOutcome cmd_train(const RunConfig& cfg_in, const std::optional<fs::path>& resume, std::ostream& out) {
  if (cfg_in.manifest.empty()) throw UsageError("config has no manifest");
  if (cfg_in.output_dir.empty()) throw UsageError("config has no output_dir");
  Dataset ds = load_dataset(cfg_in.manifest);
  const json& m = ds.manifest;

  RunConfig cfg = cfg_in;
  const auto t_past = m.at("t_past").get<std::size_t>();
  const auto t_future = m.at("t_future").get<std::size_t>();
  const auto stride = m.at("stride").get<std::size_t>();
  check_window(cfg.t_past, t_past, "t_past");
  check_window(cfg.t_future, t_future, "t_future");
  check_window(cfg.stride, stride, "stride");
  cfg.t_past = t_past;
  cfg.t_future = t_future;
  cfg.stride = stride;
  cfg.train.t_past = t_past;
  cfg.train.t_future = t_future;
  cfg.train.validate();

  const Dims dims{cfg.hidden, m.at("columns").at("inputs").size(), m.at("columns").at("targets").size()};
  const InnovationMask mask = cfg.innovation_mask();
  WeightSet w0;
  if (resume) {
    w0 = load_checkpoint(*resume);
    if (w0.kind() != cfg.kind || !(w0.mask() == mask) || !(w0.dims() == dims) ||
        w0.hidden_activation() != cfg.activation)
      throw UsageError("checkpoint '" + resume->string() + "' holds " + model_label(w0) +
                       " with different shape or settings than the config");
    // The stored innovations a continued run would have held are those of
    // the checkpointed weights.
    if (mask.any() && cfg.train.innovation_source == InnovationSource::Stored) update_innovations(w0, ds.train);
  } else {
    w0 = init_weights(cfg.kind, dims, mask, cfg.train.seed, cfg.activation);
  }

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(cfg));
  write_manifest(dir / "manifest.json", m);

  TrainOutcome result;
  result.report = fit(w0, ds.train, ds.val, cfg.train);
  const TrainReport& r = result.report;
  save_checkpoint(dir / "best.ckpt", r.best);
  save_checkpoint(dir / "last.ckpt", r.last);

  std::ostringstream curve;
  curve << "# " << kLossCurveSchema << "\nepoch,train_mse,val_mse\n";
  for (const auto& e : r.epochs) curve << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_loss) << '\n';
  write_text(dir / "loss_curve.csv", curve.str());

  result.test = evaluate_split(r.best, ds.test, "test");
  const EvalTable val = evaluate_split(r.best, ds.val, "val");
  write_text(dir / "eval_test.csv", eval_to_csv(result.test));

  json report;
  report["schema"] = kReportSchema;
  report["model"] = model_label(r.best);
  report["parameter_count"] = r.best.parameter_count();
  report["resumed_from"] = resume ? json(resume->generic_string()) : json(nullptr);
  report["epochs_run"] = r.stop_epoch;
  report["best_epoch"] = r.best_epoch;
  report["best_val_loss"] = r.best_val_loss;
  report["early_stopped"] = r.early_stopped;
  report["final_train_loss"] = r.epochs.empty() ? json(nullptr) : json(r.epochs.back().train_loss);
  report["val"] = eval_to_json(val);
  report["test"] = eval_to_json(result.test);
  write_json(dir / "report.json", report);

  // Wall-clock numbers differ between runs, so they live apart from the metrics.
  json timing;
  timing["schema"] = "irnn.timing/1";
  json seconds = json::array();
  double total = 0.0;
  for (const auto& e : r.epochs) {
    seconds.push_back(e.seconds);
    total += e.seconds;
  }
  timing["epoch_seconds"] = seconds;
  timing["mean_epoch_seconds"] = r.epochs.empty() ? 0.0 : total / static_cast<double>(r.epochs.size());
  write_json(dir / "timing.json", timing);

  out << model_label(r.best) << ": " << r.stop_epoch << " epochs, best epoch " << r.best_epoch
      << ", best val MSE " << fmt(r.best_val_loss) << ", test average MSE " << fmt(result.test.rows[0].average)
      << " (naive " << fmt(result.test.rows[1].average) << ")\n";
  return result;
}

// ---------------------------------------------------------------------------

EvalTable cmd_eval(const EvalArgs& args, std::ostream& out) {
  const WeightSet w = load_checkpoint(args.checkpoint);
  const Dataset ds = load_dataset(args.manifest);
  const std::size_t n_u = ds.manifest.at("columns").at("inputs").size();
  const std::size_t n_y = ds.manifest.at("columns").at("targets").size();
  if (w.dims().n_u != n_u || w.dims().n_y != n_y)
    throw UsageError("checkpoint expects " + std::to_string(w.dims().n_u) + " inputs and " +
                     std::to_string(w.dims().n_y) + " targets, the dataset has " + std::to_string(n_u) + " and " +
                     std::to_string(n_y));
  const EvalTable t = evaluate_split(w, ds.split(args.split), to_string(args.split));
  if (args.csv_out) write_text(*args.csv_out, eval_to_csv(t));
  if (args.json_out) write_json(*args.json_out, eval_to_json(t));
  out << eval_to_csv(t);
  return t;
}

// ---------------------------------------------------------------------------

MaskChange parse_mask_change(const std::string& text) {
  if (text.size() < 2 || (text[0] != '+' && text[0] != '-'))
    throw UsageError("mask change '" + text + "' must look like -module or +module");
  return {text[0] == '+', text.substr(1)};
}

InnovationMask apply_change(const InnovationMask& base, const MaskChange& change) {
  if (change.add) return InnovationMask::only(base.kind(), std::vector<std::string>{change.module});
  return base.with(change.module, false);
}

AblationResult cmd_ablate(const RunConfig& base, const std::vector<std::string>& changes, std::ostream& out) {
  if (!is_innovation_kind(base.kind))
    throw UsageError("ablation needs an innovation cell kind, got " + to_string(base.kind));
  if (base.output_dir.empty()) throw UsageError("config has no output_dir");
  const InnovationMask base_mask = base.innovation_mask();

  std::vector<RunConfig> runs{base};
  runs.front().output_dir = base.output_dir / variant_dir("");
  AblationResult result;
  result.variants.push_back(base_mask.describe());
  std::set<std::string> seen;
  for (const std::string& c : changes) {
    if (!seen.insert(c).second) throw UsageError("mask change '" + c + "' given twice");
    RunConfig v = base;
    v.mask = apply_change(base_mask, parse_mask_change(c)).describe();
    v.output_dir = base.output_dir / variant_dir(c);
    runs.push_back(std::move(v));
    result.variants.push_back(c);
  }

  result.table.split = "test";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << "[" << result.variants[i] << "] ";
    const TrainOutcome o = cmd_train(runs[i], std::nullopt, out);
    EvalTable::Row row = o.test.rows.front();
    row.model = result.variants[i];
    result.table.t_future = o.test.t_future;
    result.table.rows.push_back(std::move(row));
  }
  write_text(base.output_dir / "ablation.csv", eval_to_csv(result.table));
  write_json(base.output_dir / "ablation.json", eval_to_json(result.table));
  out << eval_to_csv(result.table);
  return result;
}

// ---------------------------------------------------------------------------

GradcheckSummary cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (a.instances == 0) throw UsageError("gradcheck needs at least one instance");
  const InnovationMask mask = parse_mask(a.kind, a.mask);
  GradcheckSummary summary;
  summary.passed = true;
  out << "instance  entries  skipped  max_rel_error  mean_rel_error  worst\n";
  for (std::size_t i = 0; i < a.instances; ++i) {
    Rng rng(a.seed, i);
    WeightSet w = WeightSet::zeros(a.kind, a.dims, mask);
    for (double& p : w.flat()) p = 0.5 * rng.normal();
    Trajectory tr;
    tr.t_past = a.t_past;
    tr.t_future = a.t_future;
    for (std::size_t t = 0; t < a.t_past + a.t_future; ++t) {
      Vector u(a.dims.n_u), y(a.dims.n_y);
      for (std::size_t k = 0; k < a.dims.n_u; ++k) u[k] = rng.normal();
      for (std::size_t k = 0; k < a.dims.n_y; ++k) y[k] = rng.normal();
      tr.u.push_back(std::move(u));
      tr.y.push_back(std::move(y));
    }
    for (std::size_t t = 0; t < a.t_past; ++t) {
      Vector e(a.dims.n_y);
      for (std::size_t k = 0; k < a.dims.n_y; ++k) e[k] = 0.5 * rng.normal();
      tr.e_stored.push_back(std::move(e));
    }
    const GradCheckReport rep = grad_check(w, tr, a.step, a.source);
    const std::string worst = rep.entries.empty() ? "-" : rep.worst_entry().name;
    out << std::setw(8) << i << "  " << std::setw(7) << rep.entries.size() << "  " << std::setw(7) << rep.skipped
        << "  " << std::setw(13) << std::setprecision(6) << rep.max_rel_error << "  " << std::setw(14)
        << rep.mean_rel_error << "  " << worst << '\n';
    if (a.verbose) {
      for (const auto& e : rep.entries)
        out << "    " << std::left << std::setw(14) << e.name << std::right << std::setprecision(10) << std::setw(18)
            << e.analytic << std::setw(18) << e.numeric << std::setprecision(3) << std::setw(12) << e.rel_error
            << '\n';
      out << std::setprecision(6);
    }
    if (rep.max_rel_error >= summary.max_rel_error) {
      summary.max_rel_error = rep.max_rel_error;
      summary.worst = worst;
    }
    summary.passed = summary.passed && rep.passed(a.tolerance);
  }
  out << (summary.passed ? "PASS" : "FAIL") << ": " << upper(to_string(a.kind)) << "(" << mask.describe()
      << ") max relative error " << std::setprecision(6) << summary.max_rel_error << " (tolerance "
      << a.tolerance << ")\n";
  return summary;
}

// ---------------------------------------------------------------------------

SynthSystem parse_synth_system(const json& j) {
  try {
    SynthSystem model;
    if (j.contains("scalar")) {
      const json& s = j["scalar"];
      model.system = LtiSystem::scalar(s.at("a").get<double>(), s.value("q", 1.0), s.value("r", 1.0));
    } else {
      LtiSystem& s = model.system;
      s.A = matrix_from_json(j.at("A"), "A");
      s.C = matrix_from_json(j.at("C"), "C");
      const std::size_t n_x = s.A.rows(), n_y = s.C.rows();
      s.B = j.contains("B") ? matrix_from_json(j["B"], "B") : Matrix(n_x, 1);
      s.D = j.contains("D") ? matrix_from_json(j["D"], "D") : Matrix(n_y, s.B.cols());
      s.Q = matrix_from_json(j.at("Q"), "Q");
      s.R = matrix_from_json(j.at("R"), "R");
    }
    const std::string inputs = j.value("inputs", "zero");
    if (inputs != "zero" && inputs != "gaussian") throw UsageError("inputs must be 'zero' or 'gaussian'");
    model.gaussian_inputs = inputs == "gaussian";
    model.system.validate();
    return model;
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad system specification: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("bad system specification: ") + e.what());
  } catch (const ShapeError& e) {
    throw UsageError(std::string("bad system specification: ") + e.what());
  }
}

std::vector<Vector> synth_inputs(const SynthSystem& model, std::size_t length, std::uint64_t seed) {
  if (!model.gaussian_inputs) return {};
  Rng rng(seed, stable_hash("inputs"));
  std::vector<Vector> u(length, Vector(model.system.n_u()));
  for (Vector& v : u)
    for (std::size_t k = 0; k < v.dim(); ++k) v[k] = rng.normal();
  return u;
}

json cmd_synth(const SynthArgs& args, std::ostream& out) {
  if (args.output_dir.empty()) throw UsageError("synth needs an output directory");
  const LtiSystem& sys = args.model.system;
  const RawSeries series = simulate(sys, synth_inputs(args.model, args.length, args.seed), args.length, args.seed);
  fs::create_directories(args.output_dir);
  const fs::path csv = args.output_dir / "series.csv";
  write_csv(csv, series);

  PrepareOptions opt = args.prepare;
  opt.inputs = series.input_names;
  opt.targets = series.target_names;
  opt.timestamp_column = "t";
  const Dataset ds = prepare_dataset(csv, opt);
  write_manifest(args.output_dir / "manifest.json", ds.manifest);

  const KalmanOracle o = riccati_gain(sys);
  const KfResult kf = kf_predict(o, sys, series);
  double trace_s = 0.0;
  for (std::size_t i = 0; i < o.S.rows(); ++i) trace_s += o.S(i, i);

  json report;
  report["schema"] = kOracleSchema;
  report["length"] = args.length;
  report["seed"] = args.seed;
  report["spectral_radius"] = sys.spectral_radius();
  report["K"] = matrix_to_json(o.K);
  report["P"] = matrix_to_json(o.P);
  report["S"] = matrix_to_json(o.S);
  report["riccati_iterations"] = o.iterations;
  report["riccati_residual"] = riccati_residual(sys, o.P);
  report["innovation_variance"] = trace_s;
  report["oracle_mse"] = kf.mse;
  write_json(args.output_dir / "oracle.json", report);

  out << "simulated " << args.length << " steps into " << csv.string() << "\n"
      << "oracle: trace S " << fmt(trace_s) << ", one-step MSE on the series " << fmt(kf.mse) << ", "
      << o.iterations << " Riccati iterations\n";
  return report;
}

}  // namespace irnn::cli
