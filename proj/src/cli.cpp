#include "prunekit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prunekit/calibration.hpp"
#include "prunekit/error.hpp"
#include "prunekit/fixtures.hpp"
#include "prunekit/manifest.hpp"
#include "prunekit/pipeline.hpp"
#include "prunekit/planner.hpp"

namespace prunekit {
namespace {

namespace fs = std::filesystem;
using OrderedJson = nlohmann::ordered_json;

// Left-aligned, space-padded columns; stable output for golden tests.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : rows_{std::move(header)} {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& os) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      width.resize(std::max(width.size(), r.size()), 0);
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    for (const auto& r : rows_) {
      std::string line;
      for (std::size_t c = 0; c < r.size(); ++c) {
        line += r[c];
        if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
      }
      os << line << '\n';
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

int default_threads() {
  if (const char* env = std::getenv("PRUNEKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ValidationError("PRUNEKIT_THREADS must be a positive integer");
  }
  return 1;
}

std::string fmt_double(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void write_json(const std::string& path, const std::string& text) {
  if (!path.empty()) write_file_bytes(path, text + "\n");
}

std::map<std::string, Component> assignment_or_empty(const Checkpoint& ckpt, const std::optional<Manifest>& m) {
  std::map<std::string, Component> a;
  if (m) a = classify_tensors(ckpt, *m).assignment;
  return a;
}

// --- inspect ---------------------------------------------------------------

struct InspectArgs {
  std::string checkpoint;
  std::string manifest;
  std::string json;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  const auto ckpt = read_checkpoint(a.checkpoint);
  std::optional<Manifest> manifest;
  if (!a.manifest.empty()) manifest = load_manifest(a.manifest);
  std::map<std::string, Component> assignment;
  if (manifest) {
    auto cls = classify_tensors(ckpt, *manifest);
    for (const auto& w : cls.warnings) err << "warning: " << w << '\n';
    assignment = std::move(cls.assignment);
  }

  Table table({"tensor", "shape", "component", "prunable", "count", "zeros", "sparsity"});
  OrderedJson j;
  j["tensors"] = OrderedJson::array();
  for (const auto& t : ckpt.tensors()) {
    const auto s = tensor_stats(t);
    const std::string comp = manifest ? std::string(to_string(assignment.at(t.name))) : "-";
    const bool prunable = manifest && assignment.at(t.name) != Component::kExcluded && is_prunable(t, manifest->prunable);
    table.add({t.name, shape_to_string(t.shape), comp, manifest ? (prunable ? "yes" : "no") : "-",
               std::to_string(s.count), std::to_string(s.zeros), format_percent(s.sparsity)});
    j["tensors"].push_back({{"name", t.name},
                            {"shape", t.shape},
                            {"component", comp},
                            {"count", s.count},
                            {"zeros", s.zeros},
                            {"sparsity", s.sparsity}});
  }
  table.print(out);
  out << "total parameters: " << ckpt.total_params() << '\n';

  if (manifest) {
    out << '\n';
    Table comps({"component", "total_params", "prunable_params", "share"});
    j["components"] = OrderedJson::array();
    for (const auto& p : component_profiles(ckpt, assignment, manifest->prunable)) {
      const double share = ckpt.total_params() == 0 ? 0.0
                                                    : static_cast<double>(p.total_params) /
                                                          static_cast<double>(ckpt.total_params());
      comps.add({std::string(to_string(p.component)), std::to_string(p.total_params),
                 std::to_string(p.prunable_params), format_percent(share)});
      j["components"].push_back({{"component", std::string(to_string(p.component))},
                                 {"total_params", p.total_params},
                                 {"prunable_params", p.prunable_params}});
    }
    comps.print(out);
  }
  write_json(a.json, j.dump(2));
  return 0;
}

// --- plan / sweep ----------------------------------------------------------

struct PlanArgs {
  std::vector<double> totals;
  std::vector<std::string> ratios;
  std::int64_t n_text = kSd2TextParams;
  std::int64_t n_image = kSd2ImageParams;
  std::string json;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  Table table({"Full Model Sparsity", "Text:Image Ratio", "Text Sparsity", "Image Sparsity", "Feasible"});
  OrderedJson j = OrderedJson::array();
  for (double total : a.totals) {
    for (const auto& r : a.ratios) {
      const auto p = allocate_by_ratio(total, parse_ratio(r), a.n_text, a.n_image);
      table.add({format_percent(p.total_sparsity), r, format_percent(p.s_text), format_percent(p.s_image),
                 p.feasible ? "yes" : "no"});
      j.push_back({{"total_sparsity", p.total_sparsity},
                   {"ratio", r},
                   {"ratio_text", p.ratio_text},
                   {"ratio_image", p.ratio_image},
                   {"n_text", p.n_text},
                   {"n_image", p.n_image},
                   {"s_text", p.s_text},
                   {"s_image", p.s_image},
                   {"feasible", p.feasible}});
    }
  }
  table.print(out);
  write_json(a.json, j.dump(2));
  return 0;
}

struct SweepArgs {
  std::string method = "magnitude";
  std::optional<double> text_threshold;
  std::optional<double> image_threshold;
  double step = 0.025;
  std::int64_t count = 9;
  std::int64_t n_text = kSd2TextParams;
  std::int64_t n_image = kSd2ImageParams;
  std::string json;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto defaults = default_thresholds(a.method);
  const auto cfg = threshold_sweep(a.text_threshold.value_or(defaults.text), a.image_threshold.value_or(defaults.image),
                                   a.step, a.count, a.n_text, a.n_image);
  Table table({"Total Sparsity", "Text Sparsity", "Image Sparsity", "Note"});
  OrderedJson rows = OrderedJson::array();
  for (const auto& r : cfg.rows) {
    table.add({format_percent(r.total), format_percent(r.s_text), format_percent(r.s_image), r.clamped ? "clamped" : ""});
    rows.push_back({{"s_text", r.s_text}, {"s_image", r.s_image}, {"total", r.total}, {"clamped", r.clamped}});
  }
  table.print(out);
  OrderedJson j{{"text_threshold", cfg.text_threshold},
                {"image_threshold", cfg.image_threshold},
                {"step", cfg.step},
                {"count", cfg.count},
                {"n_text", a.n_text},
                {"n_image", a.n_image},
                {"rows", std::move(rows)}};
  write_json(a.json, j.dump(2));
  return 0;
}

// --- calibrate / eval ------------------------------------------------------

struct CalibrateArgs {
  std::string model;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::int64_t batch_rows = 64;
  int threads = 1;
  bool deterministic = false;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const auto spec = load_model_spec(a.model);
  const auto ckpt = read_checkpoint(a.checkpoint);
  const auto data = read_calibration(a.data);
  const auto stats = accumulate_norms(spec, ckpt, data, {a.batch_rows, a.threads, a.deterministic});
  write_file_bytes(a.out, norms_to_json(stats) + "\n");
  Table table({"layer", "features", "rows_seen", "min_norm", "max_norm"});
  for (const auto& [name, s] : stats) {
    const Eigen::VectorXd n = s.norms();
    table.add({name, std::to_string(n.size()), std::to_string(s.rows_seen), fmt_double(n.minCoeff(), 4),
               fmt_double(n.maxCoeff(), 4)});
  }
  table.print(out);
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string dense;
  std::string pruned;
  std::string data;
  std::int64_t rows = 0;
  std::string json;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto spec = load_model_spec(a.model);
  const auto dense = read_checkpoint(a.dense);
  const auto pruned = read_checkpoint(a.pruned);
  auto data = read_calibration(a.data);
  const std::int64_t rows = a.rows > 0 ? std::min<std::int64_t>(a.rows, data.rows()) : data.rows();
  const RowMatrixXd batch = data.topRows(rows).cast<double>();
  const auto d = output_divergence(spec, dense, pruned, batch);
  out << "rows: " << rows << '\n';
  out << "mean_rel_l2: " << fmt_double(d.mean_rel_l2, 6) << '\n';
  out << "max_rel_l2: " << fmt_double(d.max_rel_l2, 6) << '\n';
  write_json(a.json, OrderedJson{{"rows", rows}, {"mean_rel_l2", d.mean_rel_l2}, {"max_rel_l2", d.max_rel_l2}}.dump(2));
  return 0;
}

// --- prune -----------------------------------------------------------------

struct PruneArgs {
  std::string checkpoint;
  std::string manifest;
  std::string out;
  std::string method = "magnitude";
  std::string image_method = "magnitude";
  double text_sparsity = 0.0;
  double image_sparsity = 0.0;
  std::optional<double> total;
  std::string ratio;
  std::string group;
  std::string norms;
  bool owl = false;
  double owl_lambda = 0.08;
  double owl_m = 5.0;
  int threads = 1;
  std::string report;
  std::string masks;
  std::string owl_plan;
};

int cmd_prune(const PruneArgs& a, std::ostream& out, std::ostream& err) {
  PruneOptions opts;
  opts.text_method = parse_method(a.method);
  opts.image_method = parse_method(a.image_method);
  if ((opts.text_method == Method::kWanda || opts.image_method == Method::kWanda) && a.norms.empty()) {
    throw ValidationError("wanda requires --norms");
  }
  if (a.owl && a.norms.empty()) throw ValidationError("--owl requires --norms");
  if (a.total.has_value() != !a.ratio.empty()) throw ValidationError("--total and --ratio must be given together");
  if (!a.group.empty()) opts.group = parse_group(a.group);
  opts.owl = a.owl;
  opts.owl_lambda = a.owl_lambda;
  opts.owl_multiplier = a.owl_m;
  opts.threads = a.threads;

  const auto manifest = load_manifest(a.manifest);
  const std::string in_bytes = read_file_bytes(a.checkpoint);
  const auto ckpt = decode_checkpoint(in_bytes);
  if (!a.norms.empty()) opts.norms = norm_vectors(load_norms(a.norms));

  if (a.total) {
    // Split a full-model budget using this checkpoint's component sizes.
    const auto profiles = component_profiles(ckpt, classify_tensors(ckpt, manifest).assignment, manifest.prunable);
    const auto plan = allocate_by_ratio(*a.total, parse_ratio(a.ratio), profiles[0].total_params,
                                        profiles[1].total_params);
    if (!plan.feasible) {
      std::ostringstream os;
      os << "infeasible split: total " << format_percent(plan.total_sparsity) << " at " << a.ratio
         << " implies text " << format_percent(plan.s_text) << ", image " << format_percent(plan.s_image);
      throw ValidationError(os.str());
    }
    opts.text_sparsity = plan.s_text;
    opts.image_sparsity = plan.s_image;
  } else {
    opts.text_sparsity = a.text_sparsity;
    opts.image_sparsity = a.image_sparsity;
  }

  for (const auto& w : classify_tensors(ckpt, manifest).warnings) err << "warning: " << w << '\n';
  auto outcome = prune_checkpoint(ckpt, manifest, opts);
  const std::string out_bytes = encode_checkpoint(outcome.pruned);
  write_file_bytes(a.out, out_bytes);
  outcome.report.input_digest = sha256_hex(in_bytes);
  outcome.report.output_digest = sha256_hex(out_bytes);

  if (!a.report.empty()) write_file_bytes(a.report, report_to_json(outcome.report) + "\n");
  if (!a.masks.empty()) write_file_bytes(a.masks, masks_to_json(outcome.pruned, outcome.masks) + "\n");
  if (!a.owl_plan.empty()) {
    if (!outcome.owl_plan) throw ValidationError("--owl-plan requires --owl");
    write_file_bytes(a.owl_plan, owl_plan_to_json(*outcome.owl_plan) + "\n");
  }

  Table table({"component", "target", "achieved (prunable)", "achieved (total)", "prunable_params", "total_params"});
  for (const auto& c : outcome.report.components) {
    if (c.component == "excluded") continue;
    table.add({c.component, format_percent(c.target), format_percent(c.achieved_over_prunable),
               format_percent(c.achieved_over_total), std::to_string(c.prunable_params), std::to_string(c.total_params)});
  }
  table.print(out);
  out << "planned total: " << format_percent(outcome.report.planned_total)
      << "  achieved global: " << format_percent(outcome.report.global_achieved)
      << "  newly zeroed: " << outcome.report.global_newly_zeroed << '\n';
  if (outcome.owl_plan) {
    out << '\n';
    Table owl({"layer", "outlier_ratio", "assigned_sparsity"});
    for (const auto& e : outcome.owl_plan->entries) {
      owl.add({e.layer, fmt_double(e.outlier_ratio, 4), format_percent(e.assigned_sparsity)});
    }
    owl.print(out);
  }
  return 0;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::string dense;
  std::string pruned;
  std::string manifest;
  std::string json;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto dense = read_checkpoint(a.dense);
  const auto pruned = read_checkpoint(a.pruned);
  if (dense.size() != pruned.size()) throw ValidationError("checkpoints hold different tensor sets");
  std::optional<Manifest> manifest;
  if (!a.manifest.empty()) manifest = load_manifest(a.manifest);
  const auto assignment = assignment_or_empty(dense, manifest);

  struct Acc {
    std::int64_t count = 0, dense_zeros = 0, pruned_zeros = 0;
  };
  std::map<std::string, Acc> per_component;
  Acc global;
  Table table({"tensor", "component", "dense_sparsity", "pruned_sparsity", "added"});
  OrderedJson tensors = OrderedJson::array();
  for (const auto& d : dense.tensors()) {
    const Tensor* p = pruned.find(d.name);
    if (!p) throw ValidationError("tensor '" + d.name + "' missing from pruned checkpoint");
    if (p->shape != d.shape) throw ValidationError("tensor '" + d.name + "' changed shape");
    const auto sd = tensor_stats(d);
    const auto sp = tensor_stats(*p);
    const std::string comp = manifest ? std::string(to_string(assignment.at(d.name))) : "-";
    const double added = static_cast<double>(sp.zeros - sd.zeros) / static_cast<double>(sd.count);
    table.add({d.name, comp, format_percent(sd.sparsity), format_percent(sp.sparsity), format_percent(added)});
    tensors.push_back({{"name", d.name},
                       {"component", comp},
                       {"count", sd.count},
                       {"dense_zeros", sd.zeros},
                       {"pruned_zeros", sp.zeros},
                       {"added_sparsity", added}});
    for (Acc* acc : {&per_component[comp], &global}) {
      acc->count += sd.count;
      acc->dense_zeros += sd.zeros;
      acc->pruned_zeros += sp.zeros;
    }
  }
  table.print(out);
  auto added_of = [](const Acc& acc) {
    return acc.count == 0 ? 0.0 : static_cast<double>(acc.pruned_zeros - acc.dense_zeros) / static_cast<double>(acc.count);
  };
  OrderedJson comps = OrderedJson::array();
  if (manifest) {
    out << '\n';
    Table ct({"component", "params", "pruned_sparsity", "added"});
    for (const auto& [name, acc] : per_component) {
      ct.add({name, std::to_string(acc.count),
              format_percent(static_cast<double>(acc.pruned_zeros) / static_cast<double>(acc.count)),
              format_percent(added_of(acc))});
      comps.push_back({{"component", name}, {"params", acc.count}, {"added_sparsity", added_of(acc)}});
    }
    ct.print(out);
  }
  out << "global added sparsity: " << format_percent(added_of(global)) << '\n';
  write_json(a.json, OrderedJson{{"tensors", std::move(tensors)},
                                 {"components", std::move(comps)},
                                 {"global_added_sparsity", added_of(global)}}
                         .dump(2));
  return 0;
}

// --- demo ------------------------------------------------------------------

struct DemoArgs {
  std::string out_dir;
  std::uint64_t seed = 42;
  std::int64_t rows = 256;
};

int cmd_demo(const DemoArgs& a, std::ostream& out) {
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto f = make_toy_fixture(a.seed);
  write_checkpoint(f.checkpoint, dir / "model.safetensors");
  write_file_bytes(dir / "manifest.json", manifest_to_json(f.manifest) + "\n");
  write_file_bytes(dir / "model_spec.json", model_spec_to_json(f.model) + "\n");
  write_calibration(make_calibration_data(a.seed + 1, a.rows, f.model.input_dim), dir / "calib.bin");
  out << "wrote model.safetensors, manifest.json, model_spec.json, calib.bin to " << dir.string() << '\n';
  return 0;
}

}  // namespace

std::string format_percent(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"prunekit: post-training pruning for multi-component checkpoints"};
  app.require_subcommand(1);

  int threads = 1;
  try {
    threads = default_threads();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  InspectArgs inspect;
  auto* sub_inspect = app.add_subcommand("inspect", "List tensors, statistics and component sizes");
  sub_inspect->add_option("checkpoint", inspect.checkpoint, "Checkpoint file")->required();
  sub_inspect->add_option("--manifest", inspect.manifest, "Component manifest");
  sub_inspect->add_option("--json", inspect.json, "Write machine-readable output");

  PlanArgs plan;
  auto* sub_plan = app.add_subcommand("plan", "Split a full-model sparsity between components by ratio");
  sub_plan->add_option("--total", plan.totals, "Full-model sparsity (fraction), repeatable")->required();
  sub_plan->add_option("--ratio", plan.ratios, "Text:Image share of pruned weights, e.g. 75:25")->required();
  sub_plan->add_option("--n-text", plan.n_text, "Text encoder parameter count");
  sub_plan->add_option("--n-image", plan.n_image, "Image generator parameter count");
  sub_plan->add_option("--json", plan.json, "Write machine-readable output");

  SweepArgs sweep;
  auto* sub_sweep = app.add_subcommand("sweep", "Step both component sparsities down from drop-off thresholds");
  sub_sweep->add_option("--method", sweep.method, "Selects default thresholds (magnitude|wanda)");
  sub_sweep->add_option("--text-threshold", sweep.text_threshold, "Starting text sparsity");
  sub_sweep->add_option("--image-threshold", sweep.image_threshold, "Starting image sparsity");
  sub_sweep->add_option("--step", sweep.step, "Decrement per row");
  sub_sweep->add_option("--count", sweep.count, "Number of rows");
  sub_sweep->add_option("--n-text", sweep.n_text, "Text encoder parameter count");
  sub_sweep->add_option("--n-image", sweep.n_image, "Image generator parameter count");
  sub_sweep->add_option("--json", sweep.json, "Write machine-readable output");

  CalibrateArgs calib;
  calib.threads = threads;
  auto* sub_calib = app.add_subcommand("calibrate", "Accumulate per-feature activation norms");
  sub_calib->add_option("--model", calib.model, "Toy model spec JSON")->required();
  sub_calib->add_option("--checkpoint", calib.checkpoint, "Checkpoint file")->required();
  sub_calib->add_option("--data", calib.data, "Calibration matrix file")->required();
  sub_calib->add_option("--out", calib.out, "Norms JSON output")->required();
  sub_calib->add_option("--batch-rows", calib.batch_rows, "Rows per forward batch");
  sub_calib->add_option("--threads", calib.threads, "Worker threads");
  sub_calib->add_flag("--deterministic", calib.deterministic, "Sequential, bit-reproducible accumulation");

  PruneArgs prune;
  prune.threads = threads;
  auto* sub_prune = app.add_subcommand("prune", "Prune text encoder and image generator tensors");
  sub_prune->add_option("--checkpoint", prune.checkpoint, "Input checkpoint")->required();
  sub_prune->add_option("--manifest", prune.manifest, "Component manifest")->required();
  sub_prune->add_option("--out", prune.out, "Output checkpoint")->required();
  sub_prune->add_option("--method", prune.method, "Text encoder method (magnitude|wanda)");
  sub_prune->add_option("--image-method", prune.image_method, "Image generator method (magnitude|wanda)");
  sub_prune->add_option("--text-sparsity", prune.text_sparsity, "Text encoder target sparsity");
  sub_prune->add_option("--image-sparsity", prune.image_sparsity, "Image generator target sparsity");
  sub_prune->add_option("--total", prune.total, "Full-model sparsity split with --ratio");
  sub_prune->add_option("--ratio", prune.ratio, "Text:Image share of pruned weights");
  sub_prune->add_option("--group", prune.group, "Comparison group override (per_tensor|per_row)");
  sub_prune->add_option("--norms", prune.norms, "Activation norms JSON");
  sub_prune->add_flag("--owl", prune.owl, "Outlier-weighted layerwise sparsity for the text encoder");
  sub_prune->add_option("--owl-lambda", prune.owl_lambda, "Maximum per-layer deviation");
  sub_prune->add_option("--owl-m", prune.owl_m, "Outlier multiplier");
  sub_prune->add_option("--threads", prune.threads, "Worker threads");
  sub_prune->add_option("--report", prune.report, "Prune report JSON");
  sub_prune->add_option("--masks", prune.masks, "Mask export JSON");
  sub_prune->add_option("--owl-plan", prune.owl_plan, "OWL layer plan JSON");

  EvalArgs eval;
  auto* sub_eval = app.add_subcommand("eval", "Relative output divergence between dense and pruned models");
  sub_eval->add_option("--model", eval.model, "Toy model spec JSON")->required();
  sub_eval->add_option("--dense", eval.dense, "Dense checkpoint")->required();
  sub_eval->add_option("--pruned", eval.pruned, "Pruned checkpoint")->required();
  sub_eval->add_option("--data", eval.data, "Calibration matrix file")->required();
  sub_eval->add_option("--rows", eval.rows, "Use only the first N rows");
  sub_eval->add_option("--json", eval.json, "Write machine-readable output");

  ReportArgs report;
  auto* sub_report = app.add_subcommand("report", "Compare sparsity of a pruned checkpoint to its dense source");
  sub_report->add_option("--dense", report.dense, "Dense checkpoint")->required();
  sub_report->add_option("--pruned", report.pruned, "Pruned checkpoint")->required();
  sub_report->add_option("--manifest", report.manifest, "Component manifest");
  sub_report->add_option("--json", report.json, "Write machine-readable output");

  DemoArgs demo;
  auto* sub_demo = app.add_subcommand("demo", "Write a seeded toy checkpoint, manifest, model spec and calibration data");
  sub_demo->add_option("--out-dir", demo.out_dir, "Output directory")->required();
  sub_demo->add_option("--seed", demo.seed, "Fixture seed");
  sub_demo->add_option("--rows", demo.rows, "Calibration rows");

  std::vector<std::string> argv_storage{"prunekit"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (sub_inspect->parsed()) return cmd_inspect(inspect, out, err);
    if (sub_plan->parsed()) return cmd_plan(plan, out);
    if (sub_sweep->parsed()) return cmd_sweep(sweep, out);
    if (sub_calib->parsed()) return cmd_calibrate(calib, out);
    if (sub_prune->parsed()) return cmd_prune(prune, out, err);
    if (sub_eval->parsed()) return cmd_eval(eval, out);
    if (sub_report->parsed()) return cmd_report(report, out);
    if (sub_demo->parsed()) return cmd_demo(demo, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace prunekit
