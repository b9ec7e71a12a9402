#include "prunekit/pipeline.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include <json.hpp>

#include "prunekit/error.hpp"
#include "prunekit/parallel.hpp"

namespace prunekit {
namespace {

using OrderedJson = nlohmann::ordered_json;

struct Task {
  std::size_t index;  // into ckpt.tensors()
  Component component;
  Method method;
  Group group;
  double sparsity;
};

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_target(double s, const char* flag) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ValidationError(std::string(flag) + " must lie in [0, 1], got " + std::to_string(s));
  }
}

}  // namespace

PruneOutcome prune_checkpoint(const Checkpoint& ckpt, const Manifest& manifest, const PruneOptions& opts) {
  manifest.validate();
  check_target(opts.text_sparsity, "text sparsity");
  check_target(opts.image_sparsity, "image sparsity");

  const auto cls = classify_tensors(ckpt, manifest);
  const auto& tensors = ckpt.tensors();

  auto target_for = [&](Component c) {
    return c == Component::kTextEncoder ? opts.text_sparsity : opts.image_sparsity;
  };
  auto method_for = [&](Component c) {
    return c == Component::kTextEncoder ? opts.text_method : opts.image_method;
  };

  std::vector<Task> tasks;
  std::vector<std::size_t> text_layers;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Tensor& t = tensors[i];
    const Component c = cls.assignment.at(t.name);
    if (c == Component::kExcluded || !is_prunable(t, manifest.prunable)) continue;
    const Method m = method_for(c);
    if (m == Method::kWanda) {
      if (t.rank() != 2) throw ValidationError("wanda requires rank-2 weights ('" + t.name + "')");
      if (!opts.norms.contains(t.name)) throw ValidationError("missing activation norms for layer '" + t.name + "'");
    }
    tasks.push_back({i, c, m, opts.group.value_or(default_group(m)), target_for(c)});
    if (c == Component::kTextEncoder) text_layers.push_back(tasks.size() - 1);
  }

  PruneOutcome out;
  if (opts.owl && !text_layers.empty()) {
    const OwlConfig cfg{opts.text_sparsity, opts.owl_lambda, opts.owl_multiplier};
    cfg.validate();
    std::vector<double> ratios(text_layers.size());
    std::vector<std::string> names;
    for (auto ti : text_layers) {
      const Tensor& t = tensors[tasks[ti].index];
      if (!opts.norms.contains(t.name)) throw ValidationError("missing activation norms for layer '" + t.name + "'");
      names.push_back(t.name);
    }
    parallel_for(static_cast<std::int64_t>(text_layers.size()), opts.threads, [&](std::int64_t l) {
      const Tensor& t = tensors[tasks[text_layers[l]].index];
      ratios[l] = layer_outlier_ratio(t, opts.norms.at(t.name), cfg.outlier_multiplier);
    });
    out.owl_plan = allocate_layer_sparsities(ratios, cfg, names);
    for (std::size_t l = 0; l < text_layers.size(); ++l) {
      tasks[text_layers[l]].sparsity = out.owl_plan->entries[l].assigned_sparsity;
      const auto& e = out.owl_plan->entries[l];
      out.report.owl_plan.push_back({e.layer, e.outlier_ratio, e.assigned_sparsity});
    }
  }

  std::vector<PruneResult> results(tasks.size());
  parallel_for(static_cast<std::int64_t>(tasks.size()), opts.threads, [&](std::int64_t k) {
    const Task& task = tasks[static_cast<std::size_t>(k)];
    const Tensor& t = tensors[task.index];
    const Eigen::VectorXd* norms = task.method == Method::kWanda ? &opts.norms.at(t.name) : nullptr;
    results[static_cast<std::size_t>(k)] = prune_layer(t, task.method, task.sparsity, norms, task.group);
  });

  out.pruned = ckpt;
  std::vector<const Task*> task_of(tensors.size(), nullptr);
  std::vector<std::int64_t> newly(tensors.size(), 0);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::size_t i = tasks[k].index;
    task_of[i] = &tasks[k];
    newly[i] = results[k].newly_zeroed;
    out.pruned.tensors()[i] = std::move(results[k].tensor);
    out.masks.emplace(tensors[i].name, std::move(results[k].mask));
  }

  PruneReport& rep = out.report;
  std::map<Component, ComponentReport> comps;
  for (auto c : kAllComponents) {
    comps[c].component = std::string(to_string(c));
    comps[c].target = c == Component::kExcluded ? 0.0 : target_for(c);
  }
  std::int64_t zeros_all = 0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Tensor& t = out.pruned.tensors()[i];
    const Component c = cls.assignment.at(t.name);
    const auto stats = tensor_stats(t);
    TensorReport tr;
    tr.name = t.name;
    tr.component = std::string(to_string(c));
    tr.method = task_of[i] ? std::string(to_string(task_of[i]->method)) : "none";
    tr.group = task_of[i] ? std::string(to_string(task_of[i]->group)) : "none";
    tr.target_sparsity = task_of[i] ? task_of[i]->sparsity : 0.0;
    tr.count = stats.count;
    tr.zeros = stats.zeros;
    tr.newly_zeroed = newly[i];
    tr.achieved_sparsity = stats.sparsity;
    rep.tensors.push_back(tr);

    auto& cr = comps[c];
    cr.total_params += stats.count;
    cr.zeros_total += stats.zeros;
    if (task_of[i]) {
      cr.prunable_params += stats.count;
      cr.zeros_prunable += stats.zeros;
    }
    zeros_all += stats.zeros;
    rep.global_newly_zeroed += newly[i];
  }
  for (auto c : kAllComponents) {
    auto& cr = comps[c];
    cr.achieved_over_prunable = ratio(cr.zeros_prunable, cr.prunable_params);
    cr.achieved_over_total = ratio(cr.zeros_total, cr.total_params);
    rep.components.push_back(cr);
  }
  const auto n_text = comps[Component::kTextEncoder].total_params;
  const auto n_image = comps[Component::kImageGenerator].total_params;
  rep.planned_total = n_text + n_image == 0 ? 0.0
                                            : (opts.text_sparsity * static_cast<double>(n_text) +
                                               opts.image_sparsity * static_cast<double>(n_image)) /
                                                  static_cast<double>(n_text + n_image);
  rep.global_achieved = ratio(zeros_all, ckpt.total_params());
  return out;
}

std::string report_to_json(const PruneReport& r) {
  OrderedJson j;
  j["tool_version"] = r.tool_version;
  j["input_digest"] = r.input_digest;
  j["output_digest"] = r.output_digest;
  j["tensors"] = OrderedJson::array();
  for (const auto& t : r.tensors) {
    j["tensors"].push_back({{"name", t.name},
                            {"component", t.component},
                            {"method", t.method},
                            {"group", t.group},
                            {"target_sparsity", t.target_sparsity},
                            {"count", t.count},
                            {"zeros", t.zeros},
                            {"newly_zeroed", t.newly_zeroed},
                            {"achieved_sparsity", t.achieved_sparsity}});
  }
  j["components"] = OrderedJson::array();
  for (const auto& c : r.components) {
    j["components"].push_back({{"component", c.component},
                               {"target", c.target},
                               {"total_params", c.total_params},
                               {"prunable_params", c.prunable_params},
                               {"zeros_prunable", c.zeros_prunable},
                               {"zeros_total", c.zeros_total},
                               {"achieved_over_prunable", c.achieved_over_prunable},
                               {"achieved_over_total", c.achieved_over_total}});
  }
  j["planned_total"] = r.planned_total;
  j["global_achieved"] = r.global_achieved;
  j["global_newly_zeroed"] = r.global_newly_zeroed;
  j["owl_plan"] = OrderedJson::array();
  for (const auto& e : r.owl_plan) {
    j["owl_plan"].push_back(
        {{"layer", e.layer}, {"outlier_ratio", e.outlier_ratio}, {"assigned_sparsity", e.assigned_sparsity}});
  }
  return j.dump(2);
}

PruneReport parse_report(std::string_view json_text) {
  PruneReport r;
  try {
    const auto j = nlohmann::json::parse(json_text);
    r.tool_version = j.at("tool_version").get<std::string>();
    r.input_digest = j.at("input_digest").get<std::string>();
    r.output_digest = j.at("output_digest").get<std::string>();
    for (const auto& t : j.at("tensors")) {
      r.tensors.push_back({t.at("name").get<std::string>(), t.at("component").get<std::string>(),
                           t.at("method").get<std::string>(), t.at("group").get<std::string>(),
                           t.at("target_sparsity").get<double>(), t.at("count").get<std::int64_t>(),
                           t.at("zeros").get<std::int64_t>(), t.at("newly_zeroed").get<std::int64_t>(),
                           t.at("achieved_sparsity").get<double>()});
    }
    for (const auto& c : j.at("components")) {
      r.components.push_back({c.at("component").get<std::string>(), c.at("target").get<double>(),
                              c.at("total_params").get<std::int64_t>(), c.at("prunable_params").get<std::int64_t>(),
                              c.at("zeros_prunable").get<std::int64_t>(), c.at("zeros_total").get<std::int64_t>(),
                              c.at("achieved_over_prunable").get<double>(), c.at("achieved_over_total").get<double>()});
    }
    r.planned_total = j.at("planned_total").get<double>();
    r.global_achieved = j.at("global_achieved").get<double>();
    r.global_newly_zeroed = j.at("global_newly_zeroed").get<std::int64_t>();
    for (const auto& e : j.at("owl_plan")) {
      r.owl_plan.push_back({e.at("layer").get<std::string>(), e.at("outlier_ratio").get<double>(),
                            e.at("assigned_sparsity").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string masks_to_json(const Checkpoint& ckpt, const std::map<std::string, PruneMask>& masks) {
  OrderedJson j = OrderedJson::object();
  for (const auto& t : ckpt.tensors()) {
    auto it = masks.find(t.name);
    if (it == masks.end()) continue;
    const PruneMask& m = it->second;
    OrderedJson runs = OrderedJson::array();
    for (const auto& [start, len] : run_length_encode(m)) runs.push_back({start, len});
    j[t.name] = {{"group", std::string(to_string(m.group))},
                 {"group_size", m.group_size},
                 {"k", m.k_per_group},
                 {"runs", std::move(runs)}};
  }
  return j.dump();
}

std::string owl_plan_to_json(const LayerSparsityPlan& plan) {
  OrderedJson j = OrderedJson::array();
  for (const auto& e : plan.entries) {
    j.push_back({{"layer", e.layer}, {"outlier_ratio", e.outlier_ratio}, {"assigned_sparsity", e.assigned_sparsity}});
  }
  return j.dump(2);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace prunekit
