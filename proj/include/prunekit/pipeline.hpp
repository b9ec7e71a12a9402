#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prunekit/kernels.hpp"
#include "prunekit/manifest.hpp"
#include "prunekit/owl.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct PruneOptions {
  // The text encoder method is selectable; the image generator defaults to
  // magnitude, and rank >= 3 tensors only accept magnitude.
  Method text_method = Method::kMagnitude;
  Method image_method = Method::kMagnitude;
  double text_sparsity = 0.0;
  double image_sparsity = 0.0;
  std::optional<Group> group;
  std::map<std::string, Eigen::VectorXd> norms;
  // OWL redistributes the text encoder's sparsity across its layers.
  bool owl = false;
  double owl_lambda = 0.08;
  double owl_multiplier = 5.0;
  int threads = 1;
};

struct TensorReport {
  std::string name;
  std::string component;
  std::string method;  // "none" for tensors left untouched
  std::string group;
  double target_sparsity = 0.0;
  std::int64_t count = 0;
  std::int64_t zeros = 0;
  std::int64_t newly_zeroed = 0;
  double achieved_sparsity = 0.0;

  bool operator==(const TensorReport&) const = default;
};

struct ComponentReport {
  std::string component;
  double target = 0.0;
  std::int64_t total_params = 0;
  std::int64_t prunable_params = 0;
  std::int64_t zeros_prunable = 0;
  std::int64_t zeros_total = 0;
  double achieved_over_prunable = 0.0;
  double achieved_over_total = 0.0;

  bool operator==(const ComponentReport&) const = default;
};

struct OwlLayerReport {
  std::string layer;
  double outlier_ratio = 0.0;
  double assigned_sparsity = 0.0;

  bool operator==(const OwlLayerReport&) const = default;
};

struct PruneReport {
  std::string tool_version{kToolVersion};
  std::string input_digest;
  std::string output_digest;
  std::vector<TensorReport> tensors;
  std::vector<ComponentReport> components;
  // Planner-style total from component targets over full component sizes.
  double planned_total = 0.0;
  double global_achieved = 0.0;
  std::int64_t global_newly_zeroed = 0;
  std::vector<OwlLayerReport> owl_plan;

  bool operator==(const PruneReport&) const = default;
};

std::string report_to_json(const PruneReport& r);
PruneReport parse_report(std::string_view json_text);

struct PruneOutcome {
  Checkpoint pruned;
  PruneReport report;
  std::map<std::string, PruneMask> masks;
  std::optional<LayerSparsityPlan> owl_plan;
};

// Prunes every prunable tensor of the text and image components at their
// component targets. Digests are left empty; callers that own the bytes fill
// them in.
PruneOutcome prune_checkpoint(const Checkpoint& ckpt, const Manifest& manifest, const PruneOptions& opts);

// {tensor: {"group", "group_size", "k", "runs": [[start, length], ...]}}
std::string masks_to_json(const Checkpoint& ckpt, const std::map<std::string, PruneMask>& masks);
std::string owl_plan_to_json(const LayerSparsityPlan& plan);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace prunekit
