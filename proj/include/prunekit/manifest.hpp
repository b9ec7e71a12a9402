#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prunekit/tensor.hpp"

namespace prunekit {

enum class Component { kTextEncoder, kImageGenerator, kExcluded };

inline constexpr std::array<Component, 3> kAllComponents = {Component::kTextEncoder, Component::kImageGenerator,
                                                            Component::kExcluded};

std::string_view to_string(Component c);
// Accepts "text_encoder", "image_generator", "excluded"; throws ValidationError otherwise.
Component parse_component(std::string_view name);

struct ManifestRule {
  std::string pattern;
  Component component = Component::kExcluded;
};

struct PrunablePolicy {
  int min_rank = 2;
  std::vector<std::string> exclude_patterns;
};

struct Manifest {
  std::vector<ManifestRule> rules;
  PrunablePolicy prunable;

  void validate() const;
};

// Shell-style glob: '*', '?', and bracket classes. '*' crosses '.' separators.
bool glob_match(std::string_view pattern, std::string_view name);
bool is_valid_glob(std::string_view pattern);

Manifest parse_manifest(std::string_view json_text);
Manifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const Manifest& m);

struct Classification {
  std::map<std::string, Component> assignment;
  std::vector<std::string> warnings;
};

Classification classify_tensors(const Checkpoint& ckpt, const Manifest& manifest);

bool is_prunable(const Tensor& t, const PrunablePolicy& policy);

struct ComponentProfile {
  Component component = Component::kExcluded;
  std::int64_t total_params = 0;
  std::int64_t prunable_params = 0;
  std::vector<std::string> tensor_names;
};

// One profile per component in kAllComponents order. Tensors in the excluded
// component never count as prunable.
std::vector<ComponentProfile> component_profiles(const Checkpoint& ckpt,
                                                 const std::map<std::string, Component>& assignment,
                                                 const PrunablePolicy& policy = {});

std::vector<std::string> prunable_set(const Checkpoint& ckpt, const Manifest& manifest, Component component);
std::vector<std::string> prunable_set(const Checkpoint& ckpt, const Manifest& manifest,
                                      std::string_view component_name);

// Stable Diffusion 2 component sizes used by the planner when no checkpoint
// is supplied.
inline constexpr std::int64_t kSd2TextParams = 340'000'000;
inline constexpr std::int64_t kSd2ImageParams = 860'000'000;

}  // namespace prunekit
