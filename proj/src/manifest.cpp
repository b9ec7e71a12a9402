#include "prunekit/manifest.hpp"

#include <fnmatch.h>

#include <json.hpp>

#include "prunekit/error.hpp"

namespace prunekit {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::kTextEncoder:
      return "text_encoder";
    case Component::kImageGenerator:
      return "image_generator";
    case Component::kExcluded:
      return "excluded";
  }
  return "excluded";
}

Component parse_component(std::string_view name) {
  for (auto c : kAllComponents) {
    if (to_string(c) == name) return c;
  }
  throw ValidationError("unknown component '" + std::string(name) + "'");
}

bool is_valid_glob(std::string_view p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == '\\') {
      if (++i >= p.size()) return false;
    } else if (p[i] == '[') {
      std::size_t j = i + 1;
      if (j < p.size() && (p[j] == '!' || p[j] == '^')) ++j;
      if (j < p.size() && p[j] == ']') ++j;
      while (j < p.size() && p[j] != ']') ++j;
      if (j >= p.size()) return false;
      i = j;
    }
  }
  return true;
}

bool glob_match(std::string_view pattern, std::string_view name) {
  return ::fnmatch(std::string(pattern).c_str(), std::string(name).c_str(), 0) == 0;
}

void Manifest::validate() const {
  for (const auto& r : rules) {
    if (!is_valid_glob(r.pattern)) throw ValidationError("invalid glob in manifest rule: '" + r.pattern + "'");
  }
  for (const auto& p : prunable.exclude_patterns) {
    if (!is_valid_glob(p)) throw ValidationError("invalid glob in prunable.exclude: '" + p + "'");
  }
  if (prunable.min_rank < 0) throw ValidationError("prunable.min_rank must be >= 0");
}

Manifest parse_manifest(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed manifest JSON: ") + e.what());
  }
  Manifest m;
  try {
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      m.rules.push_back({r.at("pattern").get<std::string>(), parse_component(r.at("component").get<std::string>())});
    }
    if (j.contains("prunable")) {
      const auto& p = j["prunable"];
      m.prunable.min_rank = p.value("min_rank", 2);
      m.prunable.exclude_patterns = p.value("exclude", std::vector<std::string>{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file_bytes(path)); }

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["rules"] = nlohmann::ordered_json::array();
  for (const auto& r : m.rules) {
    j["rules"].push_back({{"pattern", r.pattern}, {"component", std::string(to_string(r.component))}});
  }
  j["prunable"] = {{"min_rank", m.prunable.min_rank}, {"exclude", m.prunable.exclude_patterns}};
  return j.dump(2);
}

Classification classify_tensors(const Checkpoint& ckpt, const Manifest& manifest) {
  Classification out;
  for (const auto& t : ckpt.tensors()) {
    Component c = Component::kExcluded;
    bool matched = false;
    for (const auto& rule : manifest.rules) {
      if (glob_match(rule.pattern, t.name)) {
        c = rule.component;
        matched = true;
        break;
      }
    }
    if (!matched) out.warnings.push_back("tensor '" + t.name + "' matches no manifest rule; excluded");
    out.assignment[t.name] = c;
  }
  return out;
}

bool is_prunable(const Tensor& t, const PrunablePolicy& policy) {
  if (static_cast<int>(t.rank()) < policy.min_rank) return false;
  for (const auto& p : policy.exclude_patterns) {
    if (glob_match(p, t.name)) return false;
  }
  return true;
}

std::vector<ComponentProfile> component_profiles(const Checkpoint& ckpt,
                                                 const std::map<std::string, Component>& assignment,
                                                 const PrunablePolicy& policy) {
  std::vector<ComponentProfile> profiles;
  for (auto c : kAllComponents) profiles.push_back({c, 0, 0, {}});
  for (const auto& t : ckpt.tensors()) {
    auto it = assignment.find(t.name);
    if (it == assignment.end()) throw ValidationError("assignment does not cover tensor '" + t.name + "'");
    auto& p = profiles[static_cast<std::size_t>(it->second)];
    p.total_params += t.size();
    if (it->second != Component::kExcluded && is_prunable(t, policy)) p.prunable_params += t.size();
    p.tensor_names.push_back(t.name);
  }
  return profiles;
}

std::vector<std::string> prunable_set(const Checkpoint& ckpt, const Manifest& manifest, Component component) {
  std::vector<std::string> names;
  if (component == Component::kExcluded) return names;
  const auto cls = classify_tensors(ckpt, manifest);
  for (const auto& t : ckpt.tensors()) {
    if (cls.assignment.at(t.name) == component && is_prunable(t, manifest.prunable)) names.push_back(t.name);
  }
  return names;
}

std::vector<std::string> prunable_set(const Checkpoint& ckpt, const Manifest& manifest,
                                      std::string_view component_name) {
  return prunable_set(ckpt, manifest, parse_component(component_name));
}

}  // namespace prunekit
