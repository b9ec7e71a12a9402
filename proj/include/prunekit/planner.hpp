#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "prunekit/kernels.hpp"
#include "prunekit/manifest.hpp"

namespace prunekit {

// Split of a full-model sparsity budget between the text encoder and the
// image generator. `ratio_text` is the share of all pruned weights taken from
// the text encoder.
struct SparsityPlan {
  double total_sparsity = 0.0;
  double ratio_text = 0.0;
  double ratio_image = 1.0;
  std::int64_t n_text = kSd2TextParams;
  std::int64_t n_image = kSd2ImageParams;
  double s_text = 0.0;
  double s_image = 0.0;
  bool feasible = true;
};

// Infeasible splits (a component above 100%) are returned with their
// out-of-range values and feasible = false.
SparsityPlan allocate_by_ratio(double total, double ratio_text, std::int64_t n_text = kSd2TextParams,
                               std::int64_t n_image = kSd2ImageParams);

// Parses "T:I" (e.g. "75:25") into the text share T / (T + I).
double parse_ratio(std::string_view text);

double total_sparsity(double s_text, double s_image, std::int64_t n_text = kSd2TextParams,
                      std::int64_t n_image = kSd2ImageParams);

struct SweepRow {
  double s_text = 0.0;
  double s_image = 0.0;
  double total = 0.0;
  bool clamped = false;
};

struct SweepConfig {
  double text_threshold = 0.0;
  double image_threshold = 0.0;
  double step = 0.025;
  std::int64_t count = 0;
  std::vector<SweepRow> rows;
};

// Row i lowers both component sparsities by i * step from the thresholds.
SweepConfig threshold_sweep(double text_threshold, double image_threshold, double step = 0.025,
                            std::int64_t count = 9, std::int64_t n_text = kSd2TextParams,
                            std::int64_t n_image = kSd2ImageParams);

struct ComponentThresholds {
  double text = 0.0;
  double image = 0.0;
};

// Component sparsities past which generation quality collapses.
ComponentThresholds default_thresholds(Method method);
ComponentThresholds default_thresholds(std::string_view method);

// Recommended full-model configuration: text 47.5%, image 35%.
inline constexpr ComponentThresholds kRecommendedConfig{0.475, 0.35};

}  // namespace prunekit
