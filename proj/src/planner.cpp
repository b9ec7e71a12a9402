#include "prunekit/planner.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "prunekit/error.hpp"

namespace prunekit {
namespace {

void check_fraction(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
}

void check_counts(std::int64_t n_text, std::int64_t n_image) {
  if (n_text <= 0 || n_image <= 0) throw ValidationError("component parameter counts must be positive");
}

}  // namespace

SparsityPlan allocate_by_ratio(double total, double ratio_text, std::int64_t n_text, std::int64_t n_image) {
  check_fraction(total, "total sparsity");
  check_fraction(ratio_text, "text ratio");
  check_counts(n_text, n_image);
  SparsityPlan p;
  p.total_sparsity = total;
  p.ratio_text = ratio_text;
  p.ratio_image = 1.0 - ratio_text;
  p.n_text = n_text;
  p.n_image = n_image;
  const double pruned = total * static_cast<double>(n_text + n_image);
  p.s_text = ratio_text * pruned / static_cast<double>(n_text);
  p.s_image = p.ratio_image * pruned / static_cast<double>(n_image);
  p.feasible = p.s_text <= 1.0 && p.s_image <= 1.0;
  return p;
}

double parse_ratio(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError("ratio must look like T:I, got '" + std::string(text) + "'");
  auto parse = [&](std::string_view part) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || !(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("bad ratio component '" + std::string(part) + "'");
    }
    return v;
  };
  const double t = parse(text.substr(0, colon));
  const double i = parse(text.substr(colon + 1));
  if (t + i <= 0.0) throw ValidationError("ratio parts must not both be zero");
  return t / (t + i);
}

double total_sparsity(double s_text, double s_image, std::int64_t n_text, std::int64_t n_image) {
  check_counts(n_text, n_image);
  return (s_text * static_cast<double>(n_text) + s_image * static_cast<double>(n_image)) /
         static_cast<double>(n_text + n_image);
}

SweepConfig threshold_sweep(double text_threshold, double image_threshold, double step, std::int64_t count,
                            std::int64_t n_text, std::int64_t n_image) {
  check_fraction(text_threshold, "text threshold");
  check_fraction(image_threshold, "image threshold");
  if (!(step > 0.0)) throw ValidationError("sweep step must be positive");
  if (count <= 0) throw ValidationError("sweep count must be positive");
  SweepConfig cfg{text_threshold, image_threshold, step, count, {}};
  for (std::int64_t i = 0; i < count; ++i) {
    SweepRow row;
    row.s_text = text_threshold - static_cast<double>(i) * step;
    row.s_image = image_threshold - static_cast<double>(i) * step;
    // Tolerate accumulated rounding at the zero boundary without flagging.
    if (row.s_text < 0.0) {
      row.clamped = row.clamped || row.s_text < -1e-12;
      row.s_text = 0.0;
    }
    if (row.s_image < 0.0) {
      row.clamped = row.clamped || row.s_image < -1e-12;
      row.s_image = 0.0;
    }
    row.total = total_sparsity(row.s_text, row.s_image, n_text, n_image);
    cfg.rows.push_back(row);
  }
  return cfg;
}

ComponentThresholds default_thresholds(Method method) {
  return method == Method::kMagnitude ? ComponentThresholds{0.625, 0.50} : ComponentThresholds{0.60, 0.50};
}

ComponentThresholds default_thresholds(std::string_view method) { return default_thresholds(parse_method(method)); }

}  // namespace prunekit
