#include "prunekit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prunekit/error.hpp"

namespace prunekit {

std::string_view to_string(Method m) { return m == Method::kMagnitude ? "magnitude" : "wanda"; }

std::string_view to_string(Group g) { return g == Group::kPerTensor ? "per_tensor" : "per_row"; }

Method parse_method(std::string_view s) {
  if (s == "magnitude") return Method::kMagnitude;
  if (s == "wanda") return Method::kWanda;
  throw ValidationError("unknown method '" + std::string(s) + "' (expected magnitude or wanda)");
}

Group parse_group(std::string_view s) {
  if (s == "per_tensor") return Group::kPerTensor;
  if (s == "per_row") return Group::kPerRow;
  throw ValidationError("unknown group '" + std::string(s) + "' (expected per_tensor or per_row)");
}

Group default_group(Method m) { return m == Method::kMagnitude ? Group::kPerTensor : Group::kPerRow; }

ScoreMatrix magnitude_scores(const Tensor& w) { return {w.shape, magnitude_scores(w.data)}; }

ScoreMatrix wanda_scores(const Tensor& w, const Eigen::VectorXd& norms) {
  if (w.rank() != 2) throw ValidationError("wanda requires rank-2 weights ('" + w.name + "')");
  if (norms.size() != w.cols()) {
    throw ValidationError("norms length " + std::to_string(norms.size()) + " does not match " +
                          std::to_string(w.cols()) + " input columns of '" + w.name + "'");
  }
  if ((norms.array() < 0.0).any() || !norms.allFinite()) {
    throw ValidationError("norms for '" + w.name + "' must be finite and non-negative");
  }
  ScoreMatrix s{w.shape, Eigen::ArrayXd(w.size())};
  Eigen::Map<Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(s.values.data(), w.rows(),
                                                                                   w.cols()) =
      wanda_scores(w.matrix(), norms);
  return s;
}

std::int64_t prune_count(double sparsity, std::int64_t n) {
  const auto k = static_cast<std::int64_t>(std::floor(sparsity * static_cast<double>(n) + 0.5));
  return std::clamp<std::int64_t>(k, 0, n);
}

PruneMask select_prune_mask(const ScoreMatrix& scores, double sparsity, Group group) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ValidationError("sparsity must lie in [0, 1], got " + std::to_string(sparsity));
  }
  const std::int64_t n = scores.values.size();
  PruneMask mask;
  mask.shape = scores.shape;
  mask.group = group;
  mask.pruned = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  if (n == 0) return mask;

  mask.group_size = group == Group::kPerTensor ? n : scores.cols();
  const std::int64_t groups = n / mask.group_size;
  const std::int64_t k = prune_count(sparsity, mask.group_size);
  mask.k_per_group.assign(static_cast<std::size_t>(groups), k);
  if (k == 0) return mask;

  std::vector<std::int64_t> order(static_cast<std::size_t>(mask.group_size));
  const double* v = scores.values.data();
  for (std::int64_t g = 0; g < groups; ++g) {
    const std::int64_t base = g * mask.group_size;
    std::iota(order.begin(), order.end(), base);
    // (score, index) is a strict total order, so the selected set is unique.
    auto less = [v](std::int64_t a, std::int64_t b) { return v[a] < v[b] || (v[a] == v[b] && a < b); };
    if (k < mask.group_size) std::nth_element(order.begin(), order.begin() + k, order.end(), less);
    for (std::int64_t i = 0; i < k; ++i) mask.pruned[order[static_cast<std::size_t>(i)]] = true;
  }
  return mask;
}

Tensor apply_mask(const Tensor& w, const PruneMask& mask) {
  if (w.shape != mask.shape || w.size() != mask.size()) {
    throw ValidationError("mask shape " + shape_to_string(mask.shape) + " does not match tensor '" + w.name +
                          "' shape " + shape_to_string(w.shape));
  }
  Tensor out(w.name, w.shape, w.data);
  out.data = mask.pruned.select(Eigen::ArrayXf::Zero(w.size()), w.data.array()).matrix();
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> run_length_encode(const PruneMask& mask) {
  std::vector<std::pair<std::int64_t, std::int64_t>> runs;
  const std::int64_t n = mask.size();
  for (std::int64_t i = 0; i < n;) {
    if (!mask.pruned[i]) {
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j < n && mask.pruned[j]) ++j;
    runs.emplace_back(i, j - i);
    i = j;
  }
  return runs;
}

PruneResult prune_layer(const Tensor& w, Method method, double sparsity, const Eigen::VectorXd* norms,
                        Group group) {
  ScoreMatrix scores;
  if (method == Method::kWanda) {
    if (w.rank() != 2) throw ValidationError("wanda requires rank-2 weights ('" + w.name + "')");
    if (norms == nullptr) throw ValidationError("wanda requires activation norms for '" + w.name + "'");
    scores = wanda_scores(w, *norms);
  } else {
    scores = magnitude_scores(w);
  }
  PruneResult r;
  r.mask = select_prune_mask(scores, sparsity, group);
  r.tensor = apply_mask(w, r.mask);
  r.newly_zeroed = (r.mask.pruned && (w.data.array() != 0.0f)).count();
  return r;
}

}  // namespace prunekit
