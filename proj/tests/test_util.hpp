#pragma once

// Shared test helpers and brute-force oracles. Oracles here deliberately avoid
// the library's code paths (no Eigen expressions, no nth_element).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "prunekit/tensor.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("prunekit_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline prunekit::Tensor random_tensor(std::mt19937_64& rng, std::string name, prunekit::Shape shape) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  prunekit::Tensor t(std::move(name), std::move(shape));
  for (auto& v : t.data) v = dist(rng);
  return t;
}

inline prunekit::Shape random_shape(std::mt19937_64& rng, std::int64_t max_elems) {
  std::uniform_int_distribution<int> rank_dist(1, 4);
  const int rank = rank_dist(rng);
  prunekit::Shape shape;
  std::int64_t n = 1;
  for (int d = 0; d < rank; ++d) {
    const std::int64_t cap = std::max<std::int64_t>(1, std::min<std::int64_t>(64, max_elems / n));
    std::uniform_int_distribution<std::int64_t> dim(1, cap);
    shape.push_back(dim(rng));
    n *= shape.back();
  }
  return shape;
}

// Sort every index of a group by (score, index) and take the first k.
inline std::vector<bool> oracle_mask(const std::vector<double>& scores, double sparsity, std::int64_t group_size) {
  const auto n = static_cast<std::int64_t>(scores.size());
  std::vector<bool> pruned(scores.size(), false);
  const auto k = static_cast<std::int64_t>(std::floor(sparsity * static_cast<double>(group_size) + 0.5));
  for (std::int64_t base = 0; base < n; base += group_size) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(group_size));
    std::iota(idx.begin(), idx.end(), base);
    std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) { return scores[a] < scores[b]; });
    for (std::int64_t i = 0; i < k; ++i) pruned[idx[i]] = true;
  }
  return pruned;
}

inline std::vector<double> oracle_abs(const prunekit::Tensor& t) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < t.data.size(); ++i) out.push_back(std::fabs(static_cast<double>(t.data[i])));
  return out;
}

inline std::vector<double> oracle_wanda(const prunekit::Tensor& w, const std::vector<double>& norms) {
  const auto rows = w.shape[0], cols = w.shape[1];
  std::vector<double> out(static_cast<std::size_t>(rows * cols));
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      out[i * cols + j] = std::fabs(static_cast<double>(w.data[i * cols + j])) * norms[j];
    }
  }
  return out;
}

}  // namespace testutil
