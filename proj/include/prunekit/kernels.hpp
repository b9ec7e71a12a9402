#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prunekit/tensor.hpp"

namespace prunekit {

enum class Method { kMagnitude, kWanda };
enum class Group { kPerTensor, kPerRow };

std::string_view to_string(Method m);
std::string_view to_string(Group g);
Method parse_method(std::string_view s);
Group parse_group(std::string_view s);
// per_tensor for magnitude, per_row (output rows) for Wanda.
Group default_group(Method m);

// Elementwise |w|. Works on any Eigen expression; the result is an
// unevaluated array expression in double precision.
template <typename Derived>
auto magnitude_scores(const Eigen::DenseBase<Derived>& w) {
  return w.derived().template cast<double>().array().abs();
}

// |W_ij| * norm_j for a [rows=outputs, cols=inputs] weight matrix.
template <typename WDerived, typename NDerived>
auto wanda_scores(const Eigen::MatrixBase<WDerived>& w, const Eigen::MatrixBase<NDerived>& norms) {
  return (w.derived().template cast<double>().array().abs().rowwise() *
          norms.derived().template cast<double>().transpose().array());
}

// Scores laid out like the tensor they came from (row-major, flat).
struct ScoreMatrix {
  Shape shape;
  Eigen::ArrayXd values;

  std::int64_t rows() const { return shape.empty() ? 0 : shape.front(); }
  std::int64_t cols() const { return rows() == 0 ? 0 : values.size() / rows(); }
};

ScoreMatrix magnitude_scores(const Tensor& w);
// Throws ValidationError unless w is rank 2 and norms.size() == w.cols().
ScoreMatrix wanda_scores(const Tensor& w, const Eigen::VectorXd& norms);

struct PruneMask {
  Shape shape;
  Group group = Group::kPerTensor;
  std::int64_t group_size = 0;
  std::vector<std::int64_t> k_per_group;
  Eigen::Array<bool, Eigen::Dynamic, 1> pruned;

  std::int64_t size() const { return pruned.size(); }
  std::int64_t count() const { return pruned.count(); }
  std::int64_t num_groups() const { return static_cast<std::int64_t>(k_per_group.size()); }
};

// Number of entries pruned in a group of n at the given sparsity:
// floor(sparsity * n + 0.5).
std::int64_t prune_count(double sparsity, std::int64_t n);

// Marks the k lowest-scored entries of every comparison group. Ties resolve
// toward the lower flat index, so masks nest as sparsity grows.
PruneMask select_prune_mask(const ScoreMatrix& scores, double sparsity, Group group);

Tensor apply_mask(const Tensor& w, const PruneMask& mask);

// Inclusive-start, length runs of pruned flat indices.
std::vector<std::pair<std::int64_t, std::int64_t>> run_length_encode(const PruneMask& mask);

struct PruneResult {
  Tensor tensor;
  PruneMask mask;
  std::int64_t newly_zeroed = 0;
};

PruneResult prune_layer(const Tensor& w, Method method, double sparsity, const Eigen::VectorXd* norms,
                        Group group);

}  // namespace prunekit
