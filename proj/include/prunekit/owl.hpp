#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prunekit/kernels.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

// Outlier-weighted layerwise sparsity settings. M and lambda defaults are
// configuration choices, not published values.
struct OwlConfig {
  double target_sparsity = 0.5;
  double lambda = 0.08;
  double outlier_multiplier = 5.0;

  void validate() const;
};

struct LayerSparsity {
  std::string layer;
  double outlier_ratio = 0.0;
  double assigned_sparsity = 0.0;
};

struct LayerSparsityPlan {
  std::vector<LayerSparsity> entries;
  double target_sparsity = 0.0;
  double lambda = 0.0;
};

// Fraction of A = |W| * norms entries strictly above M * mean(A). Tensors of
// rank > 2 are viewed as [shape[0], rest].
template <typename WDerived, typename NDerived>
double layer_outlier_ratio(const Eigen::MatrixBase<WDerived>& w, const Eigen::MatrixBase<NDerived>& norms,
                           double m) {
  const Eigen::ArrayXXd a = wanda_scores(w, norms);
  if (a.size() == 0) return 0.0;
  const double mean = a.mean();
  if (mean == 0.0) return 0.0;
  return static_cast<double>((a > m * mean).count()) / static_cast<double>(a.size());
}

double layer_outlier_ratio(const Tensor& w, const Eigen::VectorXd& norms, double m);

// S_l = S + lambda * (mean(D) - D_l) / max_l |D_l - mean(D)|; uniform when all
// D_l coincide.
LayerSparsityPlan allocate_layer_sparsities(const std::vector<double>& outlier_ratios, const OwlConfig& cfg,
                                            const std::vector<std::string>& layer_names = {});

struct OwlPruneResult {
  std::vector<PruneResult> layers;
  LayerSparsityPlan plan;
};

// Allocates per-layer sparsities from outlier ratios, then prunes each layer
// with `method` at its own target. Every layer needs norms for the outlier
// scan, whatever the selection method.
OwlPruneResult owl_prune_component(const std::vector<const Tensor*>& layers,
                                   const std::map<std::string, Eigen::VectorXd>& norms, Method method,
                                   const OwlConfig& cfg, Group group);

}  // namespace prunekit
