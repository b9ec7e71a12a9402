#include "prunekit/owl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prunekit/error.hpp"

namespace prunekit {

void OwlConfig::validate() const {
  std::ostringstream os;
  if (!(target_sparsity >= 0.0 && target_sparsity <= 1.0)) {
    os << "OWL target sparsity must lie in [0, 1], got " << target_sparsity;
  } else if (!(lambda >= 0.0 && lambda <= std::min(target_sparsity, 1.0 - target_sparsity))) {
    os << "OWL lambda " << lambda << " must lie in [0, min(S, 1 - S)] for S = " << target_sparsity;
  } else if (!(outlier_multiplier > 1.0) || !std::isfinite(outlier_multiplier)) {
    os << "OWL outlier multiplier must be > 1, got " << outlier_multiplier;
  } else {
    return;
  }
  throw ValidationError(os.str());
}

double layer_outlier_ratio(const Tensor& w, const Eigen::VectorXd& norms, double m) {
  if (!(m > 1.0)) throw ValidationError("outlier multiplier must be > 1");
  if (norms.size() != w.cols()) {
    throw ValidationError("norms length " + std::to_string(norms.size()) + " does not match " +
                          std::to_string(w.cols()) + " input columns of '" + w.name + "'");
  }
  return layer_outlier_ratio(w.matrix(), norms, m);
}

LayerSparsityPlan allocate_layer_sparsities(const std::vector<double>& d, const OwlConfig& cfg,
                                            const std::vector<std::string>& layer_names) {
  cfg.validate();
  if (d.empty()) throw ValidationError("OWL allocation needs at least one layer");
  if (!layer_names.empty() && layer_names.size() != d.size()) {
    throw ValidationError("layer name count does not match outlier ratio count");
  }
  const Eigen::Map<const Eigen::ArrayXd> ratios(d.data(), static_cast<Eigen::Index>(d.size()));
  const double mean = ratios.mean();
  const Eigen::ArrayXd shift = mean - ratios;
  // Identical ratios would otherwise leave rounding noise in `shift` that the
  // normalisation blows up to +-lambda.
  const double max_dev = ratios.maxCoeff() == ratios.minCoeff() ? 0.0 : shift.abs().maxCoeff();

  LayerSparsityPlan plan;
  plan.target_sparsity = cfg.target_sparsity;
  plan.lambda = cfg.lambda;
  for (std::size_t l = 0; l < d.size(); ++l) {
    const double s = max_dev == 0.0 ? cfg.target_sparsity
                                     : cfg.target_sparsity + cfg.lambda * shift[static_cast<Eigen::Index>(l)] / max_dev;
    plan.entries.push_back(
        {layer_names.empty() ? "layer" + std::to_string(l) : layer_names[l], d[l], std::clamp(s, 0.0, 1.0)});
  }
  return plan;
}

OwlPruneResult owl_prune_component(const std::vector<const Tensor*>& layers,
                                   const std::map<std::string, Eigen::VectorXd>& norms, Method method,
                                   const OwlConfig& cfg, Group group) {
  cfg.validate();
  std::vector<double> ratios;
  std::vector<std::string> names;
  for (const Tensor* t : layers) {
    auto it = norms.find(t->name);
    if (it == norms.end()) throw ValidationError("missing activation norms for layer '" + t->name + "'");
    ratios.push_back(layer_outlier_ratio(*t, it->second, cfg.outlier_multiplier));
    names.push_back(t->name);
  }
  OwlPruneResult out;
  out.plan = allocate_layer_sparsities(ratios, cfg, names);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Eigen::VectorXd* n = method == Method::kWanda ? &norms.at(layers[l]->name) : nullptr;
    out.layers.push_back(prune_layer(*layers[l], method, out.plan.entries[l].assigned_sparsity, n, group));
  }
  return out;
}

}  // namespace prunekit
