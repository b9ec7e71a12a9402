#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prunekit/tensor.hpp"

namespace prunekit {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LayerKind { kLinear, kRelu, kGelu };

struct ToyLayer {
  LayerKind kind = LayerKind::kLinear;
  std::string weight_name;
  std::optional<std::string> bias_name;
};

// Feed-forward stand-in model over checkpoint tensors. Linear layers compute
// x * W^T + b with W stored [out, in].
struct ToyModelSpec {
  std::vector<ToyLayer> layers;
  std::int64_t input_dim = 0;

  // Checks tensor references, ranks and the dimension chain.
  void validate(const Checkpoint& ckpt) const;
  std::vector<std::string> linear_layers() const;
};

ToyModelSpec parse_model_spec(std::string_view json_text);
ToyModelSpec load_model_spec(const std::filesystem::path& path);
std::string model_spec_to_json(const ToyModelSpec& spec);

struct ForwardResult {
  RowMatrixXd output;
  std::map<std::string, RowMatrixXd> layer_inputs;
};

ForwardResult forward(const ToyModelSpec& spec, const Checkpoint& ckpt, const RowMatrixXd& batch);

struct LayerActivationStats {
  std::string layer;
  Eigen::VectorXd sq_sum;
  std::int64_t rows_seen = 0;

  Eigen::VectorXd norms() const { return sq_sum.cwiseSqrt(); }
  void accumulate(const RowMatrixXd& inputs);
  void merge(const LayerActivationStats& other);
};

struct AccumulateOptions {
  std::int64_t batch_rows = 64;
  int threads = 1;
  // Forces a single sequential pass; results are then bit-reproducible.
  bool deterministic = false;
};

std::map<std::string, LayerActivationStats> accumulate_norms(const ToyModelSpec& spec, const Checkpoint& ckpt,
                                                             const RowMatrixXf& data,
                                                             const AccumulateOptions& opts = {});

struct Divergence {
  double mean_rel_l2 = 0.0;
  double max_rel_l2 = 0.0;
};

inline constexpr double kDivergenceEpsilon = 1e-12;

Divergence output_divergence(const ToyModelSpec& spec, const Checkpoint& dense, const Checkpoint& pruned,
                             const RowMatrixXd& batch);

// Calibration matrix file: "CALB", u32 rows, u32 cols, 4 reserved bytes, then
// row-major little-endian f32.
RowMatrixXf decode_calibration(std::string_view bytes);
std::string encode_calibration(const RowMatrixXf& data);
RowMatrixXf read_calibration(const std::filesystem::path& path);
void write_calibration(const RowMatrixXf& data, const std::filesystem::path& path);

// Norms file: {layer: {"rows_seen": int, "norms": [...]}}.
std::string norms_to_json(const std::map<std::string, LayerActivationStats>& stats);
std::map<std::string, LayerActivationStats> parse_norms(std::string_view json_text);
std::map<std::string, LayerActivationStats> load_norms(const std::filesystem::path& path);
std::map<std::string, Eigen::VectorXd> norm_vectors(const std::map<std::string, LayerActivationStats>& stats);

}  // namespace prunekit
