#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace prunekit {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Named, row-major F32 tensor. `data` is the flat payload; matrix views treat
// dimension 0 as rows and fold the remaining dimensions into columns.
struct Tensor {
  using Storage = Eigen::VectorXf;
  using MatrixView = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixView =
      Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  std::string name;
  Shape shape;
  Storage data;

  Tensor() = default;
  Tensor(std::string name, Shape shape);
  Tensor(std::string name, Shape shape, Storage data);

  std::size_t rank() const { return shape.size(); }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t rows() const { return shape.empty() ? 0 : shape.front(); }
  std::int64_t cols() const { return rows() == 0 ? 0 : size() / rows(); }

  MatrixView matrix() { return {data.data(), rows(), cols()}; }
  ConstMatrixView matrix() const { return {data.data(), rows(), cols()}; }

  // Throws ValidationError when shape and payload disagree or a value is
  // non-finite.
  void validate() const;
};

// Bitwise comparison of payloads; -0.0f and 0.0f compare unequal.
bool operator==(const Tensor& a, const Tensor& b);

struct TensorStats {
  std::int64_t count = 0;
  std::int64_t zeros = 0;
  double sparsity = 0.0;
};

TensorStats tensor_stats(const Tensor& t);

// Ordered tensor collection; iteration order is the on-disk header order.
class Checkpoint {
 public:
  std::map<std::string, std::string> metadata;

  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::vector<Tensor>& tensors() { return tensors_; }

  void add(Tensor t);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor* find(std::string_view name) const;

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }
  std::int64_t total_params() const;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);

 private:
  std::vector<Tensor> tensors_;
};

// Container encoding: u64 LE header length, compact JSON header, raw LE f32
// payloads packed in tensor order.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

Checkpoint read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace prunekit
