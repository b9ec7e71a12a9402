#include "prunekit/calibration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <thread>

#include <json.hpp>

#include "prunekit/error.hpp"

namespace prunekit {
namespace {

std::uint32_t le32(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

std::uint32_t read_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return le32(v);
}

void append_u32(std::string& out, std::uint32_t v) {
  v = le32(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

LayerKind parse_kind(const std::string& s) {
  if (s == "linear") return LayerKind::kLinear;
  if (s == "relu") return LayerKind::kRelu;
  if (s == "gelu") return LayerKind::kGelu;
  throw ValidationError("unknown layer kind '" + s + "'");
}

std::string kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kLinear:
      return "linear";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kGelu:
      return "gelu";
  }
  return "linear";
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

void ToyModelSpec::validate(const Checkpoint& ckpt) const {
  if (input_dim < 1) throw ValidationError("model spec input_dim must be >= 1");
  std::int64_t dim = input_dim;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kind != LayerKind::kLinear) continue;
    if (!seen.insert(l.weight_name).second) {
      throw ValidationError("weight '" + l.weight_name + "' is used by more than one linear layer");
    }
    const Tensor* w = ckpt.find(l.weight_name);
    if (!w) throw ValidationError("model spec layer " + std::to_string(i) + ": missing tensor '" + l.weight_name + "'");
    if (w->rank() != 2) throw ValidationError("linear weight '" + l.weight_name + "' must be rank 2");
    if (w->cols() != dim) {
      throw ValidationError("dimension chain violation at layer " + std::to_string(i) + ": '" + l.weight_name +
                            "' expects " + std::to_string(w->cols()) + " inputs, previous layer produces " +
                            std::to_string(dim));
    }
    if (l.bias_name) {
      const Tensor* b = ckpt.find(*l.bias_name);
      if (!b) throw ValidationError("model spec layer " + std::to_string(i) + ": missing tensor '" + *l.bias_name + "'");
      if (b->size() != w->rows()) {
        throw ValidationError("bias '" + *l.bias_name + "' length does not match rows of '" + l.weight_name + "'");
      }
    }
    dim = w->rows();
  }
}

std::vector<std::string> ToyModelSpec::linear_layers() const {
  std::vector<std::string> names;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::kLinear) names.push_back(l.weight_name);
  }
  return names;
}

ToyModelSpec parse_model_spec(std::string_view json_text) {
  ToyModelSpec spec;
  try {
    const auto j = nlohmann::json::parse(json_text);
    spec.input_dim = j.at("input_dim").get<std::int64_t>();
    for (const auto& l : j.at("layers")) {
      ToyLayer layer;
      layer.kind = parse_kind(l.at("kind").get<std::string>());
      if (layer.kind == LayerKind::kLinear) {
        layer.weight_name = l.at("weight").get<std::string>();
        if (l.contains("bias") && !l["bias"].is_null()) layer.bias_name = l["bias"].get<std::string>();
      }
      spec.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model spec: ") + e.what());
  }
  return spec;
}

ToyModelSpec load_model_spec(const std::filesystem::path& path) { return parse_model_spec(read_file_bytes(path)); }

std::string model_spec_to_json(const ToyModelSpec& spec) {
  nlohmann::ordered_json j;
  j["input_dim"] = spec.input_dim;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.layers) {
    nlohmann::ordered_json e{{"kind", kind_name(l.kind)}};
    if (l.kind == LayerKind::kLinear) {
      e["weight"] = l.weight_name;
      if (l.bias_name) e["bias"] = *l.bias_name;
    }
    j["layers"].push_back(std::move(e));
  }
  return j.dump(2);
}

ForwardResult forward(const ToyModelSpec& spec, const Checkpoint& ckpt, const RowMatrixXd& batch) {
  spec.validate(ckpt);
  if (batch.cols() != spec.input_dim) {
    throw ValidationError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                          std::to_string(spec.input_dim));
  }
  ForwardResult r;
  RowMatrixXd x = batch;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::kLinear: {
        r.layer_inputs[l.weight_name] = x;
        const RowMatrixXd w = ckpt.at(l.weight_name).matrix().cast<double>();
        RowMatrixXd y = x * w.transpose();
        if (l.bias_name) y.rowwise() += ckpt.at(*l.bias_name).data.cast<double>().transpose();
        x = std::move(y);
        break;
      }
      case LayerKind::kRelu:
        x = x.cwiseMax(0.0);
        break;
      case LayerKind::kGelu:
        x = x.unaryExpr(&gelu);
        break;
    }
  }
  r.output = std::move(x);
  return r;
}

void LayerActivationStats::accumulate(const RowMatrixXd& inputs) {
  if (sq_sum.size() == 0) sq_sum = Eigen::VectorXd::Zero(inputs.cols());
  if (sq_sum.size() != inputs.cols()) throw ValidationError("activation width changed for layer '" + layer + "'");
  sq_sum += inputs.colwise().squaredNorm().transpose();
  rows_seen += inputs.rows();
}

void LayerActivationStats::merge(const LayerActivationStats& other) {
  if (other.rows_seen == 0) return;
  if (rows_seen == 0) {
    sq_sum = other.sq_sum;
  } else {
    if (sq_sum.size() != other.sq_sum.size()) throw ValidationError("cannot merge stats of different widths");
    sq_sum += other.sq_sum;
  }
  rows_seen += other.rows_seen;
}

std::map<std::string, LayerActivationStats> accumulate_norms(const ToyModelSpec& spec, const Checkpoint& ckpt,
                                                             const RowMatrixXf& data, const AccumulateOptions& opts) {
  spec.validate(ckpt);
  if (data.rows() == 0) throw ValidationError("calibration stream is empty");
  if (opts.batch_rows < 1) throw ValidationError("batch_rows must be >= 1");

  auto run_range = [&](std::int64_t begin, std::int64_t end) {
    std::map<std::string, LayerActivationStats> local;
    for (const auto& name : spec.linear_layers()) local[name].layer = name;
    for (std::int64_t r = begin; r < end; r += opts.batch_rows) {
      const std::int64_t n = std::min(opts.batch_rows, end - r);
      const RowMatrixXd batch = data.middleRows(r, n).cast<double>();
      const auto fwd = forward(spec, ckpt, batch);
      for (const auto& [name, x] : fwd.layer_inputs) local[name].accumulate(x);
    }
    return local;
  };

  const std::int64_t rows = data.rows();
  const int threads = opts.deterministic ? 1 : std::max(1, opts.threads);
  const std::int64_t num_batches = (rows + opts.batch_rows - 1) / opts.batch_rows;
  const std::int64_t workers = std::min<std::int64_t>(threads, num_batches);
  if (workers <= 1) return run_range(0, rows);

  // Contiguous whole-batch chunks, merged in chunk order.
  std::vector<std::map<std::string, LayerActivationStats>> partial(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t b0 = num_batches * w / workers;
    const std::int64_t b1 = num_batches * (w + 1) / workers;
    pool.emplace_back([&, w, b0, b1] {
      partial[static_cast<std::size_t>(w)] =
          run_range(b0 * opts.batch_rows, std::min(rows, b1 * opts.batch_rows));
    });
  }
  for (auto& t : pool) t.join();
  auto merged = std::move(partial.front());
  for (std::size_t w = 1; w < partial.size(); ++w) {
    for (const auto& [name, s] : partial[w]) merged[name].merge(s);
  }
  return merged;
}

Divergence output_divergence(const ToyModelSpec& spec, const Checkpoint& dense, const Checkpoint& pruned,
                             const RowMatrixXd& batch) {
  spec.validate(dense);
  spec.validate(pruned);
  if (batch.rows() == 0) throw ValidationError("divergence batch is empty");
  const RowMatrixXd yd = forward(spec, dense, batch).output;
  const RowMatrixXd yp = forward(spec, pruned, batch).output;
  const Eigen::ArrayXd num = (yd - yp).rowwise().norm().array();
  const Eigen::ArrayXd den = yd.rowwise().norm().array().max(kDivergenceEpsilon);
  const Eigen::ArrayXd rel = num / den;
  return {rel.mean(), rel.maxCoeff()};
}

RowMatrixXf decode_calibration(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != "CALB") throw ValidationError("calibration file lacks CALB header");
  const std::uint32_t rows = read_u32(bytes.data() + 4);
  const std::uint32_t cols = read_u32(bytes.data() + 8);
  const std::uint64_t expected = 16 + 4ull * rows * cols;
  if (bytes.size() != expected) {
    throw ValidationError("calibration payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected));
  }
  RowMatrixXf m(rows, cols);
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(rows) * cols; ++i) {
    const float v = std::bit_cast<float>(read_u32(bytes.data() + 16 + 4 * i));
    if (!std::isfinite(v)) throw ValidationError("non-finite calibration value at byte offset " + std::to_string(16 + 4 * i));
    m.data()[i] = v;
  }
  return m;
}

std::string encode_calibration(const RowMatrixXf& data) {
  std::string out = "CALB";
  append_u32(out, static_cast<std::uint32_t>(data.rows()));
  append_u32(out, static_cast<std::uint32_t>(data.cols()));
  append_u32(out, 0);
  for (Eigen::Index i = 0; i < data.size(); ++i) append_u32(out, std::bit_cast<std::uint32_t>(data.data()[i]));
  return out;
}

RowMatrixXf read_calibration(const std::filesystem::path& path) { return decode_calibration(read_file_bytes(path)); }

void write_calibration(const RowMatrixXf& data, const std::filesystem::path& path) {
  write_file_bytes(path, encode_calibration(data));
}

std::string norms_to_json(const std::map<std::string, LayerActivationStats>& stats) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, s] : stats) {
    const Eigen::VectorXd n = s.norms();
    j[name] = {{"rows_seen", s.rows_seen}, {"norms", std::vector<double>(n.data(), n.data() + n.size())}};
  }
  return j.dump();
}

std::map<std::string, LayerActivationStats> parse_norms(std::string_view json_text) {
  std::map<std::string, LayerActivationStats> out;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw ValidationError("norms file must be a JSON object");
    for (const auto& [name, v] : j.items()) {
      const auto norms = v.at("norms").get<std::vector<double>>();
      LayerActivationStats s;
      s.layer = name;
      s.rows_seen = v.at("rows_seen").get<std::int64_t>();
      s.sq_sum = Eigen::Map<const Eigen::VectorXd>(norms.data(), static_cast<Eigen::Index>(norms.size()));
      if (!s.sq_sum.allFinite() || (s.sq_sum.array() < 0.0).any()) {
        throw ValidationError("norms for layer '" + name + "' must be finite and non-negative");
      }
      s.sq_sum = s.sq_sum.cwiseAbs2();
      out[name] = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed norms file: ") + e.what());
  }
  return out;
}

std::map<std::string, LayerActivationStats> load_norms(const std::filesystem::path& path) {
  return parse_norms(read_file_bytes(path));
}

std::map<std::string, Eigen::VectorXd> norm_vectors(const std::map<std::string, LayerActivationStats>& stats) {
  std::map<std::string, Eigen::VectorXd> out;
  for (const auto& [name, s] : stats) out[name] = s.norms();
  return out;
}

}  // namespace prunekit
