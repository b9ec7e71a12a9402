#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "prunekit/calibration.hpp"
#include "prunekit/error.hpp"
#include "prunekit/fixtures.hpp"
#include "prunekit/kernels.hpp"
#include "test_util.hpp"

using namespace prunekit;

namespace {

// Plain nested-loop forward pass used as the independent reference.
std::vector<std::vector<double>> oracle_forward(const ToyModelSpec& spec, const Checkpoint& ckpt,
                                                std::vector<std::vector<double>> x) {
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::kRelu) {
      for (auto& row : x)
        for (auto& v : row) v = v > 0 ? v : 0;
    } else if (l.kind == LayerKind::kGelu) {
      for (auto& row : x)
        for (auto& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    } else {
      const Tensor& w = ckpt.at(l.weight_name);
      const auto out = w.shape[0], in = w.shape[1];
      std::vector<std::vector<double>> y(x.size(), std::vector<double>(static_cast<std::size_t>(out), 0.0));
      for (std::size_t r = 0; r < x.size(); ++r) {
        for (std::int64_t o = 0; o < out; ++o) {
          double acc = l.bias_name ? ckpt.at(*l.bias_name).data[o] : 0.0;
          for (std::int64_t i = 0; i < in; ++i) acc += x[r][i] * static_cast<double>(w.data[o * in + i]);
          y[r][o] = acc;
        }
      }
      x = std::move(y);
    }
  }
  return x;
}

RowMatrixXd to_double(const RowMatrixXf& m) { return m.cast<double>(); }

ToyModelSpec single_linear(const std::string& w, std::int64_t in) {
  ToyModelSpec s;
  s.input_dim = in;
  s.layers = {{LayerKind::kLinear, w, std::nullopt}};
  return s;
}

}  // namespace

TEST_CASE("forward: hand examples") {
  Checkpoint c;
  c.add(Tensor("eye", {3, 3}, Eigen::Matrix3f::Identity().reshaped<Eigen::RowMajor>()));
  c.add(Tensor("w", {2, 2}, Eigen::Vector4f(1, 2, 3, 4)));
  RowMatrixXd x(1, 3);
  x << 0.5, -2.0, 7.0;
  CHECK(forward(single_linear("eye", 3), c, x).output == x);

  RowMatrixXd ones = RowMatrixXd::Ones(1, 2);
  const auto r = forward(single_linear("w", 2), c, ones);
  CHECK(r.output(0, 0) == 3.0);
  CHECK(r.output(0, 1) == 7.0);
  CHECK(r.layer_inputs.at("w") == ones);
}

TEST_CASE("forward matches nested-loop oracle on the toy model") {
  const auto f = make_toy_fixture(42);
  const auto data = make_calibration_data(3, 20, 16);
  const auto got = forward(f.model, f.checkpoint, to_double(data)).output;
  std::vector<std::vector<double>> rows;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    rows.emplace_back(data.row(r).data(), data.row(r).data() + data.cols());
  }
  const auto expected = oracle_forward(f.model, f.checkpoint, rows);
  for (std::size_t r = 0; r < expected.size(); ++r) {
    for (std::size_t o = 0; o < expected[r].size(); ++o) {
      CHECK(got(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(o)) ==
            doctest::Approx(expected[r][o]).epsilon(1e-6));
    }
  }
}

TEST_CASE("model validation") {
  const auto f = make_toy_fixture(1);
  auto broken = f.model;
  broken.input_dim = 15;
  CHECK_THROWS_AS(broken.validate(f.checkpoint), ValidationError);
  broken = f.model;
  broken.layers[2].weight_name = "text.nope";
  CHECK_THROWS_AS(broken.validate(f.checkpoint), ValidationError);
  broken = f.model;
  std::swap(broken.layers[0], broken.layers[2]);
  CHECK_THROWS_AS(broken.validate(f.checkpoint), ValidationError);
  CHECK_THROWS_AS(forward(f.model, f.checkpoint, RowMatrixXd::Ones(2, 3)), ValidationError);

  const auto parsed = parse_model_spec(model_spec_to_json(f.model));
  CHECK(parsed.linear_layers() == f.model.linear_layers());
  CHECK_THROWS_AS(parse_model_spec(R"({"input_dim":2,"layers":[{"kind":"conv"}]})"), ValidationError);
}

TEST_CASE("accumulate_norms: simple cases") {
  Checkpoint c;
  c.add(Tensor("w", {2, 2}, Eigen::Vector4f(1, 0, 0, 1)));
  const auto spec = single_linear("w", 2);

  const auto ones = accumulate_norms(spec, c, RowMatrixXf::Ones(1, 2));
  CHECK(ones.at("w").norms() == Eigen::Vector2d(1, 1));

  RowMatrixXf two(2, 2);
  two << 3, 0, 4, 0;
  const auto s = accumulate_norms(spec, c, two);
  CHECK(s.at("w").norms() == Eigen::Vector2d(5, 0));
  CHECK(s.at("w").rows_seen == 2);

  CHECK_THROWS_AS(accumulate_norms(spec, c, RowMatrixXf(0, 2)), ValidationError);
}

TEST_CASE("accumulate_norms matches column-norm oracle over recorded inputs") {
  const auto f = make_toy_fixture(42);
  const auto data = make_calibration_data(9, 100, 16);
  const auto stats = accumulate_norms(f.model, f.checkpoint, data, {.batch_rows = 7, .threads = 1, .deterministic = true});
  const auto inputs = forward(f.model, f.checkpoint, to_double(data)).layer_inputs;
  for (const auto& [name, x] : inputs) {
    const auto norms = stats.at(name).norms();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double sq = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) sq += x(r, j) * x(r, j);
      CHECK(norms[j] == doctest::Approx(std::sqrt(sq)).epsilon(1e-6));
    }
    CHECK(stats.at(name).rows_seen == 100);
  }
}

TEST_CASE("accumulate_norms: determinism, threading, permutation and scaling") {
  const auto f = make_toy_fixture(42);
  const auto data = make_calibration_data(5, 300, 16);
  const auto a = accumulate_norms(f.model, f.checkpoint, data, {16, 1, true});
  const auto b = accumulate_norms(f.model, f.checkpoint, data, {16, 8, true});
  for (const auto& [name, s] : a) CHECK(s.sq_sum == b.at(name).sq_sum);

  const auto threaded = accumulate_norms(f.model, f.checkpoint, data, {16, 4, false});
  RowMatrixXf reversed = data.colwise().reverse();
  const auto perm = accumulate_norms(f.model, f.checkpoint, reversed, {16, 1, true});
  // The first layer is linear in the input, so scaling rows by c scales its norms by c.
  const auto scaled = accumulate_norms(f.model, f.checkpoint, RowMatrixXf(data * 2.5f), {16, 1, true});
  for (const auto& [name, s] : a) {
    const auto n = s.norms();
    for (Eigen::Index j = 0; j < n.size(); ++j) {
      CHECK(threaded.at(name).norms()[j] == doctest::Approx(n[j]).epsilon(1e-6));
      CHECK(perm.at(name).norms()[j] == doctest::Approx(n[j]).epsilon(1e-6));
    }
  }
  const auto n0 = a.at("text.fc1.weight").norms();
  const auto n1 = scaled.at("text.fc1.weight").norms();
  for (Eigen::Index j = 0; j < n0.size(); ++j) CHECK(n1[j] == doctest::Approx(2.5 * n0[j]).epsilon(1e-6));
}

TEST_CASE("output divergence") {
  const auto f = make_toy_fixture(42);
  const RowMatrixXd batch = to_double(make_calibration_data(2, 50, 16));
  const auto same = output_divergence(f.model, f.checkpoint, f.checkpoint, batch);
  CHECK(same.mean_rel_l2 == 0.0);
  CHECK(same.max_rel_l2 == 0.0);

  // Zeroing the last projection and its bias drives every output to zero.
  Checkpoint zeroed = f.checkpoint;
  zeroed.at("unet.proj.weight").data.setZero();
  zeroed.at("unet.proj.bias").data.setZero();
  const auto full = output_divergence(f.model, f.checkpoint, zeroed, batch);
  CHECK(full.mean_rel_l2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(full.max_rel_l2 == doctest::Approx(1.0).epsilon(1e-12));

  auto prune_image = [&](double s) {
    Checkpoint c = f.checkpoint;
    c.at("unet.proj.weight") =
        prune_layer(f.checkpoint.at("unet.proj.weight"), Method::kMagnitude, s, nullptr, Group::kPerTensor).tensor;
    return output_divergence(f.model, f.checkpoint, c, batch).mean_rel_l2;
  };
  const double low = prune_image(0.1), high = prune_image(0.9);
  CHECK(low > 0.0);
  CHECK(high > low);

  Checkpoint missing;
  CHECK_THROWS_AS(output_divergence(f.model, f.checkpoint, missing, batch), ValidationError);
}

TEST_CASE("calibration and norms files") {
  const auto data = make_calibration_data(1, 5, 3);
  const auto bytes = encode_calibration(data);
  CHECK(bytes.size() == 16 + 4 * 15);
  CHECK(bytes.substr(0, 4) == "CALB");
  CHECK(decode_calibration(bytes) == data);
  CHECK_THROWS_AS(decode_calibration(bytes.substr(0, bytes.size() - 1)), ValidationError);
  CHECK_THROWS_AS(decode_calibration("XXXX" + bytes.substr(4)), ValidationError);

  std::map<std::string, LayerActivationStats> stats;
  stats["a"] = {"a", Eigen::Vector3d(1.0, 4.0, 0.0), 10};
  const auto parsed = parse_norms(norms_to_json(stats));
  CHECK(parsed.at("a").rows_seen == 10);
  CHECK(parsed.at("a").norms() == Eigen::Vector3d(1.0, 2.0, 0.0));
  CHECK_THROWS_AS(parse_norms(R"({"a":{"rows_seen":1,"norms":[-1.0]}})"), ValidationError);
  CHECK_THROWS_AS(parse_norms("[1,2]"), ValidationError);
}
