#include "prunekit/fixtures.hpp"

#include <cmath>
#include <random>

namespace prunekit {
namespace {

Tensor gaussian(std::mt19937_64& rng, std::string name, Shape shape, double stddev) {
  std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
  Tensor t(std::move(name), std::move(shape));
  for (auto& v : t.data) v = dist(rng);
  return t;
}

}  // namespace

ToyFixture make_toy_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ToyFixture f;
  auto& c = f.checkpoint;
  c.add(gaussian(rng, "text.embed.weight", {64, 16}, 1.0));
  c.add(gaussian(rng, "text.fc1.weight", {32, 16}, 1.0 / std::sqrt(16.0)));
  c.add(gaussian(rng, "text.fc1.bias", {32}, 0.1));
  c.add(gaussian(rng, "text.fc2.weight", {32, 32}, 1.0 / std::sqrt(32.0)));
  c.add(gaussian(rng, "text.fc2.bias", {32}, 0.1));
  c.add(gaussian(rng, "unet.proj.weight", {16, 32}, 1.0 / std::sqrt(32.0)));
  c.add(gaussian(rng, "unet.proj.bias", {16}, 0.1));
  c.add(gaussian(rng, "unet.conv.weight", {8, 4, 3, 3}, 1.0 / 6.0));
  c.add(gaussian(rng, "unet.norm.weight", {8}, 1.0));
  c.add(gaussian(rng, "vae.decoder.weight", {4, 4}, 1.0));

  // A handful of heavy input columns gives the text layers distinct outlier
  // densities.
  auto fc1 = c.at("text.fc1.weight").matrix();
  fc1.col(0) *= 8.0f;
  fc1.col(5) *= 6.0f;
  c.at("text.fc2.weight").matrix().col(3) *= 4.0f;

  f.manifest.rules = {{"text.*", Component::kTextEncoder},
                      {"unet.*", Component::kImageGenerator},
                      {"vae.*", Component::kExcluded}};
  f.manifest.prunable.min_rank = 2;
  f.manifest.prunable.exclude_patterns = {"*embed*"};

  f.model.input_dim = 16;
  f.model.layers = {{LayerKind::kLinear, "text.fc1.weight", "text.fc1.bias"},
                    {LayerKind::kGelu, "", std::nullopt},
                    {LayerKind::kLinear, "text.fc2.weight", "text.fc2.bias"},
                    {LayerKind::kRelu, "", std::nullopt},
                    {LayerKind::kLinear, "unet.proj.weight", "unet.proj.bias"}};
  return f;
}

RowMatrixXf make_calibration_data(std::uint64_t seed, std::int64_t rows, std::int64_t cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  RowMatrixXf m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  if (cols > 2) m.col(2) *= 5.0f;
  return m;
}

}  // namespace prunekit
