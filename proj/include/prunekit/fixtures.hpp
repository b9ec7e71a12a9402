#pragma once

#include <cstdint>

#include "prunekit/calibration.hpp"
#include "prunekit/manifest.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

// Seeded two-component toy model: a small text encoder MLP feeding an image
// generator projection, plus rank-1 and rank-4 tensors that exercise the
// prunable policy.
struct ToyFixture {
  Checkpoint checkpoint;
  Manifest manifest;
  ToyModelSpec model;
};

ToyFixture make_toy_fixture(std::uint64_t seed);

// Gaussian calibration rows with a few high-variance features.
RowMatrixXf make_calibration_data(std::uint64_t seed, std::int64_t rows, std::int64_t cols);

}  // namespace prunekit
