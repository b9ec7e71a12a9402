#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <string>

#include "prunekit/error.hpp"
#include "prunekit/tensor.hpp"
#include "test_util.hpp"

using namespace prunekit;

namespace {

std::string u64le(std::uint64_t v) {
  std::string s;
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  return s;
}

std::string container(const std::string& header, const std::string& payload) {
  return u64le(header.size()) + header + payload;
}

std::string floats_le(std::initializer_list<std::uint32_t> bits) {
  std::string s;
  for (auto b : bits) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((b >> (8 * i)) & 0xff));
  }
  return s;
}

std::string error_of(const std::string& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("fixture bytes for a single 2x2 tensor") {
  // Built by hand: header JSON literal plus IEEE-754 bit patterns of 1..4.
  const std::string header = R"({"w":{"dtype":"F32","shape":[2,2],"data_offsets":[0,16]}})";
  const std::string expected =
      container(header, floats_le({0x3f800000u, 0x40000000u, 0x40400000u, 0x40800000u}));

  Checkpoint c;
  c.add(Tensor("w", {2, 2}, Eigen::Vector4f(1, 2, 3, 4)));
  CHECK(encode_checkpoint(c) == expected);

  const auto back = decode_checkpoint(expected);
  REQUIRE(back.size() == 1);
  CHECK(back.tensors()[0].name == "w");
  CHECK(back.tensors()[0].shape == Shape{2, 2});
  CHECK(back.tensors()[0].data == Eigen::Vector4f(1, 2, 3, 4));
}

TEST_CASE("declared shape longer than payload names the tensor") {
  const std::string header = R"({"bad":{"dtype":"F32","shape":[2,3],"data_offsets":[0,20]}})";
  const auto msg = error_of(container(header, std::string(20, '\0')));
  CHECK(msg.find("'bad'") != std::string::npos);
  CHECK(msg.find("byte offset") != std::string::npos);
}

TEST_CASE("write is deterministic and the empty checkpoint is valid") {
  std::mt19937_64 rng(7);
  Checkpoint c;
  c.metadata["format"] = "pt";
  c.add(testutil::random_tensor(rng, "b", {3, 5}));
  c.add(testutil::random_tensor(rng, "a", {4}));
  CHECK(encode_checkpoint(c) == encode_checkpoint(c));

  const auto bytes = encode_checkpoint(c);
  // Header keys keep stored order, not alphabetical.
  CHECK(bytes.find("\"b\"") < bytes.find("\"a\""));

  Checkpoint empty;
  const auto eb = encode_checkpoint(empty);
  CHECK(eb == container("{}", ""));
  CHECK(decode_checkpoint(eb).empty());
}

TEST_CASE("file round trip and missing file") {
  const auto dir = testutil::temp_dir("tensor");
  std::mt19937_64 rng(1);
  Checkpoint c;
  c.metadata["k"] = "v";
  c.add(testutil::random_tensor(rng, "x", {2, 3, 4}));
  write_checkpoint(c, dir / "c.safetensors");
  CHECK(read_checkpoint(dir / "c.safetensors") == c);
  CHECK_THROWS_AS(read_checkpoint(dir / "nope.safetensors"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed containers are rejected") {
  SUBCASE("short file") { CHECK(error_of("abc").find("too short") != std::string::npos); }
  SUBCASE("header length beyond file") {
    CHECK(error_of(u64le(1000) + "{}").find("exceeds") != std::string::npos);
  }
  SUBCASE("invalid JSON") { CHECK(error_of(container("{\"w\":", "")).find("JSON") != std::string::npos); }
  SUBCASE("unsupported dtype") {
    const auto msg = error_of(container(R"({"h":{"dtype":"F16","shape":[2],"data_offsets":[0,4]}})", std::string(4, 0)));
    CHECK(msg.find("F16") != std::string::npos);
    CHECK(msg.find("'h'") != std::string::npos);
  }
  SUBCASE("zero dimension") {
    CHECK(error_of(container(R"({"z":{"dtype":"F32","shape":[0],"data_offsets":[0,0]}})", "")).find("'z'") !=
          std::string::npos);
  }
  SUBCASE("empty shape") {
    CHECK(error_of(container(R"({"s":{"dtype":"F32","shape":[],"data_offsets":[0,4]}})", std::string(4, 0)))
              .find("'s'") != std::string::npos);
  }
  SUBCASE("overlap") {
    const auto msg = error_of(container(
        R"({"a":{"dtype":"F32","shape":[2],"data_offsets":[0,8]},"b":{"dtype":"F32","shape":[2],"data_offsets":[4,12]}})",
        std::string(12, 0)));
    CHECK(msg.find("overlapping") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
  SUBCASE("gap") {
    const auto msg = error_of(container(R"({"g":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}})", std::string(8, 0)));
    CHECK(msg.find("gap") != std::string::npos);
    CHECK(msg.find("'g'") != std::string::npos);
  }
  SUBCASE("trailing bytes") {
    CHECK(error_of(container(R"({"t":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})", std::string(8, 0)))
              .find("payload size") != std::string::npos);
  }
  SUBCASE("non-finite value reports tensor and offset") {
    const std::string header = R"({"n":{"dtype":"F32","shape":[2],"data_offsets":[0,8]}})";
    const auto msg = error_of(container(header, floats_le({0x3f800000u, 0x7fc00000u})));
    CHECK(msg.find("'n'") != std::string::npos);
    CHECK(msg.find("byte offset " + std::to_string(8 + header.size() + 4)) != std::string::npos);
  }
  SUBCASE("infinity") {
    const std::string header = R"({"i":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})";
    CHECK(error_of(container(header, floats_le({0x7f800000u}))).find("non-finite") != std::string::npos);
  }
  SUBCASE("non-string metadata") {
    CHECK(error_of(container(R"({"__metadata__":{"a":1}})", "")).find("metadata") != std::string::npos);
  }
}

TEST_CASE("tensor_stats") {
  const auto zeros = tensor_stats(Tensor("z", {10}));
  CHECK(zeros.count == 10);
  CHECK(zeros.zeros == 10);
  CHECK(zeros.sparsity == 1.0);

  const auto half = tensor_stats(Tensor("h", {4}, Eigen::Vector4f(1.0f, 0.0f, -2.0f, -0.0f)));
  CHECK(half.count == 4);
  CHECK(half.zeros == 2);
  CHECK(half.sparsity == 0.5);

  std::mt19937_64 rng(99);
  const auto dense = tensor_stats(testutil::random_tensor(rng, "d", {64, 64}));
  CHECK(dense.zeros == 0);
  CHECK(dense.sparsity == 0.0);
}

TEST_CASE("property: random checkpoints round trip") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(0, 32);
  for (int iter = 0; iter < 40; ++iter) {
    Checkpoint c;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) c.add(testutil::random_tensor(rng, "t" + std::to_string(i), testutil::random_shape(rng, 4096)));
    if (iter % 3 == 0) c.metadata["iter"] = std::to_string(iter);
    const auto bytes = encode_checkpoint(c);
    const auto back = decode_checkpoint(bytes);
    CHECK(back == c);
    CHECK(encode_checkpoint(back) == bytes);
    for (const auto& t : back.tensors()) {
      const auto s = tensor_stats(t);
      CHECK(s.zeros <= s.count);
      CHECK(s.sparsity >= 0.0);
      CHECK(s.sparsity <= 1.0);
    }
  }
}

TEST_CASE("checkpoint rejects duplicate names and unknown lookups") {
  Checkpoint c;
  c.add(Tensor("a", {1}));
  CHECK_THROWS_AS(c.add(Tensor("a", {2})), ValidationError);
  CHECK_THROWS_AS(c.at("missing"), ValidationError);
  CHECK(c.total_params() == 1);
}
