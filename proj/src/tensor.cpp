#include "prunekit/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prunekit/error.hpp"

namespace prunekit {
namespace {

using OrderedJson = nlohmann::ordered_json;

constexpr std::size_t kHeaderPrefix = 8;

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64_le(std::string_view bytes) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[i]);
  return v;
}

float load_f32_le(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  return std::bit_cast<float>(to_le(bits));
}

std::string where(std::string_view tensor, std::uint64_t offset) {
  std::ostringstream os;
  os << "tensor '" << tensor << "' at byte offset " << offset;
  return os.str();
}

struct Entry {
  std::string name;
  Shape shape;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

Entry parse_entry(const std::string& name, const OrderedJson& info, std::uint64_t header_end) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("malformed header entry for " + where(name, kHeaderPrefix) + ": " + what);
  };
  if (!info.is_object()) fail("entry is not an object");
  if (!info.contains("dtype") || !info["dtype"].is_string()) fail("missing dtype");
  if (!info.contains("shape") || !info["shape"].is_array()) fail("missing shape");
  if (!info.contains("data_offsets") || !info["data_offsets"].is_array() ||
      info["data_offsets"].size() != 2) {
    fail("missing data_offsets");
  }

  Entry e;
  e.name = name;
  for (const auto& off : info["data_offsets"]) {
    if (!off.is_number_unsigned()) fail("data_offsets must be non-negative integers");
  }
  e.begin = info["data_offsets"][0].get<std::uint64_t>();
  e.end = info["data_offsets"][1].get<std::uint64_t>();

  const auto dtype = info["dtype"].get<std::string>();
  if (dtype != "F32") {
    throw ValidationError("unsupported dtype '" + dtype + "' for " + where(name, header_end + e.begin));
  }
  if (info["shape"].empty()) fail("shape must have at least one dimension");
  for (const auto& d : info["shape"]) {
    if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0) fail("shape dimensions must be >= 1");
    e.shape.push_back(d.get<std::int64_t>());
  }
  if (e.end < e.begin) fail("data_offsets end precedes begin");
  const auto expected = static_cast<std::uint64_t>(numel(e.shape)) * 4;
  if (e.end - e.begin != expected) {
    std::ostringstream os;
    os << "payload length mismatch for " << where(name, header_end + e.begin) << ": shape "
       << shape_to_string(e.shape) << " needs " << expected << " bytes, data_offsets span "
       << (e.end - e.begin);
    throw ValidationError(os.str());
  }
  return e;
}

}  // namespace

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::string name_, Shape shape_)
    : name(std::move(name_)), shape(std::move(shape_)), data(Storage::Zero(numel(shape))) {}

Tensor::Tensor(std::string name_, Shape shape_, Storage data_)
    : name(std::move(name_)), shape(std::move(shape_)), data(std::move(data_)) {}

void Tensor::validate() const {
  if (shape.empty()) throw ValidationError("tensor '" + name + "' has an empty shape");
  for (auto d : shape) {
    if (d < 1) throw ValidationError("tensor '" + name + "' has a dimension < 1");
  }
  if (numel(shape) != size()) {
    throw ValidationError("tensor '" + name + "' shape " + shape_to_string(shape) + " does not match " +
                          std::to_string(size()) + " values");
  }
  if (!data.allFinite()) throw ValidationError("tensor '" + name + "' contains non-finite values");
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.name == b.name && a.shape == b.shape && a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), sizeof(float) * a.data.size()) == 0;
}

TensorStats tensor_stats(const Tensor& t) {
  TensorStats s;
  s.count = t.size();
  s.zeros = (t.data.array() == 0.0f).count();
  s.sparsity = s.count == 0 ? 0.0 : static_cast<double>(s.zeros) / static_cast<double>(s.count);
  return s;
}

void Checkpoint::add(Tensor t) {
  if (contains(t.name)) throw ValidationError("duplicate tensor name '" + t.name + "'");
  tensors_.push_back(std::move(t));
}

const Tensor* Checkpoint::find(std::string_view name) const {
  auto it = std::find_if(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
  return it == tensors_.end() ? nullptr : &*it;
}

bool Checkpoint::contains(std::string_view name) const { return find(name) != nullptr; }

const Tensor& Checkpoint::at(std::string_view name) const {
  const auto* t = find(name);
  if (!t) throw ValidationError("missing tensor '" + std::string(name) + "'");
  return *t;
}

Tensor& Checkpoint::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

std::int64_t Checkpoint::total_params() const {
  std::int64_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.metadata == b.metadata && a.tensors_ == b.tensors_;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  OrderedJson header = OrderedJson::object();
  if (!ckpt.metadata.empty()) {
    OrderedJson meta = OrderedJson::object();
    for (const auto& [k, v] : ckpt.metadata) meta[k] = v;
    header["__metadata__"] = std::move(meta);
  }
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors()) {
    t.validate();
    const std::uint64_t bytes = static_cast<std::uint64_t>(t.size()) * 4;
    header[t.name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  const std::string json = header.dump();

  std::string out;
  out.reserve(kHeaderPrefix + json.size() + offset);
  put_u64_le(out, json.size());
  out += json;
  for (const auto& t : ckpt.tensors()) {
    for (float v : t.data) {
      const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(v));
      char buf[4];
      std::memcpy(buf, &bits, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderPrefix) throw ValidationError("file too short for header length prefix");
  const std::uint64_t header_len = get_u64_le(bytes);
  if (header_len > bytes.size() - kHeaderPrefix) {
    throw ValidationError("header length " + std::to_string(header_len) + " exceeds file size " +
                          std::to_string(bytes.size()));
  }
  const std::uint64_t header_end = kHeaderPrefix + header_len;

  OrderedJson header;
  try {
    header = OrderedJson::parse(bytes.substr(kHeaderPrefix, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed header JSON: ") + e.what());
  }
  if (!header.is_object()) throw ValidationError("malformed header: top level is not an object");

  Checkpoint ckpt;
  std::vector<Entry> entries;
  for (const auto& [key, value] : header.items()) {
    if (key == "__metadata__") {
      if (!value.is_object()) throw ValidationError("malformed header: __metadata__ is not an object");
      for (const auto& [mk, mv] : value.items()) {
        if (!mv.is_string()) throw ValidationError("malformed header: metadata value for '" + mk + "' is not a string");
        ckpt.metadata[mk] = mv.get<std::string>();
      }
      continue;
    }
    entries.push_back(parse_entry(key, value, header_end));
  }

  const std::uint64_t payload_size = bytes.size() - header_end;
  std::vector<const Entry*> by_offset;
  for (const auto& e : entries) by_offset.push_back(&e);
  std::stable_sort(by_offset.begin(), by_offset.end(),
                   [](const Entry* a, const Entry* b) { return a->begin < b->begin; });
  std::uint64_t cursor = 0;
  for (const Entry* e : by_offset) {
    if (e->begin < cursor) throw ValidationError("overlapping data_offsets for " + where(e->name, header_end + e->begin));
    if (e->begin > cursor) throw ValidationError("gap in payload before " + where(e->name, header_end + e->begin));
    cursor = e->end;
  }
  for (const auto& e : entries) {
    if (e.end > payload_size) {
      throw ValidationError("payload truncated: " + where(e.name, header_end + e.begin) + " declares " +
                            std::to_string(e.end - e.begin) + " bytes but only " +
                            std::to_string(payload_size - std::min(payload_size, e.begin)) + " remain");
    }
  }
  if (cursor != payload_size) {
    throw ValidationError("payload size " + std::to_string(payload_size) + " does not match declared " +
                          std::to_string(cursor) + " bytes");
  }

  for (const auto& e : entries) {
    Tensor t(e.name, e.shape);
    const char* base = bytes.data() + header_end + e.begin;
    for (Eigen::Index i = 0; i < t.data.size(); ++i) {
      const float v = load_f32_le(base + 4 * i);
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite value in " + where(e.name, header_end + e.begin + 4 * i));
      }
      t.data[i] = v;
    }
    ckpt.add(std::move(t));
  }
  return ckpt;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

}  // namespace prunekit
