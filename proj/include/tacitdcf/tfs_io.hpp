#pragma once

// TFS1 feature-stack files (little-endian):
//   "TFS1" | u32 version=1 | u32 patch_size | u32 layer_count
//   per layer: u32 layer_id | u32 name_len | name bytes | u32 width |
//              u32 height | u32 channels | u32 stride |
//              width*height*channels f32 in (y, x, k) order
// Records are packed with no padding.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/features.hpp"

namespace tacitdcf {

inline constexpr std::array<char, 4> kTfsMagic = {'T', 'F', 'S', '1'};
inline constexpr std::uint32_t kTfsVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::uint64_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::uint32_t u32(const std::string& field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32("value")); }
  std::string str(std::size_t n, const std::string& field) {
    need(n, field);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::uint64_t n, const std::string& field) const {
    if (remaining() < n) {
      throw FormatError("TFS1: truncated while reading " + field + " at byte offset " + std::to_string(pos_), pos_);
    }
  }

 private:
  std::vector<char> bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace detail

/// Serializes a stack; values are narrowed to f32.
inline std::vector<char> encode_feature_stack(const FeatureStack& stack) {
  stack.validate();
  detail::ByteWriter w;
  w.raw(kTfsMagic.data(), kTfsMagic.size());
  w.u32(kTfsVersion);
  w.u32(static_cast<std::uint32_t>(stack.patch_size));
  w.u32(static_cast<std::uint32_t>(stack.layers.size()));
  for (const auto& layer : stack.layers) {
    const auto& s = layer.spec;
    w.u32(s.layer_id);
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.raw(s.name.data(), s.name.size());
    w.u32(static_cast<std::uint32_t>(s.width));
    w.u32(static_cast<std::uint32_t>(s.height));
    w.u32(static_cast<std::uint32_t>(s.channels));
    w.u32(static_cast<std::uint32_t>(s.stride));
    for (double v : layer.tensor.data()) w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

inline FeatureStack decode_feature_stack(std::vector<char> bytes) {
  detail::ByteReader r(std::move(bytes));
  if (r.remaining() < 4 || !std::equal(kTfsMagic.begin(), kTfsMagic.end(), r.str(4, "magic").begin())) {
    throw FormatError("TFS1: bad magic at byte offset 0", 0);
  }
  const std::uint64_t version_at = r.offset();
  if (const auto v = r.u32("version"); v != kTfsVersion) {
    throw FormatError("TFS1: unsupported version " + std::to_string(v) + " at byte offset " +
                          std::to_string(version_at),
                      version_at);
  }
  FeatureStack stack;
  stack.patch_size = r.u32("patch_size");
  const std::uint32_t count = r.u32("layer_count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t start = r.offset();
    if (r.remaining() == 0) {
      throw FormatError("TFS1: layer " + std::to_string(i) + " of " + std::to_string(count) +
                            " missing at byte offset " + std::to_string(start),
                        start);
    }
    const std::string where = "layer " + std::to_string(i);
    LayerSpec spec;
    spec.layer_id = r.u32(where + " id");
    const std::uint32_t name_len = r.u32(where + " name length");
    spec.name = r.str(name_len, where + " name");
    spec.width = r.u32(where + " width");
    spec.height = r.u32(where + " height");
    spec.channels = r.u32(where + " channels");
    const std::uint64_t stride_at = r.offset();
    spec.stride = r.u32(where + " stride");
    if (spec.stride == 0) throw FormatError("TFS1: " + where + " has zero stride", stride_at);
    const std::uint64_t payload_at = r.offset();
    // 64-bit product of three u32 values cannot overflow before the x4.
    const std::uint64_t values = std::uint64_t{spec.width} * spec.height * spec.channels;
    if (values > std::numeric_limits<std::uint64_t>::max() / 4 || values * 4 > r.remaining()) {
      throw FormatError("TFS1: " + where + " payload (" + std::to_string(values) +
                            " values) exceeds remaining bytes at offset " + std::to_string(payload_at),
                        payload_at);
    }
    std::vector<double> data(values);
    for (auto& v : data) v = r.f32();
    FeatureTensor tensor(spec.width, spec.height, spec.channels, std::move(data));
    if (!stack.layers.empty() && spec.layer_id <= stack.layers.back().spec.layer_id) {
      throw FormatError("TFS1: layer ids not ascending at " + where, start);
    }
    stack.layers.push_back({std::move(spec), std::move(tensor)});
  }
  if (r.remaining() != 0) {
    throw FormatError("TFS1: trailing bytes after last layer at offset " + std::to_string(r.offset()), r.offset());
  }
  return stack;
}

inline void write_feature_stack(const FeatureStack& stack, const std::string& path) {
  const auto bytes = encode_feature_stack(stack);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("TFS1: cannot open " + path + " for writing", std::nullopt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("TFS1: write failed for " + path, std::nullopt);
}

inline FeatureStack load_feature_stack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("TFS1: cannot open " + path, std::nullopt);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_stack(std::move(bytes));
}

}  // namespace tacitdcf
