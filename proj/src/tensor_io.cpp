// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace rawshift {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'T', 'R'};
constexpr std::size_t kMaxRank = 4;
// Refuse payloads beyond 16 GiB; such a header is almost surely corrupt.
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 34;

template <typename U>
void put_le(std::vector<unsigned char>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::f32;
  else return DType::f64;
}

template <typename T>
void append_payload(std::vector<unsigned char>& out, std::span<const T> values) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  out.reserve(out.size() + values.size() * sizeof(T));
  for (T v : values) put_le<Bits>(out, std::bit_cast<Bits>(v));
}

template <typename Stored, typename T>
void decode_payload(const unsigned char* p, std::size_t n, T* dst) {
  using Bits = std::conditional_t<sizeof(Stored) == 4, std::uint32_t, std::uint64_t>;
  for (std::size_t i = 0; i < n; ++i)
    dst[i] = static_cast<T>(std::bit_cast<Stored>(get_le<Bits>(p + i * sizeof(Stored))));
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

struct Parsed {
  TensorHeader header;
  std::size_t payload_offset;
  std::size_t count;
};

Parsed parse_header(const std::vector<unsigned char>& buf, const std::filesystem::path& path) {
  const std::string where = " in " + path.string();
  if (buf.size() < 10) throw FormatError("truncated tensor header" + where);
  if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("bad tensor magic" + where);
  const auto version = get_le<std::uint32_t>(buf.data() + 4);
  if (version != kTensorFileVersion)
    throw FormatError("unsupported tensor version " + std::to_string(version) + where);
  const auto dtype_raw = buf[8];
  if (dtype_raw != 1 && dtype_raw != 2) throw FormatError("unknown tensor dtype" + where);
  const std::size_t ndim = buf[9];
  if (ndim < 1 || ndim > kMaxRank) throw FormatError("tensor rank out of range" + where);
  const std::size_t dims_end = 10 + 8 * ndim;
  if (buf.size() < dims_end) throw FormatError("truncated tensor dims" + where);

  Parsed p{{static_cast<DType>(dtype_raw), {}}, dims_end, 1};
  const std::size_t elem = dtype_raw == 1 ? 4 : 8;
  std::uint64_t bytes = elem;
  for (std::size_t i = 0; i < ndim; ++i) {
    const auto d = get_le<std::uint64_t>(buf.data() + 10 + 8 * i);
    if (d == 0) throw FormatError("zero tensor dimension" + where);
    if (d > kMaxPayloadBytes || bytes > kMaxPayloadBytes / d)
      throw FormatError("tensor dimensions overflow" + where);
    bytes *= d;
    p.header.shape.push_back(static_cast<std::size_t>(d));
  }
  p.count = static_cast<std::size_t>(bytes / elem);
  if (buf.size() - dims_end < bytes) throw FormatError("truncated tensor payload" + where);
  if (buf.size() - dims_end > bytes) throw FormatError("trailing bytes after tensor payload" + where);
  return p;
}

}  // namespace

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  if (t.rank() < 1 || t.rank() > kMaxRank)
    throw std::invalid_argument("tensor rank must be 1..4 to serialize");
  shape_volume(t.shape());  // rejects empty dims

  std::vector<unsigned char> buf(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(buf, kTensorFileVersion);
  buf.push_back(static_cast<unsigned char>(dtype_of<T>()));
  buf.push_back(static_cast<unsigned char>(t.rank()));
  for (std::size_t d : t.shape()) put_le<std::uint64_t>(buf, d);
  append_payload<T>(buf, t.values());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write tensor file " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const auto p = parse_header(buf, path);
  std::vector<T> data(p.count);
  const unsigned char* payload = buf.data() + p.payload_offset;
  if (p.header.dtype == DType::f32) decode_payload<float>(payload, p.count, data.data());
  else decode_payload<double>(payload, p.count, data.data());
  return Tensor<T>(p.header.shape, std::move(data));
}

TensorHeader read_tensor_header(const std::filesystem::path& path) {
  return parse_header(slurp(path), path).header;
}

template void write_tensor<float>(const std::filesystem::path&, const Tensor<float>&);
template void write_tensor<double>(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> read_tensor<float>(const std::filesystem::path&);
template Tensor<double> read_tensor<double>(const std::filesystem::path&);

}  // namespace rawshift
