// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "rawshift/image.hpp"
#include "rawshift/manifest.hpp"
#include "rawshift/tensor_io.hpp"
#include "rawshift/types.hpp"
#include "test_util.hpp"

using namespace rawshift;

namespace {

// Hand-rolled SPTR encoder used as the format oracle.
std::vector<unsigned char> encode_sptr_f32(const Shape& shape, const std::vector<float>& data) {
  std::vector<unsigned char> out{'S', 'P', 'T', 'R', 1, 0, 0, 0, 1, static_cast<unsigned char>(shape.size())};
  for (std::uint64_t d : shape)
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(d >> (8 * b)));
  for (float f : data) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(u >> (8 * b)));
  }
  return out;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("normalize_raw maps black, white and midpoint") {
  Tensor<float> s({4, 1, 3});
  for (std::size_t c = 0; c < 4; ++c) {
    s.at(c, 0, 0) = 64.0f;
    s.at(c, 0, 1) = 1023.0f;
    s.at(c, 0, 2) = (64.0f + 1023.0f) / 2.0f;
  }
  const RawImage r = normalize_raw(s, 64.0, 1023.0, CameraLabel{2});
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(r.data().at(c, 0, 0) == -1.0f);
    CHECK(r.data().at(c, 0, 1) == 1.0f);
    CHECK(r.data().at(c, 0, 2) == doctest::Approx(0.0).epsilon(1e-7));
  }
  CHECK(r.camera() == CameraLabel{2});
}

TEST_CASE("normalize_raw clamps, is monotone, and rejects bad input") {
  Tensor<float> s({4, 1, 4});
  const float vals[4] = {-5.0f, 10.0f, 20.0f, 500.0f};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t x = 0; x < 4; ++x) s.at(c, 0, x) = vals[x];
  const RawImage r = normalize_raw(s, 0.0, 100.0);
  CHECK(r.data().at(0, 0, 0) == -1.0f);
  CHECK(r.data().at(0, 0, 3) == 1.0f);
  CHECK(r.data().at(0, 0, 1) < r.data().at(0, 0, 2));
  CHECK_THROWS(normalize_raw(s, 100.0, 100.0));
  CHECK_THROWS(normalize_raw(s, 100.0, 50.0));
  s.at(1, 0, 1) = std::nanf("");
  CHECK_THROWS(normalize_raw(s, 0.0, 100.0));
}

TEST_CASE("denormalize inverts normalize inside the levels") {
  auto s = testutil::uniform_tensor<float>({4, 4, 4}, 3, 64.0, 1023.0);
  const RawImage r = normalize_raw(s, 64.0, 1023.0);
  const Tensor<float> back = denormalize_raw(r);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(back[i] == doctest::Approx(s[i]).epsilon(1e-6));
}

TEST_CASE("pack_bayer on a 2x2 mosaic routes each site to its channel") {
  Tensor<float> m({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const Tensor<float> p = pack_bayer(m);
  REQUIRE(p.shape() == Shape{4, 1, 1});
  CHECK(p[0] == 1);
  CHECK(p[1] == 2);
  CHECK(p[2] == 3);
  CHECK(p[3] == 4);
}

TEST_CASE("pack/unpack round trip and constant mosaics") {
  auto m = testutil::uniform_tensor<float>({1, 8, 8}, 11);
  const Tensor<float> p = pack_bayer(m);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) CHECK(p.at(c, y, x) == m.at(0, 2 * y + c / 2, 2 * x + c % 2));
  CHECK(unpack_bayer(p) == m);
  Tensor<float> k({1, 6, 4}, 0.25f);
  const Tensor<float> pk = pack_bayer(k);
  for (float v : pk.values()) CHECK(v == 0.25f);
  CHECK_THROWS(pack_bayer(Tensor<float>({1, 3, 4})));
  CHECK_THROWS(pack_bayer(Tensor<float>({1, 4, 5})));
}

TEST_CASE("align_rgb samples each colour at its Bayer site") {
  Tensor<float> gray({3, 4, 4}, 0.3f);
  const Tensor<float> ag = align_rgb(gray);
  for (float v : ag.values()) CHECK(v == 0.3f);

  Tensor<float> red({3, 4, 4}, -1.0f);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) red.at(0, y, x) = 1.0f;
  const Tensor<float> a = align_rgb(red);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) {
      CHECK(a.at(0, y, x) == 1.0f);
      CHECK(a.at(1, y, x) == -1.0f);
      CHECK(a.at(2, y, x) == -1.0f);
      CHECK(a.at(3, y, x) == -1.0f);
    }

  auto rgb = testutil::uniform_tensor<float>({3, 6, 8}, 5);
  const Tensor<float> b = align_rgb(rgb);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      CHECK(b.at(0, y, x) == rgb.at(0, 2 * y, 2 * x));
      CHECK(b.at(1, y, x) == rgb.at(1, 2 * y, 2 * x + 1));
      CHECK(b.at(2, y, x) == rgb.at(1, 2 * y + 1, 2 * x));
      CHECK(b.at(3, y, x) == rgb.at(2, 2 * y + 1, 2 * x + 1));
    }
  CHECK_THROWS(align_rgb(Tensor<float>({3, 5, 4})));
}

TEST_CASE("residual is packed rgb minus raw") {
  auto rgb = testutil::uniform_tensor<float>({3, 4, 4}, 7);
  const PackedRgb y0 = align_rgb(RgbImage(rgb));
  const RawImage x0(testutil::uniform_tensor<float>({4, 2, 2}, 8), 0.0, 1.0);
  const Residual e = residual(y0, x0);
  for (std::size_t i = 0; i < e.data.size(); ++i) CHECK(e.data[i] == y0.data[i] - x0.data()[i]);
}

TEST_CASE("tensor files match the byte layout exactly") {
  const auto dir = testutil::scratch_dir("sptr");
  auto t = testutil::uniform_tensor<float>({4, 16, 16}, 21);
  write_tensor(dir / "a.sptr", t);
  CHECK(testutil::file_bytes(dir / "a.sptr") == encode_sptr_f32(t.shape(), {t.values().begin(), t.values().end()}));
  CHECK(read_tensor<float>(dir / "a.sptr") == t);

  // A file produced by the oracle encoder reads back bit-identically.
  Tensor<float> small({2, 3}, std::vector<float>{1.5f, -0.0f, 3.25f, 1e-30f, -7.0f, 0.1f});
  write_bytes(dir / "b.sptr", encode_sptr_f32(small.shape(), {small.values().begin(), small.values().end()}));
  const auto back = read_tensor<float>(dir / "b.sptr");
  CHECK(std::memcmp(back.data(), small.data(), small.size() * 4) == 0);

  auto d = testutil::uniform_tensor<double>({3, 5}, 4);
  write_tensor(dir / "c.sptr", d);
  CHECK(read_tensor<double>(dir / "c.sptr") == d);
  CHECK(read_tensor_header(dir / "c.sptr").dtype == DType::f64);
  CHECK(testutil::file_bytes(dir / "c.sptr").size() == 4 + 4 + 1 + 1 + 2 * 8 + 15 * 8);
  std::filesystem::remove_all(dir);
}

TEST_CASE("tensor file error paths") {
  const auto dir = testutil::scratch_dir("sptr_err");
  Tensor<float> t({2, 2}, 1.0f);
  auto good = encode_sptr_f32(t.shape(), {1, 1, 1, 1});

  auto bad_magic = good;
  bad_magic[0] = 'X';
  write_bytes(dir / "magic.sptr", bad_magic);
  CHECK_THROWS_AS(read_tensor<float>(dir / "magic.sptr"), FormatError);

  auto bad_version = good;
  bad_version[4] = 2;
  write_bytes(dir / "version.sptr", bad_version);
  CHECK_THROWS_AS(read_tensor<float>(dir / "version.sptr"), FormatError);

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  write_bytes(dir / "trunc.sptr", truncated);
  CHECK_THROWS_AS(read_tensor<float>(dir / "trunc.sptr"), FormatError);

  auto bad_ndim = good;
  bad_ndim[9] = 5;
  write_bytes(dir / "ndim.sptr", bad_ndim);
  CHECK_THROWS_AS(read_tensor<float>(dir / "ndim.sptr"), FormatError);

  auto zero_dim = encode_sptr_f32({0, 2}, {});
  write_bytes(dir / "zero.sptr", zero_dim);
  CHECK_THROWS_AS(read_tensor<float>(dir / "zero.sptr"), FormatError);

  auto overflow = encode_sptr_f32({1ull << 40, 1ull << 40}, {});
  write_bytes(dir / "overflow.sptr", overflow);
  CHECK_THROWS_AS(read_tensor<float>(dir / "overflow.sptr"), FormatError);

  write_tensor(dir / "f32.sptr", t);
  CHECK(read_tensor<double>(dir / "f32.sptr") == t.cast<double>());
  CHECK_THROWS(read_tensor<float>(dir / "missing.sptr"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip and validation") {
  const auto dir = testutil::scratch_dir("manifest");
  Manifest m;
  m.entries.push_back({CameraLabel{0}, dir / "a_raw.sptr", dir / "a_rgb.sptr", 64.0, 1023.0});
  m.entries.push_back({CameraLabel{3}, dir / "b_raw.sptr", dir / "b_rgb.sptr", 0.0, 1.0});
  write_manifest(dir / "m.json", m);
  const auto doc = nlohmann::json::parse(std::ifstream(dir / "m.json"));
  REQUIRE(doc.at("entries").size() == 2);
  const auto& e0 = doc["entries"][0];
  CHECK(e0.at("camera_label") == 0);
  CHECK(e0.at("raw_path") == "a_raw.sptr");
  CHECK(e0.at("rgb_path") == "a_rgb.sptr");
  CHECK(e0.at("black_level") == 64.0);
  CHECK(e0.at("white_level") == 1023.0);
  const Manifest back = read_manifest(dir / "m.json");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].camera == CameraLabel{3});
  CHECK(back.entries[1].raw_path == dir / "b_raw.sptr");

  std::ofstream(dir / "bad.json") << R"({"entries":[{"camera_label":0,"raw_path":"x","rgb_path":"y","black_level":5,"white_level":5}]})";
  CHECK_THROWS_AS(read_manifest(dir / "bad.json"), FormatError);
  std::ofstream(dir / "junk.json") << "not json";
  CHECK_THROWS_AS(read_manifest(dir / "junk.json"), FormatError);
  std::ofstream(dir / "plain.json") << R"([{"camera_label":1,"raw_path":"r","rgb_path":"g","black_level":0,"white_level":1}])";
  CHECK(read_manifest(dir / "plain.json").entries.size() == 1);
  std::filesystem::remove_all(dir);
}
