// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "rawshift/tensor_io.hpp"

namespace rawshift {

namespace fs = std::filesystem;
using nlohmann::json;

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  const json& items = doc.is_object() && doc.contains("entries") ? doc["entries"] : doc;
  if (!items.is_array()) throw FormatError("manifest must hold an array of entries");

  const fs::path base = path.parent_path();
  Manifest m;
  for (const auto& item : items) {
    try {
      ManifestEntry e;
      e.camera = CameraLabel(item.at("camera_label").get<int>());
      fs::path raw = item.at("raw_path").get<std::string>();
      fs::path rgb = item.at("rgb_path").get<std::string>();
      e.raw_path = raw.is_absolute() ? raw : base / raw;
      e.rgb_path = rgb.is_absolute() ? rgb : base / rgb;
      e.black_level = item.at("black_level").get<double>();
      e.white_level = item.at("white_level").get<double>();
      if (e.camera.is_none()) throw FormatError("negative camera_label");
      if (!(e.white_level > e.black_level)) throw FormatError("white_level must exceed black_level");
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError("bad manifest entry in " + path.string() + ": " + ex.what());
    }
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) {
    std::error_code ec;
    auto r = fs::relative(fs::absolute(p), base, ec);
    return (ec || r.empty()) ? p.generic_string() : r.generic_string();
  };
  json items = json::array();
  for (const auto& e : manifest.entries) {
    items.push_back({{"camera_label", e.camera.value},
                     {"raw_path", rel(e.raw_path)},
                     {"rgb_path", rel(e.rgb_path)},
                     {"black_level", e.black_level},
                     {"white_level", e.white_level}});
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << json{{"entries", items}}.dump(2) << "\n";
}

LoadedPair load_pair(const ManifestEntry& entry) {
  const auto mosaic = read_tensor<float>(entry.raw_path);
  const auto rgb01 = read_tensor<float>(entry.rgb_path);
  if (rgb01.rank() != 3 || mosaic.rank() != 3 || rgb01.height() != mosaic.height() ||
      rgb01.width() != mosaic.width())
    throw FormatError("raw/rgb pair shapes do not align: " + entry.raw_path.string());
  Tensor<float> clamped = rgb01;
  for (float& v : clamped.values()) v = std::clamp(v, 0.0f, 1.0f);
  return LoadedPair{normalize_raw(pack_bayer(mosaic), entry.black_level, entry.white_level, entry.camera),
                    RgbImage::from_unit(clamped)};
}

}  // namespace rawshift
