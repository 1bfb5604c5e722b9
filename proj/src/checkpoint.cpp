// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rawshift/tensor_io.hpp"
#include "rawshift/types.hpp"

namespace rawshift {
namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw FormatError("checkpoint: missing " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint: malformed " + p.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  if (ckpt.schedule.steps() != ckpt.model.arch().timesteps)
    throw std::invalid_argument("checkpoint: schedule T does not match the model's timestep count");
  std::filesystem::create_directories(dir / "adapters");
  const auto params = ckpt.model.params();
  write_tensor(dir / "base.sptr", Tensor<float>({params.size()}, std::vector<float>(params.begin(), params.end())));

  json index = json::array();
  ckpt.bank.for_each([&](int layer, const LoraAdapter<float>& a) {
    const std::string stem = "l" + std::to_string(layer) + "_c" + std::to_string(a.camera.value);
    const std::string fa = "adapters/" + stem + "_A.sptr", fb = "adapters/" + stem + "_B.sptr";
    write_tensor(dir / fa, a.A);
    write_tensor(dir / fb, a.B);
    index.push_back({{"layer", layer}, {"camera", a.camera.value}, {"rank", a.rank}, {"d", a.d}, {"k", a.k},
                     {"A", fa}, {"B", fb}});
  });
  write_json(dir / "adapters.json", index);

  json cams = json::array();
  for (CameraLabel c : ckpt.bank.cameras()) cams.push_back(c.value);
  write_json(dir / "meta.json", {{"version", kCheckpointVersion},
                                 {"schedule", ckpt.schedule.to_json()},
                                 {"architecture", ckpt.model.arch().to_json()},
                                 {"num_params", params.size()},
                                 {"step", ckpt.step},
                                 {"seed", ckpt.seed},
                                 {"lora_rank", ckpt.lora_rank},
                                 {"cameras", cams}});
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "meta.json");
  try {
    if (meta.at("version").get<int>() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
    Checkpoint ck{TinyDenoiser<float>(DenoiserArch::from_json(meta.at("architecture"))), {},
                  Schedule::from_json(meta.at("schedule")), meta.at("step").get<std::size_t>(),
                  meta.at("seed").get<std::uint64_t>(), meta.at("lora_rank").get<std::size_t>()};
    if (ck.schedule.steps() != ck.model.arch().timesteps)
      throw FormatError("checkpoint: schedule T does not match the model's timestep count");

    const Tensor<float> base = read_tensor<float>(dir / "base.sptr");
    if (base.size() != ck.model.num_params()) throw FormatError("checkpoint: base parameter count mismatch");
    std::copy(base.values().begin(), base.values().end(), ck.model.params().begin());
    ck.model.register_adapter_layers(ck.bank);

    for (const json& e : read_json(dir / "adapters.json")) {
      LoraAdapter<float> a;
      a.d = e.at("d").get<std::size_t>();
      a.k = e.at("k").get<std::size_t>();
      a.rank = e.at("rank").get<std::size_t>();
      a.camera = CameraLabel{e.at("camera").get<int>()};
      a.A = read_tensor<float>(dir / e.at("A").get<std::string>());
      a.B = read_tensor<float>(dir / e.at("B").get<std::string>());
      ck.bank.insert(e.at("layer").get<int>(), std::move(a));
    }
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: inconsistent contents: ") + e.what());
  }
}

}  // namespace rawshift
