// Copyright 2026 The sasvkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef SASVKIT_CLI_CONFIG_HPP_
#define SASVKIT_CLI_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sasv/error.hpp"
#include "sasv/sampling.hpp"
#include "sasv/synthworld.hpp"
#include "sasv/trainer.hpp"

namespace sasvkit::cli {

// Schema violation in a run configuration. The message starts with the
// dotted key that failed, e.g. "world.utterance_noise: must be >= 0".
class ConfigError : public sasv::Error {
 public:
  using sasv::Error::Error;
};

struct RunConfig {
  std::uint64_t seed = 20230820;
  sasv::WorldConfig world;
  sasv::TrainerConfig trainer;
  std::array<sasv::StagePlan, 3> stages;  // indexed by Stage

  const sasv::StagePlan& stage(sasv::Stage s) const {
    return stages[static_cast<std::size_t>(s)];
  }
};

// Built-in desk-scale defaults (mirrored by configs/defaults.json).
RunConfig default_config();

// Applies a JSON document on top of the defaults. Every key is optional;
// unknown keys and wrong types are rejected. A seed override replaces the
// document's seed and is propagated to the world and the trainer.
RunConfig parse_config(const nlohmann::json& doc,
                       std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

nlohmann::ordered_json to_json(const RunConfig& cfg);

// Reads SASVKIT_SEED; throws ConfigError if it is set but not an unsigned
// 64-bit integer.
std::optional<std::uint64_t> seed_from_env();

// The stage plan with its batch seed derived from the run seed.
sasv::StagePlan plan_for(const RunConfig& cfg, sasv::Stage stage);

}  // namespace sasvkit::cli

#endif  // SASVKIT_CLI_CONFIG_HPP_
