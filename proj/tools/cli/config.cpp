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
#include "config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>

#include "sasv/rng.hpp"

namespace sasvkit::cli {

using nlohmann::json;
using sasv::Stage;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& rule) {
  throw ConfigError(key + ": " + rule);
}

// Walks one JSON object, dispatching each key to a handler and rejecting
// keys without one.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  template <class T>
  void field(const std::string& name, T& target) {
    handlers_[name] = [this, name, &target](const json& v) { read(key(name), v, target); };
  }

  void section(const std::string& name, std::function<void(const json&, const std::string&)> fn) {
    handlers_[name] = [this, name, fn = std::move(fn)](const json& v) { fn(v, key(name)); };
  }

  void apply() {
    for (const auto& [name, value] : node_.items()) {
      auto it = handlers_.find(name);
      if (it == handlers_.end()) fail(key(name), "unknown key");
      it->second(value);
    }
  }

 private:
  static void read(const std::string& k, const json& v, double& out) {
    if (!v.is_number()) fail(k, "expected a number");
    out = v.get<double>();
  }
  static void read(const std::string& k, const json& v, int& out) {
    if (!v.is_number_integer()) fail(k, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) fail(k, "integer out of range");
    out = static_cast<int>(x);
  }
  template <class U>
    requires std::is_unsigned_v<U>
  static void read(const std::string& k, const json& v, U& out) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(k, "expected a non-negative integer");
    }
    out = v.get<U>();
  }
  static void read(const std::string& k, const json& v, sasv::LossMode& out) {
    if (!v.is_string()) fail(k, "expected a loss mode string");
    const auto m = sasv::parse_loss_mode(v.get<std::string>());
    if (!m) fail(k, "unknown loss mode '" + v.get<std::string>() + "'");
    out = *m;
  }
  static void read(const std::string& k, const json& v, sasv::LrShape& out) {
    if (!v.is_string()) fail(k, "expected a schedule shape string");
    const auto s = sasv::parse_lr_shape(v.get<std::string>());
    if (!s) fail(k, "unknown schedule shape '" + v.get<std::string>() + "'");
    out = *s;
  }

  const json& node_;
  std::string path_;
  std::map<std::string, std::function<void(const json&)>> handlers_;
};

void read_lr(const json& node, const std::string& path, sasv::LrSchedule& lr) {
  Section s(node, path);
  s.field("max_lr", lr.max_lr);
  s.field("cycle_epochs", lr.cycle_epochs);
  s.field("decay", lr.decay);
  s.field("decay_every_cycles", lr.decay_every_cycles);
  s.field("shape", lr.shape);
  s.apply();
}

void read_stage(const json& node, const std::string& path, sasv::StagePlan& plan) {
  Section s(node, path);
  if (plan.stage != Stage::s1) s.field("mode", plan.mode);
  s.field("num_speakers", plan.batch.num_speakers);
  if (plan.stage == Stage::s3) s.field("num_spoof_pairs", plan.batch.num_spoof_pairs);
  s.field("epochs", plan.epochs);
  s.section("lr", [&plan](const json& v, const std::string& k) { read_lr(v, k, plan.lr); });
  s.apply();
}

void validate(const RunConfig& cfg) {
  try {
    sasv::validate_world_config(cfg.world);
  } catch (const sasv::ContractError& e) {
    throw ConfigError(e.what());
  }
  const auto& t = cfg.trainer;
  if (t.hidden_dim < 1) fail("model.hidden_dim", "must be >= 1");
  if (t.embedding_dim < 2) fail("model.embedding_dim", "must be >= 2");
  if (!(t.aam.scale > 0.0)) fail("loss.aam_scale", "must be > 0");
  if (!(t.aam.margin >= 0.0 && t.aam.margin < 1.5707963267948966)) {
    fail("loss.aam_margin", "must be in [0, pi/2)");
  }
  if (!(t.cosine_init.alpha >= sasv::kAlphaMin)) fail("loss.alpha_init", "must be positive");
  if (!std::isfinite(t.cosine_init.beta)) fail("loss.beta_init", "must be finite");
  const auto& o = t.optimizer;
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) fail("optimizer.beta1", "must be in [0, 1)");
  if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) fail("optimizer.beta2", "must be in [0, 1)");
  if (!(o.eps > 0.0)) fail("optimizer.eps", "must be > 0");
  if (!(o.weight_decay >= 0.0)) fail("optimizer.weight_decay", "must be >= 0");

  for (const auto& plan : cfg.stages) {
    const std::string k = "stages." + std::string(sasv::to_string(plan.stage));
    if (plan.epochs < 0) fail(k + ".epochs", "must be >= 0");
    try {
      sasv::validate_batch_spec(plan.batch);
    } catch (const sasv::ContractError& e) {
      fail(k, e.what());
    }
    if (!(plan.lr.max_lr > 0.0)) fail(k + ".lr.max_lr", "must be > 0");
    if (plan.lr.cycle_epochs < 1) fail(k + ".lr.cycle_epochs", "must be >= 1");
    if (!(plan.lr.decay > 0.0 && plan.lr.decay <= 1.0)) fail(k + ".lr.decay", "must be in (0, 1]");
    if (plan.lr.decay_every_cycles < 1) fail(k + ".lr.decay_every_cycles", "must be >= 1");
  }
}

void propagate_seed(RunConfig& cfg) {
  cfg.world.seed = cfg.seed;
  cfg.trainer.seed = cfg.seed;
}

nlohmann::ordered_json lr_json(const sasv::LrSchedule& lr) {
  return {{"max_lr", lr.max_lr},
          {"cycle_epochs", lr.cycle_epochs},
          {"decay", lr.decay},
          {"decay_every_cycles", lr.decay_every_cycles},
          {"shape", std::string(sasv::to_string(lr.shape))}};
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  sasv::LrSchedule lr;
  lr.max_lr = 1e-2;
  lr.cycle_epochs = 50;
  lr.decay = 0.5;
  lr.decay_every_cycles = 1;

  auto& s1 = cfg.stages[0];
  s1.stage = s1.batch.stage = Stage::s1;
  s1.batch.num_speakers = 16;
  s1.lr = lr;
  s1.epochs = 100;

  auto& s2 = cfg.stages[1];
  s2.stage = s2.batch.stage = Stage::s2;
  s2.mode = sasv::LossMode::cont_id1;
  s2.batch.num_speakers = 8;
  s2.lr = lr;
  s2.epochs = 100;

  auto& s3 = cfg.stages[2];
  s3.stage = s3.batch.stage = Stage::s3;
  s3.mode = sasv::LossMode::cont_id1;
  s3.batch.num_speakers = 8;
  s3.batch.num_spoof_pairs = 8;
  s3.lr = lr;
  s3.epochs = 100;

  propagate_seed(cfg);
  return cfg;
}

RunConfig parse_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  RunConfig cfg = default_config();
  Section root(doc, "");
  root.field("seed", cfg.seed);
  root.section("world", [&cfg](const json& v, const std::string& k) {
    Section s(v, k);
    auto& w = cfg.world;
    s.field("num_speakers", w.num_speakers);
    s.field("utts_per_speaker", w.utts_per_speaker);
    s.field("feature_dim", w.feature_dim);
    s.field("artefact_dims", w.artefact_dims);
    s.field("speaker_spread", w.speaker_spread);
    s.field("utterance_noise", w.utterance_noise);
    s.field("vocoder_shift_norm", w.vocoder_shift_norm);
    s.field("attack_count", w.attack_count);
    s.field("eval_attack_count", w.eval_attack_count);
    s.field("attack_vocoder_share", w.attack_vocoder_share);
    s.field("indomain_speakers", w.indomain_speakers);
    s.field("indomain_utts_per_speaker", w.indomain_utts_per_speaker);
    s.field("indomain_spoofs_per_utt", w.indomain_spoofs_per_utt);
    s.field("eval_speakers", w.eval_speakers);
    s.field("eval_enroll_utts", w.eval_enroll_utts);
    s.field("eval_test_utts", w.eval_test_utts);
    s.field("eval_spoof_utts", w.eval_spoof_utts);
    s.field("eval_nontarget_per_speaker", w.eval_nontarget_per_speaker);
    s.apply();
  });
  root.section("model", [&cfg](const json& v, const std::string& k) {
    Section s(v, k);
    s.field("hidden_dim", cfg.trainer.hidden_dim);
    s.field("embedding_dim", cfg.trainer.embedding_dim);
    s.apply();
  });
  root.section("loss", [&cfg](const json& v, const std::string& k) {
    Section s(v, k);
    s.field("aam_scale", cfg.trainer.aam.scale);
    s.field("aam_margin", cfg.trainer.aam.margin);
    s.field("alpha_init", cfg.trainer.cosine_init.alpha);
    s.field("beta_init", cfg.trainer.cosine_init.beta);
    s.apply();
  });
  root.section("optimizer", [&cfg](const json& v, const std::string& k) {
    Section s(v, k);
    auto& o = cfg.trainer.optimizer;
    s.field("beta1", o.beta1);
    s.field("beta2", o.beta2);
    s.field("eps", o.eps);
    s.field("weight_decay", o.weight_decay);
    s.apply();
  });
  root.section("stages", [&cfg](const json& v, const std::string& k) {
    Section s(v, k);
    for (auto& plan : cfg.stages) {
      s.section(std::string(sasv::to_string(plan.stage)),
                [&plan](const json& node, const std::string& path) {
                  read_stage(node, path, plan);
                });
    }
    s.apply();
  });
  root.apply();

  if (seed_override) cfg.seed = *seed_override;
  propagate_seed(cfg);
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(doc, seed_override);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  const auto& w = cfg.world;
  const auto& t = cfg.trainer;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (const auto& plan : cfg.stages) {
    nlohmann::ordered_json s;
    if (plan.stage != Stage::s1) s["mode"] = std::string(sasv::to_string(plan.mode));
    s["num_speakers"] = plan.batch.num_speakers;
    if (plan.stage == Stage::s3) s["num_spoof_pairs"] = plan.batch.num_spoof_pairs;
    s["epochs"] = plan.epochs;
    s["lr"] = lr_json(plan.lr);
    stages[std::string(sasv::to_string(plan.stage))] = std::move(s);
  }
  return {
      {"seed", cfg.seed},
      {"world",
       {{"num_speakers", w.num_speakers},
        {"utts_per_speaker", w.utts_per_speaker},
        {"feature_dim", w.feature_dim},
        {"artefact_dims", w.artefact_dims},
        {"speaker_spread", w.speaker_spread},
        {"utterance_noise", w.utterance_noise},
        {"vocoder_shift_norm", w.vocoder_shift_norm},
        {"attack_count", w.attack_count},
        {"eval_attack_count", w.eval_attack_count},
        {"attack_vocoder_share", w.attack_vocoder_share},
        {"indomain_speakers", w.indomain_speakers},
        {"indomain_utts_per_speaker", w.indomain_utts_per_speaker},
        {"indomain_spoofs_per_utt", w.indomain_spoofs_per_utt},
        {"eval_speakers", w.eval_speakers},
        {"eval_enroll_utts", w.eval_enroll_utts},
        {"eval_test_utts", w.eval_test_utts},
        {"eval_spoof_utts", w.eval_spoof_utts},
        {"eval_nontarget_per_speaker", w.eval_nontarget_per_speaker}}},
      {"model", {{"hidden_dim", t.hidden_dim}, {"embedding_dim", t.embedding_dim}}},
      {"loss",
       {{"aam_scale", t.aam.scale},
        {"aam_margin", t.aam.margin},
        {"alpha_init", t.cosine_init.alpha},
        {"beta_init", t.cosine_init.beta}}},
      {"optimizer",
       {{"beta1", t.optimizer.beta1},
        {"beta2", t.optimizer.beta2},
        {"eps", t.optimizer.eps},
        {"weight_decay", t.optimizer.weight_decay}}},
      {"stages", std::move(stages)},
  };
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("SASVKIT_SEED");
  if (raw == nullptr) return std::nullopt;
  const std::string_view s(raw);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("SASVKIT_SEED: expected an unsigned 64-bit integer, got '" +
                      std::string(s) + "'");
  }
  return v;
}

sasv::StagePlan plan_for(const RunConfig& cfg, Stage stage) {
  sasv::StagePlan plan = cfg.stage(stage);
  plan.batch.seed = sasv::Rng(cfg.seed).split(0x62617463 + static_cast<std::uint64_t>(stage)).next_u64();
  return plan;
}

}  // namespace sasvkit::cli
