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
#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "config.hpp"
#include "sasv/error.hpp"
#include "sasv/gradcheck.hpp"
#include "sasv/metrics.hpp"
#include "sasv/protocol.hpp"
#include "sasv/synthworld.hpp"
#include "sasv/trainer.hpp"

namespace sasvkit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class MissingInput : public sasv::Error {
 public:
  using sasv::Error::Error;
};

class BadInput : public sasv::Error {
 public:
  using sasv::Error::Error;
};

class IoError : public sasv::Error {
 public:
  using sasv::Error::Error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("missing input: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

// Parses a file with a protocol reader, prefixing errors with the path.
template <class Fn>
auto parse_file(const fs::path& path, Fn&& parse) {
  std::istringstream in(read_file(path));
  try {
    return parse(in);
  } catch (const sasv::ParseError& e) {
    throw BadInput(path.string() + ": " + e.what());
  } catch (const sasv::ContractError& e) {
    throw BadInput(path.string() + ": " + e.what());
  }
}

sasv::Dataset load_dataset(const fs::path& path) {
  return parse_file(path, [](std::istream& in) { return sasv::protocol::parse_dataset(in); });
}

sasv::Encoder load_model(const fs::path& path) {
  return parse_file(path, [](std::istream& in) { return sasv::read_encoder(in); });
}

RunConfig config_from(const std::string& path) {
  const auto seed = seed_from_env();
  return path.empty() ? parse_config(nlohmann::json::object(), seed)
                      : load_config(path, seed);
}

template <class Fn>
std::string render(Fn&& write) {
  std::ostringstream out(std::ios::binary);
  write(out);
  return out.str();
}

std::vector<sasv::Stage> parse_stage_list(const std::string& text) {
  std::vector<sasv::Stage> stages;
  if (text.empty() || text == "none") return stages;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto s = sasv::parse_stage(token);
    if (!s) throw ConfigError("--stages: unknown stage '" + token + "'");
    stages.push_back(*s);
  }
  return stages;
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& config_path, const fs::path& out_dir, std::ostream& out) {
  const RunConfig cfg = config_from(config_path);
  const sasv::World w = sasv::gen_world(cfg.world);
  namespace p = sasv::protocol;

  const std::vector<std::pair<const char*, std::string>> files = {
      {kPretrainFile, render([&](std::ostream& o) { p::write_dataset(o, w.pretrain); })},
      {kCsPairsFile, render([&](std::ostream& o) { p::write_cs_pairing(o, w.cs_pairs); })},
      {kIndomainFile, render([&](std::ostream& o) { p::write_dataset(o, w.indomain); })},
      {kEnrollFile, render([&](std::ostream& o) { p::write_dataset(o, w.enroll); })},
      {kEvalFile, render([&](std::ostream& o) { p::write_dataset(o, w.eval); })},
      {kTrialsFile, render([&](std::ostream& o) { p::write_trials(o, w.eval_trials); })},
  };

  ordered_json manifest;
  manifest["format"] = std::string(p::kFormatVersion);
  manifest["seed"] = cfg.seed;
  manifest["config_sha256"] = sha256_hex(to_json(cfg).dump());
  manifest["files"] = ordered_json::array();
  for (const auto& [name, bytes] : files) {
    write_file(out_dir / name, bytes);
    manifest["files"].push_back(
        {{"name", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  const std::string text = manifest.dump(2) + "\n";
  write_file(out_dir / kManifestFile, text);
  out << text;
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& stage_list,
              const fs::path& world_dir, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  const RunConfig cfg = config_from(config_path);
  const auto stages = parse_stage_list(stage_list);

  bool need_pretrain = false, need_cs = false, need_indomain = false;
  for (sasv::Stage s : stages) {
    need_pretrain |= s == sasv::Stage::s1 || s == sasv::Stage::s2;
    need_cs |= s == sasv::Stage::s2;
    need_indomain |= s == sasv::Stage::s3;
  }
  std::vector<std::string> missing;
  auto require = [&](bool needed, const char* name) {
    if (needed && !fs::exists(world_dir / name)) missing.push_back((world_dir / name).string());
  };
  require(need_pretrain, kPretrainFile);
  require(need_cs, kCsPairsFile);
  require(need_indomain, kIndomainFile);
  if (!missing.empty()) {
    std::string msg = "missing input:";
    for (const auto& m : missing) msg += " " + m;
    throw MissingInput(msg);
  }

  std::optional<sasv::Dataset> pretrain, indomain;
  std::optional<sasv::CsPairing> cs;
  if (need_pretrain) pretrain = load_dataset(world_dir / kPretrainFile);
  if (need_cs) {
    cs = parse_file(world_dir / kCsPairsFile, [&](std::istream& in) {
      return sasv::protocol::parse_cs_pairing(in, *pretrain);
    });
  }
  if (need_indomain) indomain = load_dataset(world_dir / kIndomainFile);

  std::size_t feature_dim = static_cast<std::size_t>(cfg.world.feature_dim);
  if (pretrain) {
    feature_dim = pretrain->feature_dim();
  } else if (indomain) {
    feature_dim = indomain->feature_dim();
  }

  const sasv::TrainingData data{pretrain ? &*pretrain : nullptr, cs ? &*cs : nullptr,
                                indomain ? &*indomain : nullptr};
  sasv::Trainables state = sasv::initial_trainables(feature_dim, cfg.trainer);
  std::string log;
  for (sasv::Stage s : stages) {
    sasv::StageResult r;
    try {
      r = sasv::run_stage(state, plan_for(cfg, s), data, cfg.trainer);
    } catch (const sasv::ContractError& e) {
      throw BadInput(std::string("stage ") + std::string(sasv::to_string(s)) + ": " + e.what());
    }
    state = std::move(r.state);
    for (const auto& rec : r.log) {
      ordered_json line = {{"epoch", rec.epoch},
                           {"stage", std::string(sasv::to_string(rec.stage))},
                           {"mean_loss", rec.mean_loss},
                           {"lr", rec.lr}};
      log += line.dump() + "\n";
    }
    if (!r.log.empty()) {
      err << "stage " << sasv::to_string(s) << ": " << r.log.size()
          << " epochs, final mean loss " << r.log.back().mean_loss << "\n";
    }
  }

  const fs::path model_path = out_dir / kModelFile;
  const fs::path log_path = out_dir / kTrainLogFile;
  write_file(model_path,
             render([&](std::ostream& o) { sasv::write_encoder(o, state.encoder); }));
  write_file(log_path, log);
  out << model_path.string() << "\n" << log_path.string() << "\n";
  return kExitOk;
}

int cmd_embed(const fs::path& model_path, const fs::path& dataset_path,
              const fs::path& out_path, bool binary, bool enrollment) {
  const sasv::Encoder enc = load_model(model_path);
  const sasv::Dataset d = load_dataset(dataset_path);
  if (!d.utterances.empty() && d.feature_dim() != enc.input_dim()) {
    throw BadInput(dataset_path.string() + ": feature dimension " +
                   std::to_string(d.feature_dim()) + " does not match model input " +
                   std::to_string(enc.input_dim()));
  }
  sasv::EmbeddingTable table;
  if (enrollment) {
    for (const auto& [key, embs] : sasv::enrollment_embeddings(enc, d)) {
      table.emplace(key, sasv::enrollment_model(embs));
    }
  } else {
    table = sasv::embed_dataset(enc, d);
  }
  write_file(out_path, render([&](std::ostream& o) {
               if (binary) {
                 sasv::protocol::write_embeddings_binary(o, table);
               } else {
                 sasv::protocol::write_embeddings_text(o, table);
               }
             }));
  return kExitOk;
}

int cmd_score(const fs::path& enroll_path, const fs::path& test_path,
              const fs::path& trials_path, const fs::path& out_path) {
  auto parse_emb = [](std::istream& in) { return sasv::protocol::parse_embeddings(in); };
  const auto enroll = parse_file(enroll_path, parse_emb);
  const auto test = parse_file(test_path, parse_emb);
  const auto trials = parse_file(
      trials_path, [](std::istream& in) { return sasv::protocol::parse_trials(in); });
  sasv::EnrollmentMap models;
  for (const auto& [key, e] : enroll) models[key].push_back(e);
  std::vector<sasv::ScoredTrial> scored;
  try {
    scored = sasv::score_trials(models, test, trials);
  } catch (const sasv::Error& e) {
    throw BadInput(std::string("scoring: ") + e.what());
  }
  write_file(out_path, render([&](std::ostream& o) {
               sasv::protocol::write_scores(o, std::span<const sasv::ScoredTrial>(scored));
             }));
  return kExitOk;
}

ordered_json metric_json(const std::optional<sasv::EerResult>& r) {
  if (!r) return nullptr;
  return {{"eer", r->eer},
          {"eer_percent", r->eer * 100.0},
          {"threshold", r->threshold},
          {"n_pos", r->n_pos},
          {"n_neg", r->n_neg}};
}

std::string percent_cell(const std::optional<sasv::EerResult>& r) {
  if (!r) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r->eer * 100.0);
  return buf;
}

int cmd_eval(const fs::path& scores_path, const fs::path& trials_path,
             const std::string& json_path, std::ostream& out, std::ostream& err) {
  const auto scores = parse_file(
      scores_path, [](std::istream& in) { return sasv::protocol::parse_scores(in); });
  const auto trials = parse_file(
      trials_path, [](std::istream& in) { return sasv::protocol::parse_trials(in); });
  std::vector<sasv::ScoredTrial> scored;
  try {
    scored = sasv::protocol::join_scores(scores, trials);
  } catch (const sasv::Error& e) {
    throw BadInput(std::string("joining scores and trials: ") + e.what());
  }
  const sasv::SasvEvaluation ev = sasv::eval_sasv(scored);
  for (const auto& msg : ev.errors) err << "note: " << msg << "\n";

  char row[96];
  std::snprintf(row, sizeof(row), "%8s  %6s  %7s\n", "SASV-EER", "SV-EER", "SPF-EER");
  out << row;
  std::snprintf(row, sizeof(row), "%8s  %6s  %7s\n", percent_cell(ev.sasv).c_str(),
                percent_cell(ev.sv).c_str(), percent_cell(ev.spf).c_str());
  out << row;

  if (!json_path.empty()) {
    ordered_json doc = {{"sasv", metric_json(ev.sasv)},
                        {"sv", metric_json(ev.sv)},
                        {"spf", metric_json(ev.spf)},
                        {"trials", scored.size()},
                        {"errors", ev.errors}};
    write_file(json_path, doc.dump(2) + "\n");
  }
  if (!ev.sasv && !ev.sv && !ev.spf) {
    throw BadInput("no metric could be computed from " + trials_path.string());
  }
  return kExitOk;
}

int cmd_gradcheck(const std::string& loss_name, int trials, std::uint64_t seed,
                  std::ostream& out) {
  std::vector<sasv::GradcheckLoss> losses;
  if (loss_name == "all") {
    losses.assign(std::begin(sasv::kAllGradcheckLosses), std::end(sasv::kAllGradcheckLosses));
  } else {
    const auto l = sasv::parse_gradcheck_loss(loss_name);
    if (!l) throw ConfigError("--loss: unknown loss '" + loss_name + "'");
    losses.push_back(*l);
  }
  if (trials < 1) throw ConfigError("--trials: must be >= 1");
  bool ok = true;
  for (sasv::GradcheckLoss l : losses) {
    const auto rep = sasv::run_gradcheck(l, trials, seed);
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s trials %d max_rel_err %.3e %s\n",
                  std::string(sasv::to_string(l)).c_str(), rep.instances,
                  rep.max_relative_error, rep.passed ? "ok" : "FAIL");
    out << line;
    ok = ok && rep.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw sasv::Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sasvkit: spoofing-aware speaker verification toolkit", "sasvkit"};
  app.require_subcommand(1);

  std::string config, out_dir, world_dir, stages = "s1,s2,s3";
  std::string model, dataset, out_file, enroll, test, trials_file, scores, json_out;
  std::string loss;
  bool binary = false, enrollment = false;
  int n_trials = 50;
  std::uint64_t seed = 1;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic world");
  gen->add_option("--config", config, "JSON run configuration");
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train an encoder on a world");
  train->add_option("--config", config, "JSON run configuration");
  train->add_option("--stages", stages, "Comma-separated stages (s1,s2,s3) or 'none'");
  train->add_option("--world", world_dir, "World directory (default: --out)");
  train->add_option("--out", out_dir, "Output directory")->required();

  auto* embed = app.add_subcommand("embed", "Embed a dataset");
  embed->add_option("--model", model, "Model file")->required();
  embed->add_option("--dataset", dataset, "Dataset file")->required();
  embed->add_option("--out", out_file, "Embedding file to write")->required();
  embed->add_flag("--binary", binary, "Write the binary embedding format");
  embed->add_flag("--enrollment", enrollment,
                  "Write one averaged model per bona fide speaker");

  auto* score = app.add_subcommand("score", "Score a trial list");
  score->add_option("--enroll", enroll, "Enrollment embeddings (keyed by speaker)")->required();
  score->add_option("--test", test, "Test embeddings (keyed by utterance)")->required();
  score->add_option("--trials", trials_file, "Trial list")->required();
  score->add_option("--out", out_file, "Score file to write")->required();

  auto* eval = app.add_subcommand("eval", "Compute SASV, SV and SPF EERs");
  eval->add_option("--scores", scores, "Score file")->required();
  eval->add_option("--trials", trials_file, "Trial list")->required();
  eval->add_option("--json", json_out, "Write metrics as JSON");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad->add_option("--loss", loss, "Loss name or 'all'")->required();
  grad->add_option("--trials", n_trials, "Randomized instances");
  grad->add_option("--seed", seed, "Seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "sasvkit: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(config, out_dir, out);
    if (train->parsed()) {
      return cmd_train(config, stages, world_dir.empty() ? out_dir : world_dir, out_dir,
                       out, err);
    }
    if (embed->parsed()) return cmd_embed(model, dataset, out_file, binary, enrollment);
    if (score->parsed()) return cmd_score(enroll, test, trials_file, out_file);
    if (eval->parsed()) return cmd_eval(scores, trials_file, json_out, out, err);
    if (grad->parsed()) return cmd_gradcheck(loss, n_trials, seed, out);
  } catch (const ConfigError& e) {
    err << "sasvkit: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingInput& e) {
    err << "sasvkit: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const sasv::NonFiniteError& e) {
    err << "sasvkit: non-finite value: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const BadInput& e) {
    err << "sasvkit: bad input: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const IoError& e) {
    err << "sasvkit: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "sasvkit: error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace sasvkit::cli
