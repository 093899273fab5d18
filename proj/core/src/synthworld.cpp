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
#include "sasv/synthworld.hpp"

#include <cmath>
#include <cstdio>
#include <span>

#include "sasv/error.hpp"
#include "sasv/rng.hpp"

namespace sasv {

namespace {

std::string utt_name(const char* prefix, int speaker, int utt,
                     const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%04d_%02d%s", prefix, speaker, utt, suffix);
  return buf;
}

class Generator {
 public:
  Generator(const WorldConfig& cfg, Rng rng) : cfg_(cfg), rng_(rng) {}

  Vector centroid() {
    const int speaker_dims = cfg_.feature_dim - cfg_.artefact_dims;
    const double sd = cfg_.speaker_spread / std::sqrt(static_cast<double>(speaker_dims));
    Vector c(static_cast<std::size_t>(cfg_.feature_dim), 0.0);
    for (int i = 0; i < speaker_dims; ++i) c[static_cast<std::size_t>(i)] = sd * rng_.normal();
    return c;
  }

  Vector utterance(const Vector& centroid) {
    const double sd =
        cfg_.utterance_noise / std::sqrt(static_cast<double>(cfg_.feature_dim));
    Vector x = centroid;
    for (double& v : x) v += sd * rng_.normal();
    return x;
  }

  // Random direction in the artefact subspace with norm cfg.vocoder_shift_norm.
  Vector artefact() {
    Vector v(static_cast<std::size_t>(cfg_.feature_dim), 0.0);
    const auto first = static_cast<std::size_t>(cfg_.feature_dim - cfg_.artefact_dims);
    double n = 0.0;
    while (!(n > 0.0)) {
      for (std::size_t i = first; i < v.size(); ++i) v[i] = rng_.normal();
      n = norm(v);
    }
    for (double& x : v) x *= cfg_.vocoder_shift_norm / n;
    return v;
  }

  std::uint64_t below(std::uint64_t n) { return rng_.below(n); }

 private:
  const WorldConfig& cfg_;
  Rng rng_;
};

Vector shifted(const Vector& x, const Vector& shift) {
  Vector y = x;
  axpy(1.0, shift, y);
  return y;
}

}  // namespace

std::string attack_tag(int attack) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "A%02d", attack + 1);
  return buf;
}

void validate_world_config(const WorldConfig& cfg) {
  auto fail = [](const char* key, const char* rule) {
    throw ContractError(std::string("world.") + key + ": " + rule);
  };
  if (cfg.num_speakers < 2) fail("num_speakers", "must be >= 2");
  if (cfg.utts_per_speaker < 2) fail("utts_per_speaker", "must be >= 2");
  if (cfg.feature_dim < 2) fail("feature_dim", "must be >= 2");
  if (cfg.artefact_dims < 1 || cfg.artefact_dims >= cfg.feature_dim) {
    fail("artefact_dims", "must be in [1, feature_dim)");
  }
  if (!(cfg.speaker_spread > 0.0) || !std::isfinite(cfg.speaker_spread)) {
    fail("speaker_spread", "must be > 0");
  }
  if (!(cfg.utterance_noise >= 0.0) || !std::isfinite(cfg.utterance_noise)) {
    fail("utterance_noise", "must be >= 0");
  }
  if (!(cfg.vocoder_shift_norm >= 0.0) || !std::isfinite(cfg.vocoder_shift_norm)) {
    fail("vocoder_shift_norm", "must be >= 0");
  }
  if (cfg.attack_count < 1) fail("attack_count", "must be >= 1");
  if (!(cfg.attack_vocoder_share >= 0.0 && cfg.attack_vocoder_share < 1.0)) {
    fail("attack_vocoder_share", "must be in [0, 1)");
  }
  if (cfg.eval_attack_count < 0) fail("eval_attack_count", "must be >= 0");
  if (cfg.indomain_speakers < 2) fail("indomain_speakers", "must be >= 2");
  if (cfg.indomain_utts_per_speaker < 2) fail("indomain_utts_per_speaker", "must be >= 2");
  if (cfg.indomain_spoofs_per_utt < 1) fail("indomain_spoofs_per_utt", "must be >= 1");
  if (cfg.eval_speakers < 2) fail("eval_speakers", "must be >= 2");
  if (cfg.eval_enroll_utts < 1) fail("eval_enroll_utts", "must be >= 1");
  if (cfg.eval_test_utts < 2) fail("eval_test_utts", "must be >= 2");
  if (cfg.eval_spoof_utts < 1) fail("eval_spoof_utts", "must be >= 1");
  if (cfg.eval_nontarget_per_speaker < 1 ||
      cfg.eval_nontarget_per_speaker >
          (cfg.eval_speakers - 1) * cfg.eval_test_utts) {
    fail("eval_nontarget_per_speaker",
         "must be in [1, (eval_speakers - 1) * eval_test_utts]");
  }
}

World gen_world(const WorldConfig& cfg) {
  validate_world_config(cfg);
  const Rng root(cfg.seed);
  World w;

  Generator shifts(cfg, root.split(1));
  for (auto& v : w.vocoder_shifts) v = shifts.artefact();
  // Each attack reuses part of one vocoder's artefact: attack a is built on
  // vocoder a mod 4, mixed with a private direction.
  const double share = cfg.attack_vocoder_share;
  for (int a = 0; a < cfg.attack_count + cfg.eval_attack_count; ++a) {
    const Vector& base = w.vocoder_shifts[static_cast<std::size_t>(a % kNumVocoders)];
    Vector v = shifts.artefact();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = share * base[i] + std::sqrt(1.0 - share * share) * v[i];
    }
    const double n = norm(v);
    if (n > 0.0) {
      for (double& x : v) x *= cfg.vocoder_shift_norm / n;
    }
    w.attack_shifts.push_back(std::move(v));
  }

  // Pre-training set: bona fide plus one CS copy per vocoder.
  {
    Generator gen(cfg, root.split(2));
    w.pretrain.name = "pretrain";
    w.pretrain.num_speakers = cfg.num_speakers;
    for (int s = 1; s <= cfg.num_speakers; ++s) {
      const Vector c = gen.centroid();
      for (int u = 1; u <= cfg.utts_per_speaker; ++u) {
        LabeledUtterance bona{utt_name("pt", s, u), gen.utterance(c), {s},
                              CmLabel::bonafide, std::nullopt};
        auto& pairs = w.cs_pairs[bona.utt_id];
        std::vector<LabeledUtterance> copies;
        for (int v = 0; v < kNumVocoders; ++v) {
          const auto id = static_cast<VocoderId>(v);
          const std::string tag(to_string(id));
          LabeledUtterance cs{bona.utt_id + "_" + tag,
                              shifted(bona.features, w.vocoder_shifts[static_cast<std::size_t>(v)]),
                              {s}, CmLabel::spoof, tag};
          pairs.push_back({id, cs.utt_id});
          copies.push_back(std::move(cs));
        }
        w.pretrain.utterances.push_back(std::move(bona));
        for (auto& cs : copies) w.pretrain.utterances.push_back(std::move(cs));
      }
    }
  }

  // In-domain set: bona fide plus attack spoofs of the same speakers.
  {
    Generator gen(cfg, root.split(3));
    w.indomain.name = "indomain";
    w.indomain.num_speakers = cfg.indomain_speakers;
    for (int s = 1; s <= cfg.indomain_speakers; ++s) {
      const Vector c = gen.centroid();
      for (int u = 1; u <= cfg.indomain_utts_per_speaker; ++u) {
        LabeledUtterance bona{utt_name("in", s, u), gen.utterance(c), {s},
                              CmLabel::bonafide, std::nullopt};
        for (int k = 0; k < cfg.indomain_spoofs_per_utt; ++k) {
          const int attack = static_cast<int>(
              gen.below(static_cast<std::uint64_t>(cfg.attack_count)));
          const std::string tag = attack_tag(attack);
          char suffix[16];
          std::snprintf(suffix, sizeof(suffix), "_%s_%d", tag.c_str(), k + 1);
          w.indomain.utterances.push_back(
              {bona.utt_id + suffix,
               shifted(bona.features, w.attack_shifts[static_cast<std::size_t>(attack)]),
               {s}, CmLabel::spoof, tag});
        }
        w.indomain.utterances.push_back(std::move(bona));
      }
    }
  }

  // Evaluation speakers, disjoint from both training sets.
  {
    Generator gen(cfg, root.split(4));
    w.enroll.name = "enroll";
    w.eval.name = "eval";
    w.enroll.num_speakers = w.eval.num_speakers = cfg.eval_speakers;
    std::vector<std::vector<std::string>> bona_tests(
        static_cast<std::size_t>(cfg.eval_speakers));
    for (int s = 1; s <= cfg.eval_speakers; ++s) {
      const Vector c = gen.centroid();
      for (int u = 1; u <= cfg.eval_enroll_utts; ++u) {
        w.enroll.utterances.push_back({utt_name("en", s, u), gen.utterance(c),
                                       {s}, CmLabel::bonafide, std::nullopt});
      }
      for (int u = 1; u <= cfg.eval_test_utts; ++u) {
        LabeledUtterance t{utt_name("ev", s, u), gen.utterance(c), {s},
                           CmLabel::bonafide, std::nullopt};
        bona_tests[static_cast<std::size_t>(s - 1)].push_back(t.utt_id);
        w.eval_trials.push_back({speaker_key({s}), t.utt_id, CmLabel::bonafide,
                                 TrialLabel::target});
        w.eval.utterances.push_back(std::move(t));
      }
      for (int u = 1; u <= cfg.eval_spoof_utts; ++u) {
        const int attack = static_cast<int>(gen.below(
            static_cast<std::uint64_t>(cfg.attack_count + cfg.eval_attack_count)));
        const std::string tag = attack_tag(attack);
        LabeledUtterance t{utt_name("ev", s, u, ("_" + tag).c_str()),
                           shifted(gen.utterance(c),
                                   w.attack_shifts[static_cast<std::size_t>(attack)]),
                           {s}, CmLabel::spoof, tag};
        w.eval_trials.push_back({speaker_key({s}), t.utt_id, CmLabel::spoof,
                                 TrialLabel::spoof});
        w.eval.utterances.push_back(std::move(t));
      }
    }
    // Nontarget trials: distinct bona fide tests of other speakers.
    for (int s = 1; s <= cfg.eval_speakers; ++s) {
      std::vector<std::string> others;
      for (int o = 1; o <= cfg.eval_speakers; ++o) {
        if (o == s) continue;
        const auto& ids = bona_tests[static_cast<std::size_t>(o - 1)];
        others.insert(others.end(), ids.begin(), ids.end());
      }
      for (int k = 0; k < cfg.eval_nontarget_per_speaker; ++k) {
        const std::size_t j =
            static_cast<std::size_t>(k) + gen.below(others.size() - static_cast<std::size_t>(k));
        std::swap(others[static_cast<std::size_t>(k)], others[j]);
        w.eval_trials.push_back({speaker_key({s}), others[static_cast<std::size_t>(k)],
                                 CmLabel::bonafide, TrialLabel::nontarget});
      }
    }
  }
  return w;
}

}  // namespace sasv
