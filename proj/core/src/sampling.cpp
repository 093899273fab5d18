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
#include "sasv/sampling.hpp"

#include <algorithm>
#include <span>

#include "sasv/error.hpp"

namespace sasv {

namespace {

struct Pools {
  std::map<int, std::vector<std::size_t>> bonafide;  // speaker -> utt indices
  std::vector<int> speakers;                         // eligible, ascending
  std::vector<std::size_t> spoofs;
};

Pools build_pools(const Dataset& d) {
  Pools p;
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    const auto& u = d.utterances[i];
    if (u.cm == CmLabel::bonafide) {
      p.bonafide[u.speaker.index].push_back(i);
    } else {
      p.spoofs.push_back(i);
    }
  }
  for (const auto& [speaker, utts] : p.bonafide) {
    if (utts.size() >= 2) p.speakers.push_back(speaker);
  }
  return p;
}

std::map<std::string, std::size_t> index_by_id(const Dataset& d) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    idx.emplace(d.utterances[i].utt_id, i);
  }
  return idx;
}

// Every bona fide utterance of an eligible speaker must have a CS
// counterpart present in the dataset.
void check_cs_coverage(const Dataset& d, const Pools& pools, const CsPairing& cs,
                       const std::map<std::string, std::size_t>& index) {
  for (int speaker : pools.speakers) {
    for (std::size_t u : pools.bonafide.at(speaker)) {
      const std::string& id = d.utterances[u].utt_id;
      auto it = cs.find(id);
      if (it == cs.end() || it->second.empty()) {
        throw ContractError("stage 2: bona fide utterance '" + id +
                            "' has no copy-synthesis counterpart");
      }
      for (const auto& c : it->second) {
        if (!index.contains(c.utt_id)) {
          throw ContractError("stage 2: counterpart '" + c.utt_id + "' of '" +
                              id + "' is not in the dataset");
        }
      }
    }
  }
}

std::vector<int> pick_speakers(const Pools& pools, std::size_t count, Rng& rng,
                               const char* stage) {
  if (pools.speakers.size() < count) {
    throw ContractError(std::string(stage) + ": need " + std::to_string(count) +
                        " speakers with >= 2 bona fide utterances, have " +
                        std::to_string(pools.speakers.size()));
  }
  std::vector<int> chosen = pools.speakers;
  rng.shuffle(std::span<int>(chosen));
  chosen.resize(count);
  return chosen;
}

// Two distinct bona fide utterances per speaker: pairs[i] = (k=1, k=2).
using SpeakerUtts = std::map<int, std::vector<std::size_t>>;

void fill_bonafide(const SpeakerUtts& bonafide, std::span<const int> speakers,
                   Rng& rng, UtteranceBatch& out) {
  for (int speaker : speakers) {
    const auto& utts = bonafide.at(speaker);
    const std::size_t a = rng.below(utts.size());
    std::size_t b = rng.below(utts.size() - 1);
    if (b >= a) ++b;
    out.support.push_back(utts[a]);
    out.prototype.push_back(utts[b]);
  }
}

void fill_cs(const Dataset& d, const CsPairing& cs,
             const std::map<std::string, std::size_t>& index, Rng& rng,
             std::size_t bona_pairs, UtteranceBatch& out) {
  auto counterpart = [&](std::size_t bona) {
    const auto& cands = cs.at(d.utterances[bona].utt_id);
    return index.at(cands[rng.below(cands.size())].utt_id);
  };
  for (std::size_t i = 0; i < bona_pairs; ++i) {
    const std::size_t s = counterpart(out.support[i]);
    const std::size_t p = counterpart(out.prototype[i]);
    out.support.push_back(s);
    out.prototype.push_back(p);
  }
}

void fill_spoofs(const std::vector<std::size_t>& spoofs, std::size_t pairs,
                 Rng& rng, UtteranceBatch& out) {
  if (spoofs.size() < 2 * pairs) {
    throw ContractError("stage 3: need " + std::to_string(2 * pairs) +
                        " spoofed utterances, have " +
                        std::to_string(spoofs.size()));
  }
  // Partial Fisher-Yates from the front: uniform without replacement.
  std::vector<std::size_t> pool = spoofs;
  for (std::size_t i = 0; i < 2 * pairs; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  for (std::size_t i = 0; i < pairs; ++i) {
    out.support.push_back(pool[2 * i]);
    out.prototype.push_back(pool[2 * i + 1]);
  }
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::s1: return "s1";
    case Stage::s2: return "s2";
    case Stage::s3: return "s3";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view token) {
  if (token == "s1") return Stage::s1;
  if (token == "s2") return Stage::s2;
  if (token == "s3") return Stage::s3;
  return std::nullopt;
}

void validate_batch_spec(const BatchSpec& spec) {
  if (spec.num_speakers < 1) throw ContractError("batch spec: N_spk must be >= 1");
  if (spec.stage == Stage::s3) {
    if (spec.num_spoof_pairs < 1) {
      throw ContractError("batch spec: stage 3 requires N_spf >= 1");
    }
  } else if (spec.num_spoof_pairs != 0) {
    throw ContractError("batch spec: N_spf is only used by stage 3");
  }
}

UtteranceBatch stage1_batch(const Dataset& d, const BatchSpec& spec, Rng& rng) {
  validate_batch_spec(spec);
  const Pools pools = build_pools(d);
  const auto speakers =
      pick_speakers(pools, static_cast<std::size_t>(spec.num_speakers), rng, "stage 1");
  UtteranceBatch out;
  fill_bonafide(pools.bonafide, speakers, rng, out);
  return out;
}

UtteranceBatch stage2_batch(const Dataset& d, const CsPairing& cs,
                            const BatchSpec& spec, Rng& rng) {
  validate_batch_spec(spec);
  const Pools pools = build_pools(d);
  const auto index = index_by_id(d);
  check_cs_coverage(d, pools, cs, index);
  const auto speakers =
      pick_speakers(pools, static_cast<std::size_t>(spec.num_speakers), rng, "stage 2");
  UtteranceBatch out;
  fill_bonafide(pools.bonafide, speakers, rng, out);
  fill_cs(d, cs, index, rng, speakers.size(), out);
  return out;
}

UtteranceBatch stage3_batch(const Dataset& d, const BatchSpec& spec, Rng& rng) {
  validate_batch_spec(spec);
  const Pools pools = build_pools(d);
  const auto speakers =
      pick_speakers(pools, static_cast<std::size_t>(spec.num_speakers), rng, "stage 3");
  UtteranceBatch out;
  fill_bonafide(pools.bonafide, speakers, rng, out);
  fill_spoofs(pools.spoofs, static_cast<std::size_t>(spec.num_spoof_pairs), rng, out);
  return out;
}

UtteranceBatch stage1_batch(const Dataset& d, const BatchSpec& spec) {
  Rng rng(spec.seed);
  return stage1_batch(d, spec, rng);
}

UtteranceBatch stage2_batch(const Dataset& d, const CsPairing& cs,
                            const BatchSpec& spec) {
  Rng rng(spec.seed);
  return stage2_batch(d, cs, spec, rng);
}

UtteranceBatch stage3_batch(const Dataset& d, const BatchSpec& spec) {
  Rng rng(spec.seed);
  return stage3_batch(d, spec, rng);
}

EpochSampler::EpochSampler(const Dataset& d, const BatchSpec& spec,
                           const CsPairing* cs)
    : dataset_(d), spec_(spec), cs_(cs) {
  validate_batch_spec(spec_);
  Pools pools = build_pools(d);
  if (spec_.stage == Stage::s2) {
    if (cs_ == nullptr) throw ContractError("stage 2 sampler needs a CS pairing");
    index_ = index_by_id(d);
    check_cs_coverage(d, pools, *cs_, index_);
  }
  if (pools.speakers.size() < static_cast<std::size_t>(spec_.num_speakers)) {
    throw ContractError(std::string(to_string(spec_.stage)) + ": need " +
                        std::to_string(spec_.num_speakers) +
                        " speakers with >= 2 bona fide utterances, have " +
                        std::to_string(pools.speakers.size()));
  }
  if (spec_.stage == Stage::s3 &&
      pools.spoofs.size() < 2 * static_cast<std::size_t>(spec_.num_spoof_pairs)) {
    throw ContractError("s3: need " + std::to_string(2 * spec_.num_spoof_pairs) +
                        " spoofed utterances, have " +
                        std::to_string(pools.spoofs.size()));
  }
  bonafide_ = std::move(pools.bonafide);
  speakers_ = std::move(pools.speakers);
  spoof_pool_ = std::move(pools.spoofs);
}

std::size_t EpochSampler::batches_per_epoch() const {
  return speakers_.size() / static_cast<std::size_t>(spec_.num_speakers);
}

std::vector<UtteranceBatch> EpochSampler::epoch(int epoch_index) const {
  Rng rng = Rng(spec_.seed).split(static_cast<std::uint64_t>(epoch_index));
  std::vector<int> order = speakers_;
  rng.shuffle(std::span<int>(order));

  const auto n = static_cast<std::size_t>(spec_.num_speakers);
  std::vector<UtteranceBatch> batches;
  for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
    std::span<const int> speakers(order.data() + b * n, n);
    UtteranceBatch out;
    fill_bonafide(bonafide_, speakers, rng, out);
    if (spec_.stage == Stage::s2) fill_cs(dataset_, *cs_, index_, rng, n, out);
    if (spec_.stage == Stage::s3) {
      fill_spoofs(spoof_pool_, static_cast<std::size_t>(spec_.num_spoof_pairs), rng, out);
    }
    batches.push_back(std::move(out));
  }
  return batches;
}

}  // namespace sasv
