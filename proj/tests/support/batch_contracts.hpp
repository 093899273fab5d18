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
// Composition invariants of sampled batches, checked from the outside.
#ifndef SASVKIT_TESTS_BATCH_CONTRACTS_HPP_
#define SASVKIT_TESTS_BATCH_CONTRACTS_HPP_

#include <set>
#include <string>

#include "sasv/core.hpp"
#include "sasv/sampling.hpp"

namespace sasv::oracle {

// Returns an empty string when the batch honours the contract of its stage,
// otherwise a description of the first broken rule.
inline std::string check_batch(const Dataset& d, const CsPairing* cs,
                               const BatchSpec& spec, const UtteranceBatch& b) {
  const auto nspk = static_cast<std::size_t>(spec.num_speakers);
  const std::size_t bona = nspk;
  std::size_t extra = 0;
  if (spec.stage == Stage::s2) extra = nspk;
  if (spec.stage == Stage::s3) extra = static_cast<std::size_t>(spec.num_spoof_pairs);
  if (b.support.size() != bona + extra || b.prototype.size() != bona + extra) {
    return "pair count";
  }
  for (std::size_t i = 0; i < b.support.size(); ++i) {
    if (b.support[i] >= d.utterances.size() || b.prototype[i] >= d.utterances.size()) {
      return "index out of range";
    }
  }
  std::set<int> speakers;
  std::set<std::size_t> used;
  for (std::size_t i = 0; i < bona; ++i) {
    const auto& s = d.utterances[b.support[i]];
    const auto& p = d.utterances[b.prototype[i]];
    if (s.cm != CmLabel::bonafide || p.cm != CmLabel::bonafide) return "bona fide slot holds spoof";
    if (s.speaker != p.speaker) return "bona fide pair mixes speakers";
    if (b.support[i] == b.prototype[i]) return "bona fide pair repeats an utterance";
    if (!speakers.insert(s.speaker.index).second) return "speaker repeated";
  }
  for (std::size_t i = bona; i < bona + extra; ++i) {
    const auto& s = d.utterances[b.support[i]];
    const auto& p = d.utterances[b.prototype[i]];
    if (s.cm != CmLabel::spoof || p.cm != CmLabel::spoof) return "spoof slot holds bona fide";
    if (spec.stage == Stage::s2) {
      const std::size_t partner = i - bona;
      for (auto [cs_idx, bona_idx] : {std::pair{b.support[i], b.support[partner]},
                                      std::pair{b.prototype[i], b.prototype[partner]}}) {
        const auto& cu = d.utterances[cs_idx];
        const auto& bu = d.utterances[bona_idx];
        if (cu.speaker != bu.speaker) return "CS item changes speaker";
        bool listed = false;
        for (const auto& c : cs->at(bu.utt_id)) listed |= c.utt_id == cu.utt_id;
        if (!listed) return "CS item is not a counterpart of its partner";
      }
    } else {
      if (!used.insert(b.support[i]).second || !used.insert(b.prototype[i]).second) {
        return "spoof utterance drawn twice";
      }
    }
  }
  return {};
}

}  // namespace sasv::oracle

#endif  // SASVKIT_TESTS_BATCH_CONTRACTS_HPP_
