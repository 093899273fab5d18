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
#ifndef SASV_SAMPLING_HPP_
#define SASV_SAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/rng.hpp"

namespace sasv {

enum class Stage { s1, s2, s3 };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view token);

struct BatchSpec {
  Stage stage = Stage::s1;
  int num_speakers = 1;      // N_spk
  int num_spoof_pairs = 0;   // N_spf, stage 3 only
  std::uint64_t seed = 0;
};

// Throws ContractError when the batch spec is inconsistent with its stage.
void validate_batch_spec(const BatchSpec& spec);

struct CsCounterpart {
  VocoderId vocoder;
  std::string utt_id;
  friend bool operator==(const CsCounterpart&, const CsCounterpart&) = default;
};

// Bona fide utt_id -> its copy-synthesis counterparts.
using CsPairing = std::map<std::string, std::vector<CsCounterpart>>;

// A sampled batch as indices into Dataset::utterances. support[i] and
// prototype[i] form pair i; bona fide pairs come first.
struct UtteranceBatch {
  std::vector<std::size_t> support;
  std::vector<std::size_t> prototype;

  std::size_t num_pairs() const { return support.size(); }
  std::size_t num_utterances() const { return 2 * support.size(); }
  friend bool operator==(const UtteranceBatch&, const UtteranceBatch&) = default;
};

/// N_spk distinct bona fide speakers, two distinct utterances each.
UtteranceBatch stage1_batch(const Dataset& d, const BatchSpec& spec, Rng& rng);

/// Stage-1 layout for the bona fide half plus, for every sampled bona fide
/// utterance, one copy-synthesis counterpart with a uniformly drawn vocoder.
/// Pairs [0, N_spk) are bona fide, [N_spk, 2 N_spk) their CS mirrors.
UtteranceBatch stage2_batch(const Dataset& d, const CsPairing& cs,
                            const BatchSpec& spec, Rng& rng);

/// Stage-1 layout for the bona fide half plus 2 N_spf spoofs drawn uniformly
/// without replacement from the whole spoof pool, paired consecutively.
UtteranceBatch stage3_batch(const Dataset& d, const BatchSpec& spec, Rng& rng);

// Convenience forms seeded from spec.seed.
UtteranceBatch stage1_batch(const Dataset& d, const BatchSpec& spec);
UtteranceBatch stage2_batch(const Dataset& d, const CsPairing& cs,
                            const BatchSpec& spec);
UtteranceBatch stage3_batch(const Dataset& d, const BatchSpec& spec);

/// Epoch traversal: speakers are shuffled with a stream derived from
/// (seed, epoch) and cut into floor(eligible / N_spk) batches; the short
/// remainder is dropped.
class EpochSampler {
 public:
  // cs is required (and must outlive the sampler) for stage 2.
  EpochSampler(const Dataset& d, const BatchSpec& spec,
               const CsPairing* cs = nullptr);

  std::size_t batches_per_epoch() const;
  std::vector<UtteranceBatch> epoch(int epoch_index) const;
  const std::vector<int>& eligible_speakers() const { return speakers_; }

 private:
  const Dataset& dataset_;
  BatchSpec spec_;
  const CsPairing* cs_;
  std::map<int, std::vector<std::size_t>> bonafide_;  // speaker -> utt indices
  std::vector<int> speakers_;
  std::vector<std::size_t> spoof_pool_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace sasv

#endif  // SASV_SAMPLING_HPP_
