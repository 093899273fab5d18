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
#ifndef SASV_SYNTHWORLD_HPP_
#define SASV_SYNTHWORLD_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/linalg.hpp"
#include "sasv/sampling.hpp"
#include "sasv/trials.hpp"

namespace sasv {

/// Synthetic SASV universe.
///
/// Features live in R^F, split into a speaker subspace (the first
/// F - artefact_dims coordinates) and an artefact subspace (the last
/// artefact_dims coordinates). Speaker centroids are isotropic Gaussians in
/// the speaker subspace with expected norm speaker_spread; each bona fide
/// utterance adds isotropic noise over all F coordinates with expected
/// norm utterance_noise. Spoofs are bona fide utterances plus one fixed
/// artefact vector of norm vocoder_shift_norm lying in the artefact
/// subspace: four per-vocoder vectors for copy synthesis and attack_count
/// distinct attack vectors for in-domain spoofing. A linear CM can thus
/// read the artefact subspace while pure speaker features ignore it.
struct WorldConfig {
  int num_speakers = 64;          // C_spk of the pre-training set
  int utts_per_speaker = 10;
  int feature_dim = 32;           // F
  int artefact_dims = 8;
  double speaker_spread = 1.0;    // sigma_spk
  double utterance_noise = 0.3;   // sigma_utt
  double vocoder_shift_norm = 0.5;  // delta
  int attack_count = 4;
  // Extra attacks that appear only in the evaluation set. Eval spoofs draw
  // from the in-domain attacks and these. Off by default: eval spoofs reuse
  // the in-domain attacks.
  int eval_attack_count = 0;
  // Weight of the shared vocoder component in each attack shift.
  double attack_vocoder_share = 0.5;
  int indomain_speakers = 16;
  int indomain_utts_per_speaker = 10;
  int indomain_spoofs_per_utt = 1;
  int eval_speakers = 16;
  int eval_enroll_utts = 3;
  int eval_test_utts = 10;        // bona fide test utterances per speaker
  int eval_spoof_utts = 10;       // spoofed test utterances per speaker
  int eval_nontarget_per_speaker = 20;
  std::uint64_t seed = 20230820;
};

// Throws ContractError naming the first offending field.
void validate_world_config(const WorldConfig& cfg);

struct World {
  Dataset pretrain;      // bona fide + copy-synthesis spoofs (stages 1-2)
  CsPairing cs_pairs;    // pretrain bona fide -> CS counterparts
  Dataset indomain;      // bona fide + attack spoofs (stage 3)
  Dataset enroll;        // evaluation enrollment utterances (bona fide)
  Dataset eval;          // evaluation test utterances (bona fide + spoof)
  std::vector<TrialRecord> eval_trials;

  // Generation-time artefact vectors, exposed for tests.
  std::array<Vector, kNumVocoders> vocoder_shifts;
  std::vector<Vector> attack_shifts;  // in-domain attacks, then eval-only ones
};

World gen_world(const WorldConfig& cfg);

// Tag of the i-th (0-based) in-domain attack, e.g. "A01".
std::string attack_tag(int attack);

}  // namespace sasv

#endif  // SASV_SYNTHWORLD_HPP_
