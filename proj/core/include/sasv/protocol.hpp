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
#ifndef SASV_PROTOCOL_HPP_
#define SASV_PROTOCOL_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/metrics.hpp"
#include "sasv/sampling.hpp"
#include "sasv/trials.hpp"

// Text and binary interchange formats. Every writer emits canonical output
// (one ASCII space between fields, "# sasvkit-v1 <kind>" header line);
// every reader accepts any run of spaces/tabs between fields, skips blank
// and '#' lines, rejects a header naming another format version, and
// reports failures as ParseError with a 1-based line number.
namespace sasv::protocol {

inline constexpr std::string_view kFormatVersion = "sasvkit-v1";

// -- trials: <enrol_spk> <test_utt> <bonafide|spoof> <target|nontarget|spoof>
std::vector<TrialRecord> parse_trials(std::istream& in);
void write_trials(std::ostream& out, std::span<const TrialRecord> trials);

// -- embeddings
// Text: <utt_id> TAB <v1> TAB ... TAB <vD>, values with 17 significant
// digits. Binary: "SVK1", u32 D, u32 count, then per record u16 id length,
// id bytes, D little-endian float64. parse_embeddings sniffs the magic.
EmbeddingTable parse_embeddings(std::istream& in);
void write_embeddings_text(std::ostream& out, const EmbeddingTable& table);
void write_embeddings_binary(std::ostream& out, const EmbeddingTable& table);

// -- copy-synthesis pairing: <bona_utt> <V1|V2|V3|V4> <cs_utt>
// Checked against the dataset: the bona fide side must be a bona fide
// utterance and the CS side a spoof of the same speaker.
CsPairing parse_cs_pairing(std::istream& in, const Dataset& dataset);
void write_cs_pairing(std::ostream& out, const CsPairing& pairing);

// -- scores: <enrol_spk> <test_utt> <score, %.12e with unpadded exponent>
struct ScoreEntry {
  std::string enrol_speaker;
  std::string test_utt;
  double score = 0.0;
  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};
std::vector<ScoreEntry> parse_scores(std::istream& in);
void write_scores(std::ostream& out, std::span<const ScoredTrial> scored);
void write_scores(std::ostream& out, std::span<const ScoreEntry> scores);
std::string format_score(double score);

// Attach trial labels to score lines by (enrol_speaker, test_utt). Every
// score line must match a trial and vice versa.
std::vector<ScoredTrial> join_scores(std::span<const ScoreEntry> scores,
                                     std::span<const TrialRecord> trials);

// -- datasets
// Header "# sasvkit-v1 dataset <name> <num_speakers> <feature_dim>", then
// <utt_id> <speaker_index> <bonafide|spoof> <source|-> <f1> ... <fF>.
Dataset parse_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& dataset);

}  // namespace sasv::protocol

#endif  // SASV_PROTOCOL_HPP_
