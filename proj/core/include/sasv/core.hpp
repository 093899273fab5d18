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
#ifndef SASV_CORE_HPP_
#define SASV_CORE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sasv {

/// A fixed-dimension real vector representing one utterance in SASV space.
/// Stored exactly as given: normalization only happens inside cosine
/// operations. Equality is bitwise on the stored doubles.
class Embedding {
 public:
  Embedding() = default;
  // Throws ContractError when dim < 2 or any entry is non-finite.
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  friend bool operator==(const Embedding& a, const Embedding& b);

 private:
  std::vector<double> values_;
};

// 1-based speaker index in [1..num_speakers] of the owning dataset.
struct SpeakerLabel {
  int index = 1;
  friend bool operator==(SpeakerLabel, SpeakerLabel) = default;
  friend auto operator<=>(SpeakerLabel, SpeakerLabel) = default;
};

enum class CmLabel { bonafide, spoof };

std::string_view to_string(CmLabel cm);
std::optional<CmLabel> parse_cm_label(std::string_view token);

// Identification target over num_speakers + 1 classes: bona fide utterances
// keep their speaker index, every spoof maps to the extra class.
struct SasvClassLabel {
  int index = 1;

  static SasvClassLabel of(SpeakerLabel speaker, CmLabel cm, int num_speakers) {
    return {cm == CmLabel::spoof ? num_speakers + 1 : speaker.index};
  }
  friend bool operator==(SasvClassLabel, SasvClassLabel) = default;
};

// Abstract stand-ins for four copy-synthesis vocoders.
enum class VocoderId { V1, V2, V3, V4 };
inline constexpr int kNumVocoders = 4;

std::string_view to_string(VocoderId id);
std::optional<VocoderId> parse_vocoder(std::string_view token);

struct LabeledUtterance {
  std::string utt_id;
  std::vector<double> features;
  SpeakerLabel speaker;
  CmLabel cm = CmLabel::bonafide;
  // Vocoder id ("V1".."V4") for copy-synthesis spoofs, attack tag otherwise.
  std::optional<std::string> source;
};

struct Dataset {
  std::string name;
  int num_speakers = 0;
  std::vector<LabeledUtterance> utterances;

  std::size_t feature_dim() const {
    return utterances.empty() ? 0 : utterances.front().features.size();
  }
};

struct Violation {
  std::string utt_id;
  std::string rule;
};

// Empty iff every Dataset invariant holds.
std::vector<Violation> validate_dataset(const Dataset& d);

// Canonical string id for a speaker of a dataset, used by trial files.
std::string speaker_key(SpeakerLabel speaker);

}  // namespace sasv

#endif  // SASV_CORE_HPP_
