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
#include "sasv/core.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <unordered_set>

#include "sasv/error.hpp"
#include "sasv/linalg.hpp"

namespace sasv {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw ContractError("embedding dimension must be >= 2, got " +
                        std::to_string(values_.size()));
  }
  if (!all_finite(values_)) throw ContractError("embedding has non-finite entry");
}

double Embedding::norm() const { return sasv::norm(values_); }

bool operator==(const Embedding& a, const Embedding& b) {
  if (a.values_.size() != b.values_.size()) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.values_[i]) !=
        std::bit_cast<std::uint64_t>(b.values_[i])) {
      return false;
    }
  }
  return true;
}

std::string_view to_string(CmLabel cm) {
  return cm == CmLabel::bonafide ? "bonafide" : "spoof";
}

std::optional<CmLabel> parse_cm_label(std::string_view token) {
  if (token == "bonafide") return CmLabel::bonafide;
  if (token == "spoof") return CmLabel::spoof;
  return std::nullopt;
}

std::string_view to_string(VocoderId id) {
  switch (id) {
    case VocoderId::V1: return "V1";
    case VocoderId::V2: return "V2";
    case VocoderId::V3: return "V3";
    case VocoderId::V4: return "V4";
  }
  return "V?";
}

std::optional<VocoderId> parse_vocoder(std::string_view token) {
  if (token == "V1") return VocoderId::V1;
  if (token == "V2") return VocoderId::V2;
  if (token == "V3") return VocoderId::V3;
  if (token == "V4") return VocoderId::V4;
  return std::nullopt;
}

std::string speaker_key(SpeakerLabel speaker) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%04d", speaker.index);
  return buf;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  if (d.num_speakers < 1) {
    out.push_back({"", "num_speakers must be >= 1"});
  }
  std::unordered_set<std::string> seen;
  std::map<int, std::vector<const LabeledUtterance*>> bonafide_by_speaker;
  const std::size_t dim = d.feature_dim();
  for (const auto& u : d.utterances) {
    if (!seen.insert(u.utt_id).second) {
      out.push_back({u.utt_id, "duplicate utt_id"});
    }
    const bool in_range = u.speaker.index >= 1 && u.speaker.index <= d.num_speakers;
    if (!in_range) {
      out.push_back({u.utt_id, "speaker index " +
                                   std::to_string(u.speaker.index) +
                                   " outside [1.." +
                                   std::to_string(d.num_speakers) + "]"});
    }
    if (u.cm == CmLabel::spoof && !u.source) {
      out.push_back({u.utt_id, "spoof utterance without source tag"});
    }
    if (!all_finite(u.features)) {
      out.push_back({u.utt_id, "non-finite feature value"});
    }
    if (u.features.size() != dim) {
      out.push_back({u.utt_id, "feature dimension " +
                                   std::to_string(u.features.size()) +
                                   " differs from " + std::to_string(dim)});
    }
    // An out-of-range speaker is already reported; don't count it twice.
    if (u.cm == CmLabel::bonafide && in_range) {
      bonafide_by_speaker[u.speaker.index].push_back(&u);
    }
  }
  for (const auto& [speaker, utts] : bonafide_by_speaker) {
    if (utts.size() < 2) {
      out.push_back({utts.front()->utt_id,
                     "bona fide speaker " + std::to_string(speaker) +
                         " has fewer than 2 utterances"});
    }
  }
  return out;
}

}  // namespace sasv
