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
#ifndef SASV_TRIALS_HPP_
#define SASV_TRIALS_HPP_

#include <optional>
#include <string>
#include <string_view>

#include "sasv/core.hpp"

namespace sasv {

enum class TrialLabel { target, nontarget, spoof };

std::string_view to_string(TrialLabel label);
std::optional<TrialLabel> parse_trial_label(std::string_view token);

// One evaluation protocol row. label == spoof iff cm == spoof.
struct TrialRecord {
  std::string enrol_speaker;
  std::string test_utt;
  CmLabel cm = CmLabel::bonafide;
  TrialLabel label = TrialLabel::target;

  bool consistent() const {
    return (label == TrialLabel::spoof) == (cm == CmLabel::spoof);
  }
  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct ScoredTrial {
  TrialRecord trial;
  double score = 0.0;
};

}  // namespace sasv

#endif  // SASV_TRIALS_HPP_
