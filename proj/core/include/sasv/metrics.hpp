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
#ifndef SASV_METRICS_HPP_
#define SASV_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/trials.hpp"

namespace sasv {

struct EerResult {
  double eer = 0.0;        // in [0, 1]
  double threshold = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  // Index into the ascending candidate-threshold list (distinct scores
  // followed by +inf) of the first point where FAR <= FRR.
  std::size_t crossing_index = 0;
};

/// Equal error rate with FAR(t) = #{neg >= t} / n_neg and
/// FRR(t) = #{pos < t} / n_pos, evaluated at every distinct score plus +inf.
/// The EER is read off at the first candidate where FAR <= FRR: exactly
/// there when FAR == FRR (midpoint of the two), otherwise by linear
/// interpolation of both curves from the previous candidate.
/// Throws ContractError on an empty list.
EerResult compute_eer(std::span<const double> pos, std::span<const double> neg);

struct DetPoint {
  double threshold;
  double far;
  double frr;
};
// Raw operating points at every candidate threshold, ascending.
std::vector<DetPoint> det_points(std::span<const double> pos,
                                 std::span<const double> neg);

/// L2-normalized mean of the L2-normalized inputs.
Embedding enrollment_model(std::span<const Embedding> embeddings);

using EnrollmentMap = std::map<std::string, std::vector<Embedding>>;
using EmbeddingTable = std::map<std::string, Embedding>;

/// Cosine between each trial's enrollment model and its test embedding,
/// in trial order. Unresolvable references throw ContractError naming the
/// trial (1-based position).
std::vector<ScoredTrial> score_trials(const EnrollmentMap& enrollments,
                                      const EmbeddingTable& tests,
                                      std::span<const TrialRecord> trials);

struct SasvEvaluation {
  std::optional<EerResult> sasv;  // target vs nontarget + spoof
  std::optional<EerResult> sv;    // target vs nontarget
  std::optional<EerResult> spf;   // target vs spoof
  // One message per metric that could not be computed.
  std::vector<std::string> errors;

  bool complete() const { return sasv && sv && spf; }
};

SasvEvaluation eval_sasv(std::span<const ScoredTrial> scored);

}  // namespace sasv

#endif  // SASV_METRICS_HPP_
