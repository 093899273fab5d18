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
#include "sasv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sasv/error.hpp"
#include "sasv/linalg.hpp"
#include "sasv/losses.hpp"

namespace sasv {

std::string_view to_string(TrialLabel label) {
  switch (label) {
    case TrialLabel::target: return "target";
    case TrialLabel::nontarget: return "nontarget";
    case TrialLabel::spoof: return "spoof";
  }
  return "?";
}

std::optional<TrialLabel> parse_trial_label(std::string_view token) {
  if (token == "target") return TrialLabel::target;
  if (token == "nontarget") return TrialLabel::nontarget;
  if (token == "spoof") return TrialLabel::spoof;
  return std::nullopt;
}

namespace {

struct Sweep {
  std::vector<double> thresholds;     // distinct scores ascending, then +inf
  std::vector<std::size_t> false_acc; // #{neg >= t}
  std::vector<std::size_t> false_rej; // #{pos < t}
};

Sweep sweep(std::span<const double> pos, std::span<const double> neg) {
  std::vector<double> p(pos.begin(), pos.end());
  std::vector<double> n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());

  Sweep s;
  s.thresholds.reserve(p.size() + n.size() + 1);
  std::merge(p.begin(), p.end(), n.begin(), n.end(),
             std::back_inserter(s.thresholds));
  s.thresholds.erase(std::unique(s.thresholds.begin(), s.thresholds.end()),
                     s.thresholds.end());
  s.thresholds.push_back(std::numeric_limits<double>::infinity());

  // Thresholds ascend, so both cursors only move forward.
  std::size_t ip = 0, in = 0;
  for (double t : s.thresholds) {
    while (ip < p.size() && p[ip] < t) ++ip;
    while (in < n.size() && n[in] < t) ++in;
    s.false_rej.push_back(ip);
    s.false_acc.push_back(n.size() - in);
  }
  return s;
}

}  // namespace

EerResult compute_eer(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw ContractError("compute_eer: positive and negative lists must be nonempty");
  }
  for (double v : pos) {
    if (!std::isfinite(v)) throw ContractError("compute_eer: non-finite score");
  }
  for (double v : neg) {
    if (!std::isfinite(v)) throw ContractError("compute_eer: non-finite score");
  }
  const Sweep s = sweep(pos, neg);
  const std::size_t np = pos.size(), nn = neg.size();
  const double dp = static_cast<double>(np), dn = static_cast<double>(nn);

  EerResult r;
  r.n_pos = np;
  r.n_neg = nn;
  // FAR <= FRR  <=>  fa * np <= fr * nn, compared exactly in integers. The
  // first candidate always has FAR = 1, FRR = 0 and the +inf sentinel has
  // FAR = 0, FRR = 1, so the crossing index k is in [1, size).
  std::size_t k = 1;
  while (s.false_acc[k] * np > s.false_rej[k] * nn) ++k;
  r.crossing_index = k;

  const double far1 = static_cast<double>(s.false_acc[k]) / dn;
  const double frr1 = static_cast<double>(s.false_rej[k]) / dp;
  if (s.false_acc[k] * np == s.false_rej[k] * nn) {
    r.eer = 0.5 * (far1 + frr1);
    r.threshold = std::isfinite(s.thresholds[k]) ? s.thresholds[k]
                                                 : s.thresholds[k - 1];
    return r;
  }
  const double far0 = static_cast<double>(s.false_acc[k - 1]) / dn;
  const double frr0 = static_cast<double>(s.false_rej[k - 1]) / dp;
  const double d0 = far0 - frr0;
  const double d1 = far1 - frr1;
  const double lambda = d0 / (d0 - d1);
  r.eer = far0 + lambda * (far1 - far0);
  const double t0 = s.thresholds[k - 1];
  const double t1 = s.thresholds[k];
  r.threshold = std::isfinite(t1) ? t0 + lambda * (t1 - t0) : t0;
  return r;
}

std::vector<DetPoint> det_points(std::span<const double> pos,
                                 std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw ContractError("det_points: positive and negative lists must be nonempty");
  }
  const Sweep s = sweep(pos, neg);
  std::vector<DetPoint> out;
  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    out.push_back({s.thresholds[k],
                   static_cast<double>(s.false_acc[k]) / static_cast<double>(neg.size()),
                   static_cast<double>(s.false_rej[k]) / static_cast<double>(pos.size())});
  }
  return out;
}

Embedding enrollment_model(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) throw ContractError("enrollment_model: empty list");
  const std::size_t dim = embeddings.front().dim();
  Vector mean(dim, 0.0);
  for (const auto& e : embeddings) {
    if (e.dim() != dim) throw ContractError("enrollment_model: dimension mismatch");
    const double n = e.norm();
    if (!(n > 0.0)) throw DomainError("enrollment_model: zero-norm embedding");
    axpy(1.0 / n, e.values(), mean);
  }
  for (double& v : mean) v /= static_cast<double>(embeddings.size());
  const double n = norm(mean);
  if (!(n > 0.0)) throw DomainError("enrollment_model: inputs cancel to zero");
  for (double& v : mean) v /= n;
  return Embedding(std::move(mean));
}

std::vector<ScoredTrial> score_trials(const EnrollmentMap& enrollments,
                                      const EmbeddingTable& tests,
                                      std::span<const TrialRecord> trials) {
  std::map<std::string, Embedding> models;
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const TrialRecord& t = trials[i];
    auto model = models.find(t.enrol_speaker);
    if (model == models.end()) {
      auto e = enrollments.find(t.enrol_speaker);
      if (e == enrollments.end() || e->second.empty()) {
        throw ContractError("trial " + std::to_string(i + 1) +
                            ": no enrollment for speaker '" + t.enrol_speaker + "'");
      }
      model = models.emplace(t.enrol_speaker, enrollment_model(e->second)).first;
    }
    auto test = tests.find(t.test_utt);
    if (test == tests.end()) {
      throw ContractError("trial " + std::to_string(i + 1) +
                          ": no embedding for test utterance '" + t.test_utt + "'");
    }
    out.push_back({t, cosine(model->second, test->second)});
  }
  return out;
}

SasvEvaluation eval_sasv(std::span<const ScoredTrial> scored) {
  std::vector<double> target, nontarget, spoof;
  for (const auto& s : scored) {
    switch (s.trial.label) {
      case TrialLabel::target: target.push_back(s.score); break;
      case TrialLabel::nontarget: nontarget.push_back(s.score); break;
      case TrialLabel::spoof: spoof.push_back(s.score); break;
    }
  }
  SasvEvaluation ev;
  auto attempt = [&](std::optional<EerResult>& slot, const char* name,
                     std::span<const double> neg, const char* neg_name) {
    if (target.empty()) {
      ev.errors.push_back(std::string(name) + " uncomputable: no target trials");
    } else if (neg.empty()) {
      ev.errors.push_back(std::string(name) + " uncomputable: no " + neg_name +
                          " trials");
    } else {
      slot = compute_eer(target, neg);
    }
  };
  std::vector<double> negatives = nontarget;
  negatives.insert(negatives.end(), spoof.begin(), spoof.end());
  attempt(ev.sasv, "SASV-EER", negatives, "nontarget or spoof");
  attempt(ev.sv, "SV-EER", nontarget, "nontarget");
  attempt(ev.spf, "SPF-EER", spoof, "spoof");
  return ev;
}

}  // namespace sasv
