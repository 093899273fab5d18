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
#include "sasv/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "sasv/error.hpp"

namespace sasv {

namespace {

struct UnitVector {
  Vector unit;
  double norm = 0.0;
};

UnitVector normalized(std::span<const double> v, const char* what) {
  UnitVector u;
  u.norm = norm(v);
  if (!(u.norm > 0.0)) {
    throw DomainError(std::string("zero-norm ") + what + " in cosine");
  }
  u.unit.assign(v.begin(), v.end());
  for (double& x : u.unit) x /= u.norm;
  return u;
}

std::vector<UnitVector> normalized_all(std::span<const LabeledEmbedding> items,
                                       const char* what) {
  std::vector<UnitVector> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    out.push_back(normalized(item.embedding.values(), what));
  }
  return out;
}

// d cos(a, b) / da accumulated with weight g: g * (b_hat - cos * a_hat) / |a|.
void accumulate_cos_grad(double g, double cos_ab, const UnitVector& a,
                         const UnitVector& b, std::span<double> grad_a) {
  const double k = g / a.norm;
  for (std::size_t d = 0; d < grad_a.size(); ++d) {
    grad_a[d] += k * (b.unit[d] - cos_ab * a.unit[d]);
  }
}

void check_pairs_aligned(const PairedBatch& b) {
  if (b.support.size() != b.prototype.size()) {
    throw ContractError("support and prototype lists differ in length");
  }
  const std::size_t dim =
      b.support.empty() ? 0 : b.support.front().embedding.dim();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& s = b.support[i];
    const auto& q = b.prototype[i];
    // Spoof pairs may mix speakers (stage-3 spoofs are paired without
    // restriction); bona fide pairs must share the speaker.
    if (s.cm != q.cm ||
        (s.cm == CmLabel::bonafide && s.speaker != q.speaker)) {
      throw ContractError("pair " + std::to_string(i) +
                          ": support and prototype labels disagree");
    }
    if (s.embedding.dim() != dim || q.embedding.dim() != dim) {
      throw ContractError("pair " + std::to_string(i) +
                          ": embedding dimension mismatch");
    }
  }
}

void check_distinct_bonafide_speakers(const PairedBatch& b) {
  std::set<int> seen;
  for (const auto& s : b.support) {
    if (s.cm != CmLabel::bonafide) continue;
    if (!seen.insert(s.speaker.index).second) {
      throw ContractError("duplicate bona fide speaker " +
                          std::to_string(s.speaker.index) + " in batch");
    }
  }
}

// Shared core of the two contrastive losses: each listed anchor support is
// scored against every prototype, its own prototype being the positive.
LossOutput contrastive_core(const PairedBatch& b, const AffineCosineParams& p,
                            std::span<const std::size_t> anchors) {
  const std::size_t n = b.size();
  const std::size_t dim = b.support.front().embedding.dim();
  const auto su = normalized_all(b.support, "support embedding");
  const auto pu = normalized_all(b.prototype, "prototype embedding");

  LossOutput out;
  out.grad_embeddings.assign(2 * n, Vector(dim, 0.0));
  const double inv_anchors = 1.0 / static_cast<double>(anchors.size());

  Vector cos_row(n), z(n);
  for (std::size_t i : anchors) {
    for (std::size_t j = 0; j < n; ++j) {
      cos_row[j] = dot(su[i].unit, pu[j].unit);
      z[j] = p.alpha * cos_row[j] + p.beta;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(z[j] - mx);
    out.value += (mx - z[i]) + std::log(sum);

    for (std::size_t j = 0; j < n; ++j) {
      const double prob = std::exp(z[j] - mx) / sum;
      const double g = (prob - (j == i ? 1.0 : 0.0)) * inv_anchors;
      out.grad_alpha += g * cos_row[j];
      out.grad_beta += g;
      const double dc = p.alpha * g;
      accumulate_cos_grad(dc, cos_row[j], su[i], pu[j], out.grad_embeddings[i]);
      accumulate_cos_grad(dc, cos_row[j], pu[j], su[i],
                          out.grad_embeddings[n + j]);
    }
  }
  out.value *= inv_anchors;
  return out;
}

int cm_class(CmLabel cm) { return cm == CmLabel::bonafide ? 1 : 2; }

}  // namespace

std::size_t PairedBatch::num_bonafide() const {
  return static_cast<std::size_t>(
      std::count_if(support.begin(), support.end(), [](const auto& s) {
        return s.cm == CmLabel::bonafide;
      }));
}

std::vector<Embedding> PairedBatch::flat_embeddings() const {
  std::vector<Embedding> out;
  out.reserve(2 * size());
  for (const auto& s : support) out.push_back(s.embedding);
  for (const auto& q : prototype) out.push_back(q.embedding);
  return out;
}

std::vector<SpeakerLabel> PairedBatch::flat_speakers() const {
  std::vector<SpeakerLabel> out;
  out.reserve(2 * size());
  for (const auto& s : support) out.push_back(s.speaker);
  for (const auto& q : prototype) out.push_back(q.speaker);
  return out;
}

std::vector<CmLabel> PairedBatch::flat_cm() const {
  std::vector<CmLabel> out;
  out.reserve(2 * size());
  for (const auto& s : support) out.push_back(s.cm);
  for (const auto& q : prototype) out.push_back(q.cm);
  return out;
}

LossOutput& LossOutput::operator+=(const LossOutput& other) {
  value += other.value;
  grad_alpha += other.grad_alpha;
  grad_beta += other.grad_beta;
  if (grad_embeddings.empty()) {
    grad_embeddings = other.grad_embeddings;
  } else if (!other.grad_embeddings.empty()) {
    if (grad_embeddings.size() != other.grad_embeddings.size()) {
      throw ContractError("cannot sum losses over different embedding sets");
    }
    for (std::size_t i = 0; i < grad_embeddings.size(); ++i) {
      axpy(1.0, other.grad_embeddings[i], grad_embeddings[i]);
    }
  }
  for (const auto& g : other.grad_weights) grad_weights.push_back(g);
  return *this;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw ContractError("cosine: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DomainError("cosine of a zero-norm embedding");
  }
  const double c = dot(a.values(), b.values()) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

double affine_cosine(const Embedding& a, const Embedding& b,
                     const AffineCosineParams& p) {
  return p.alpha * cosine(a, b) + p.beta;
}

MarginLogit additive_angular_margin(double cos_theta, double margin) {
  if (margin == 0.0) return {cos_theta, 1.0};
  const double cos_m = std::cos(margin);
  const double sin_m = std::sin(margin);
  if (cos_theta > -cos_m) {
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double slope =
        sin_theta > 0.0 ? cos_m + cos_theta * sin_m / sin_theta : cos_m;
    return {cos_theta * cos_m - sin_theta * sin_m, slope};
  }
  return {cos_theta - margin * sin_m, 1.0};
}

LossOutput angular_prototypical_loss(const PairedBatch& batch,
                                     const AffineCosineParams& p) {
  if (batch.size() == 0) throw ContractError("angular prototypical: empty batch");
  check_pairs_aligned(batch);
  if (batch.num_bonafide() != batch.size()) {
    throw ContractError("angular prototypical: batch contains spoof pairs");
  }
  check_distinct_bonafide_speakers(batch);
  std::vector<std::size_t> anchors(batch.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = i;
  return contrastive_core(batch, p, anchors);
}

LossOutput sasv_contrastive_loss(const PairedBatch& batch,
                                 const AffineCosineParams& p) {
  check_pairs_aligned(batch);
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.support[i].cm == CmLabel::bonafide) anchors.push_back(i);
  }
  if (anchors.empty()) {
    throw ContractError("SASV contrastive: batch has no bona fide pair");
  }
  check_distinct_bonafide_speakers(batch);
  return contrastive_core(batch, p, anchors);
}

LossOutput aam_softmax_loss(std::span<const Embedding> embeddings,
                            std::span<const int> labels,
                            const ClassifierWeights& w, const AamParams& p,
                            int num_classes) {
  if (embeddings.empty()) throw ContractError("AAM softmax: no items");
  if (embeddings.size() != labels.size()) {
    throw ContractError("AAM softmax: embeddings and labels differ in length");
  }
  if (num_classes < 1 || w.num_classes() != static_cast<std::size_t>(num_classes)) {
    throw ContractError("AAM softmax: weight matrix has " +
                        std::to_string(w.num_classes()) + " rows, expected " +
                        std::to_string(num_classes));
  }
  if (!(p.scale > 0.0) || !(p.margin >= 0.0) ||
      !(p.margin < std::numbers::pi / 2)) {
    throw ContractError("AAM softmax: require s > 0 and 0 <= m < pi/2");
  }
  const std::size_t dim = w.dim();
  const auto classes = static_cast<std::size_t>(num_classes);

  std::vector<UnitVector> wu;
  wu.reserve(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    wu.push_back(normalized(w.weights.row(j), "classifier weight row"));
  }

  LossOutput out;
  out.grad_embeddings.assign(embeddings.size(), Vector(dim, 0.0));
  out.grad_weights.assign(1, Matrix(classes, dim));
  Matrix& gw = out.grad_weights.front();
  const double inv_n = 1.0 / static_cast<double>(embeddings.size());

  Vector cos_j(classes), logits(classes);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const int label = labels[i];
    if (label < 1 || label > num_classes) {
      throw ContractError("AAM softmax: label " + std::to_string(label) +
                          " outside [1.." + std::to_string(num_classes) + "]");
    }
    if (embeddings[i].dim() != dim) {
      throw ContractError("AAM softmax: embedding/weight dimension mismatch");
    }
    const auto target = static_cast<std::size_t>(label - 1);
    const UnitVector x = normalized(embeddings[i].values(), "embedding");

    for (std::size_t j = 0; j < classes; ++j) {
      cos_j[j] = dot(x.unit, wu[j].unit);
      logits[j] = p.scale * cos_j[j];
    }
    const MarginLogit margin = additive_angular_margin(cos_j[target], p.margin);
    logits[target] = p.scale * margin.value;

    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(logits[j] - mx);
    out.value += (mx - logits[target]) + std::log(sum);

    for (std::size_t j = 0; j < classes; ++j) {
      const double prob = std::exp(logits[j] - mx) / sum;
      const double g_logit = (prob - (j == target ? 1.0 : 0.0)) * inv_n;
      const double dc =
          g_logit * p.scale * (j == target ? margin.slope : 1.0);
      accumulate_cos_grad(dc, cos_j[j], x, wu[j], out.grad_embeddings[i]);
      accumulate_cos_grad(dc, cos_j[j], wu[j], x, gw.row(j));
    }
  }
  out.value *= inv_n;
  return out;
}

LossOutput asv_stage1_loss(const PairedBatch& batch,
                           const AffineCosineParams& p_cos,
                           const ClassifierWeights& w, const AamParams& p_aam,
                           int num_speakers) {
  LossOutput out = angular_prototypical_loss(batch, p_cos);
  const auto embeddings = batch.flat_embeddings();
  std::vector<int> labels;
  for (SpeakerLabel s : batch.flat_speakers()) labels.push_back(s.index);
  out += aam_softmax_loss(embeddings, labels, w, p_aam, num_speakers);
  return out;
}

LossOutput integrated_id_loss(std::span<const Embedding> embeddings,
                              std::span<const SasvClassLabel> labels,
                              const ClassifierWeights& w, const AamParams& p,
                              int num_speakers) {
  std::vector<int> raw;
  raw.reserve(labels.size());
  for (SasvClassLabel l : labels) raw.push_back(l.index);
  return aam_softmax_loss(embeddings, raw, w, p, num_speakers + 1);
}

LossOutput multitask_id_loss(std::span<const Embedding> embeddings,
                             std::span<const SpeakerLabel> speakers,
                             std::span<const CmLabel> cm,
                             const ClassifierWeights& w_sv,
                             const ClassifierWeights& w_spf,
                             const AamParams& p, int num_speakers) {
  if (speakers.size() != embeddings.size() || cm.size() != embeddings.size()) {
    throw ContractError("multi-task id: label lists differ in length");
  }
  std::vector<int> speaker_labels, cm_labels;
  for (SpeakerLabel s : speakers) speaker_labels.push_back(s.index);
  for (CmLabel c : cm) cm_labels.push_back(cm_class(c));
  LossOutput out =
      aam_softmax_loss(embeddings, speaker_labels, w_sv, p, num_speakers);
  out += aam_softmax_loss(embeddings, cm_labels, w_spf, p, 2);
  return out;
}

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::cont: return "cont";
    case LossMode::id1: return "id1";
    case LossMode::id2: return "id2";
    case LossMode::cont_id1: return "cont+id1";
    case LossMode::cont_id2: return "cont+id2";
  }
  return "?";
}

std::optional<LossMode> parse_loss_mode(std::string_view token) {
  for (LossMode m : {LossMode::cont, LossMode::id1, LossMode::id2,
                     LossMode::cont_id1, LossMode::cont_id2}) {
    if (token == to_string(m)) return m;
  }
  return std::nullopt;
}

bool uses_contrastive(LossMode mode) {
  return mode == LossMode::cont || mode == LossMode::cont_id1 ||
         mode == LossMode::cont_id2;
}
bool uses_integrated(LossMode mode) {
  return mode == LossMode::id1 || mode == LossMode::cont_id1;
}
bool uses_multitask(LossMode mode) {
  return mode == LossMode::id2 || mode == LossMode::cont_id2;
}

LossOutput combined_sasv_loss(const PairedBatch& batch, LossMode mode,
                              const SasvLossParams& params) {
  check_pairs_aligned(batch);
  if (batch.size() == 0) throw ContractError("combined loss: empty batch");
  const std::size_t dim = batch.support.front().embedding.dim();

  LossOutput out;
  out.grad_embeddings.assign(2 * batch.size(), Vector(dim, 0.0));
  out.grad_weights = {
      Matrix(params.integrated.weights.rows, params.integrated.weights.cols),
      Matrix(params.speaker.weights.rows, params.speaker.weights.cols),
      Matrix(params.spoof.weights.rows, params.spoof.weights.cols)};

  auto add = [&out](const LossOutput& term) {
    out.value += term.value;
    out.grad_alpha += term.grad_alpha;
    out.grad_beta += term.grad_beta;
    for (std::size_t i = 0; i < out.grad_embeddings.size(); ++i) {
      axpy(1.0, term.grad_embeddings[i], out.grad_embeddings[i]);
    }
  };

  if (uses_contrastive(mode)) add(sasv_contrastive_loss(batch, params.cosine));

  if (uses_integrated(mode) || uses_multitask(mode)) {
    const auto embeddings = batch.flat_embeddings();
    const auto speakers = batch.flat_speakers();
    const auto cm = batch.flat_cm();
    if (uses_integrated(mode)) {
      std::vector<SasvClassLabel> labels;
      for (std::size_t i = 0; i < speakers.size(); ++i) {
        labels.push_back(
            SasvClassLabel::of(speakers[i], cm[i], params.num_speakers));
      }
      LossOutput term = integrated_id_loss(embeddings, labels, params.integrated,
                                           params.aam, params.num_speakers);
      add(term);
      out.grad_weights[0] = std::move(term.grad_weights[0]);
    } else {
      LossOutput term =
          multitask_id_loss(embeddings, speakers, cm, params.speaker,
                            params.spoof, params.aam, params.num_speakers);
      add(term);
      out.grad_weights[1] = std::move(term.grad_weights[0]);
      out.grad_weights[2] = std::move(term.grad_weights[1]);
    }
  }
  return out;
}

}  // namespace sasv
