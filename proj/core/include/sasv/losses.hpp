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
#ifndef SASV_LOSSES_HPP_
#define SASV_LOSSES_HPP_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/linalg.hpp"

namespace sasv {

// Affine cosine similarity f(a, b) = alpha * cos(a, b) + beta.
struct AffineCosineParams {
  double alpha = 10.0;
  double beta = -5.0;
};

inline constexpr double kAlphaMin = 1e-6;

struct AamParams {
  double scale = 30.0;   // s
  double margin = 0.2;   // m, radians, in [0, pi/2)
};

// One weight row per class; row j (0-based) belongs to class j + 1.
struct ClassifierWeights {
  Matrix weights;

  ClassifierWeights() = default;
  explicit ClassifierWeights(Matrix w) : weights(std::move(w)) {}
  std::size_t num_classes() const { return weights.rows; }
  std::size_t dim() const { return weights.cols; }
};

struct LabeledEmbedding {
  Embedding embedding;
  SpeakerLabel speaker;
  CmLabel cm = CmLabel::bonafide;
};

// support[i] and prototype[i] carry the same CM label; bona fide pairs also
// share the speaker, spoof pairs need not. Embeddings are flattened as support[0..N) then
// prototype[0..N) wherever a loss reports per-embedding gradients.
struct PairedBatch {
  std::vector<LabeledEmbedding> support;
  std::vector<LabeledEmbedding> prototype;

  std::size_t size() const { return support.size(); }
  std::size_t num_bonafide() const;
  std::vector<Embedding> flat_embeddings() const;
  std::vector<SpeakerLabel> flat_speakers() const;
  std::vector<CmLabel> flat_cm() const;
};

struct LossOutput {
  double value = 0.0;
  std::vector<Vector> grad_embeddings;
  double grad_alpha = 0.0;
  double grad_beta = 0.0;
  // One entry per classifier head argument, in argument order.
  std::vector<Matrix> grad_weights;

  LossOutput& operator+=(const LossOutput& other);
};

/// Cosine of the angle between a and b. Throws DomainError on a zero-norm
/// input and ContractError on a dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);
double affine_cosine(const Embedding& a, const Embedding& b,
                     const AffineCosineParams& p);

/// Target-class logit after the additive angular margin, cos(theta + m),
/// together with its derivative with respect to cos(theta). Past
/// theta + m = pi the logit switches to cos(theta) - m * sin(m), which keeps
/// it monotone in theta.
struct MarginLogit {
  double value;
  double slope;
};
MarginLogit additive_angular_margin(double cos_theta, double margin);

/// Angular prototypical loss. All pairs bona fide with distinct speakers.
LossOutput angular_prototypical_loss(const PairedBatch& batch,
                                     const AffineCosineParams& p);

/// AAM softmax over num_classes classes; labels are 1-based.
/// grad_weights = {dL/dW}.
LossOutput aam_softmax_loss(std::span<const Embedding> embeddings,
                            std::span<const int> labels,
                            const ClassifierWeights& w, const AamParams& p,
                            int num_classes);

/// Stage-1 ASV loss: angular prototypical + AAM over all 2N embeddings.
LossOutput asv_stage1_loss(const PairedBatch& batch,
                           const AffineCosineParams& p_cos,
                           const ClassifierWeights& w, const AamParams& p_aam,
                           int num_speakers);

/// SASV contrastive loss. Bona-fide supports are the only anchors; the
/// softmax denominator runs over every prototype, bona fide and spoof.
LossOutput sasv_contrastive_loss(const PairedBatch& batch,
                                 const AffineCosineParams& p);

/// (num_speakers + 1)-class identification where spoofs form the extra class.
LossOutput integrated_id_loss(std::span<const Embedding> embeddings,
                              std::span<const SasvClassLabel> labels,
                              const ClassifierWeights& w, const AamParams& p,
                              int num_speakers);

/// Speaker head (num_speakers classes) plus binary CM head (bona fide = 1,
/// spoof = 2). grad_weights = {dL/dW_sv, dL/dW_spf}.
LossOutput multitask_id_loss(std::span<const Embedding> embeddings,
                             std::span<const SpeakerLabel> speakers,
                             std::span<const CmLabel> cm,
                             const ClassifierWeights& w_sv,
                             const ClassifierWeights& w_spf,
                             const AamParams& p, int num_speakers);

enum class LossMode { cont, id1, id2, cont_id1, cont_id2 };

std::string_view to_string(LossMode mode);
std::optional<LossMode> parse_loss_mode(std::string_view token);
bool uses_contrastive(LossMode mode);
bool uses_integrated(LossMode mode);
bool uses_multitask(LossMode mode);

struct SasvLossParams {
  AffineCosineParams cosine;
  AamParams aam;
  ClassifierWeights integrated;  // num_speakers + 1 rows (id1)
  ClassifierWeights speaker;     // num_speakers rows (id2 speaker head)
  ClassifierWeights spoof;       // 2 rows (id2 CM head)
  int num_speakers = 0;
};

/// Equal-weighted sum of the terms selected by mode. Identification terms
/// consume every embedding of the batch. grad_weights is always
/// {integrated, speaker, spoof}; heads the mode does not use get zero
/// gradients of their own shape.
LossOutput combined_sasv_loss(const PairedBatch& batch, LossMode mode,
                              const SasvLossParams& params);

}  // namespace sasv

#endif  // SASV_LOSSES_HPP_
