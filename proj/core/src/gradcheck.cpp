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
#include "sasv/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sasv/error.hpp"
#include "sasv/losses.hpp"
#include "sasv/rng.hpp"

namespace sasv {

namespace {

// Randomized loss instance. Every quantity the losses can differentiate is
// packed into one flat vector:
//   [support embeddings | prototype embeddings | alpha | beta |
//    W_integrated | W_speaker | W_spoof | W_asv]
struct Instance {
  GradcheckLoss loss;
  std::size_t pairs = 0;
  std::size_t dim = 0;
  int num_speakers = 0;
  std::vector<SpeakerLabel> speakers;  // per pair
  std::vector<CmLabel> cm;             // per pair
  AamParams aam;
  Vector packed;

  std::size_t emb_offset(std::size_t flat_index) const { return flat_index * dim; }
  std::size_t alpha_offset() const { return 2 * pairs * dim; }
  std::size_t integrated_offset() const { return alpha_offset() + 2; }
  std::size_t speaker_offset() const {
    return integrated_offset() + static_cast<std::size_t>(num_speakers + 1) * dim;
  }
  std::size_t spoof_offset() const {
    return speaker_offset() + static_cast<std::size_t>(num_speakers) * dim;
  }
  std::size_t asv_offset() const { return spoof_offset() + 2 * dim; }
  std::size_t total() const {
    return asv_offset() + static_cast<std::size_t>(num_speakers) * dim;
  }

  ClassifierWeights head(std::span<const double> x, std::size_t offset,
                         std::size_t rows) const {
    Matrix m(rows, dim);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(offset), rows * dim,
                m.data.begin());
    return ClassifierWeights(std::move(m));
  }

  PairedBatch batch(std::span<const double> x) const {
    PairedBatch b;
    for (std::size_t i = 0; i < 2 * pairs; ++i) {
      const std::size_t pair = i % pairs;
      auto first = x.begin() + static_cast<std::ptrdiff_t>(emb_offset(i));
      LabeledEmbedding e{Embedding(Vector(first, first + static_cast<std::ptrdiff_t>(dim))),
                         speakers[pair], cm[pair]};
      (i < pairs ? b.support : b.prototype).push_back(std::move(e));
    }
    return b;
  }

  SasvLossParams sasv_params(std::span<const double> x) const {
    SasvLossParams p;
    p.cosine = {x[alpha_offset()], x[alpha_offset() + 1]};
    p.aam = aam;
    p.integrated = head(x, integrated_offset(), num_speakers + 1);
    p.speaker = head(x, speaker_offset(), num_speakers);
    p.spoof = head(x, spoof_offset(), 2);
    p.num_speakers = num_speakers;
    return p;
  }

  // Loss value and gradient packed in the same layout as x.
  std::pair<double, Vector> evaluate(std::span<const double> x) const {
    const PairedBatch b = batch(x);
    const SasvLossParams p = sasv_params(x);
    const ClassifierWeights w_asv = head(x, asv_offset(), num_speakers);

    LossOutput out;
    std::vector<std::pair<std::size_t, std::size_t>> head_slots;  // (grad idx, offset)
    switch (loss) {
      case GradcheckLoss::ap:
        out = angular_prototypical_loss(b, p.cosine);
        break;
      case GradcheckLoss::sasv_cont:
        out = sasv_contrastive_loss(b, p.cosine);
        break;
      case GradcheckLoss::aam: {
        std::vector<int> labels;
        for (SpeakerLabel s : b.flat_speakers()) labels.push_back(s.index);
        out = aam_softmax_loss(b.flat_embeddings(), labels, w_asv, aam,
                               num_speakers);
        head_slots = {{0, asv_offset()}};
        break;
      }
      case GradcheckLoss::asv_stage1:
        out = asv_stage1_loss(b, p.cosine, w_asv, aam, num_speakers);
        head_slots = {{0, asv_offset()}};
        break;
      case GradcheckLoss::id1:
      case GradcheckLoss::id2:
      case GradcheckLoss::cont_id1:
      case GradcheckLoss::cont_id2: {
        const LossMode mode =
            loss == GradcheckLoss::id1      ? LossMode::id1
            : loss == GradcheckLoss::id2    ? LossMode::id2
            : loss == GradcheckLoss::cont_id1 ? LossMode::cont_id1
                                              : LossMode::cont_id2;
        out = combined_sasv_loss(b, mode, p);
        head_slots = {{0, integrated_offset()},
                      {1, speaker_offset()},
                      {2, spoof_offset()}};
        break;
      }
    }

    Vector grad(x.size(), 0.0);
    for (std::size_t i = 0; i < out.grad_embeddings.size(); ++i) {
      std::copy(out.grad_embeddings[i].begin(), out.grad_embeddings[i].end(),
                grad.begin() + static_cast<std::ptrdiff_t>(emb_offset(i)));
    }
    grad[alpha_offset()] = out.grad_alpha;
    grad[alpha_offset() + 1] = out.grad_beta;
    for (auto [idx, offset] : head_slots) {
      const Matrix& g = out.grad_weights.at(idx);
      std::copy(g.data.begin(), g.data.end(),
                grad.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    return {out.value, std::move(grad)};
  }
};

bool needs_spoof(GradcheckLoss loss) {
  return loss != GradcheckLoss::ap && loss != GradcheckLoss::aam &&
         loss != GradcheckLoss::asv_stage1;
}

Instance make_instance(GradcheckLoss loss, Rng& rng) {
  Instance inst;
  inst.loss = loss;
  inst.dim = 4 + rng.below(13);          // [4, 16]
  inst.pairs = 2 + rng.below(5);         // [2, 6] pairs -> <= 12 embeddings
  std::size_t spoof_pairs = 0;
  if (needs_spoof(loss)) spoof_pairs = rng.below(inst.pairs);  // keeps >= 1 bona fide
  const std::size_t bona_pairs = inst.pairs - spoof_pairs;
  inst.num_speakers = static_cast<int>(bona_pairs + rng.below(3));
  inst.num_speakers = std::max(inst.num_speakers, 2);

  std::vector<int> ids(static_cast<std::size_t>(inst.num_speakers));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i) + 1;
  rng.shuffle(std::span<int>(ids));
  for (std::size_t i = 0; i < inst.pairs; ++i) {
    if (i < bona_pairs) {
      inst.speakers.push_back({ids[i]});
      inst.cm.push_back(CmLabel::bonafide);
    } else {
      inst.speakers.push_back(
          {1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(inst.num_speakers)))});
      inst.cm.push_back(CmLabel::spoof);
    }
  }

  inst.packed.resize(inst.total());
  for (double& v : inst.packed) v = rng.normal();
  inst.packed[inst.alpha_offset()] = 1.0 + 11.0 * rng.uniform();
  inst.packed[inst.alpha_offset() + 1] = -6.0 + 12.0 * rng.uniform();
  return inst;
}

}  // namespace

std::string_view to_string(GradcheckLoss loss) {
  switch (loss) {
    case GradcheckLoss::ap: return "ap";
    case GradcheckLoss::aam: return "aam";
    case GradcheckLoss::sasv_cont: return "sasv_cont";
    case GradcheckLoss::id1: return "id1";
    case GradcheckLoss::id2: return "id2";
    case GradcheckLoss::cont_id1: return "cont+id1";
    case GradcheckLoss::cont_id2: return "cont+id2";
    case GradcheckLoss::asv_stage1: return "asv_stage1";
  }
  return "?";
}

std::optional<GradcheckLoss> parse_gradcheck_loss(std::string_view name) {
  for (GradcheckLoss l : kAllGradcheckLosses) {
    if (name == to_string(l)) return l;
  }
  return std::nullopt;
}

Vector central_differences(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x, double step) {
  Vector work(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = work[i];
    work[i] = orig + step;
    const double up = f(work);
    work[i] = orig - step;
    const double down = f(work);
    work[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(std::span<const double> analytic,
                      std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

GradcheckReport run_gradcheck(GradcheckLoss loss, int instances,
                              std::uint64_t seed, double tolerance,
                              double step) {
  GradcheckReport report{loss, 0, 0.0, true};
  Rng rng = Rng(seed).split(static_cast<std::uint64_t>(loss));
  for (int t = 0; t < instances; ++t) {
    const Instance inst = make_instance(loss, rng);
    const auto [value, analytic] = inst.evaluate(inst.packed);
    const Vector numeric = central_differences(
        [&inst](std::span<const double> x) { return inst.evaluate(x).first; },
        inst.packed, step);
    const double err = relative_error(analytic, numeric);
    report.max_relative_error = std::max(report.max_relative_error, err);
    ++report.instances;
    if (!(err < tolerance) || !std::isfinite(value)) report.passed = false;
  }
  return report;
}

}  // namespace sasv
