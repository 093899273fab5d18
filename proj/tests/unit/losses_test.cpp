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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "sasv/error.hpp"

namespace sasv {
namespace {

constexpr double kLn1pInvE = 0.31326168751822286;   // ln(1 + 1/e)
constexpr double kLn1p2InvE = 0.55144471393205107;  // ln(1 + 2/e)

Embedding unit(std::size_t dim, std::size_t axis, double scale = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[axis] = scale;
  return Embedding(std::move(v));
}

ClassifierWeights identity_head(std::size_t classes, std::size_t dim) {
  Matrix m(classes, dim);
  for (std::size_t i = 0; i < classes; ++i) m(i, i) = 1.0;
  return ClassifierWeights(std::move(m));
}

PairedBatch scaled(const PairedBatch& b, Rng& rng) {
  PairedBatch out = b;
  auto rescale = [&rng](LabeledEmbedding& e) {
    const double lambda = std::exp(4.0 * rng.uniform() - 2.0);
    std::vector<double> v(e.embedding.values().begin(), e.embedding.values().end());
    for (double& x : v) x *= lambda;
    e.embedding = Embedding(std::move(v));
  };
  for (auto& e : out.support) rescale(e);
  for (auto& e : out.prototype) rescale(e);
  return out;
}

SasvLossParams random_params(Rng& rng, std::size_t dim, int num_speakers) {
  SasvLossParams p;
  p.cosine = {1.0 + 9.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform()};
  p.aam = {5.0 + 25.0 * rng.uniform(), 0.4 * rng.uniform()};
  p.integrated = ClassifierWeights(
      oracle::random_matrix(rng, static_cast<std::size_t>(num_speakers) + 1, dim));
  p.speaker = ClassifierWeights(
      oracle::random_matrix(rng, static_cast<std::size_t>(num_speakers), dim));
  p.spoof = ClassifierWeights(oracle::random_matrix(rng, 2, dim));
  p.num_speakers = num_speakers;
  return p;
}

// --- cosine family -------------------------------------------------------

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(Embedding({1, 0}), Embedding({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine(Embedding({1, 0}), Embedding({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(cosine(Embedding({2, 0}), Embedding({-3, 0})), -1.0);
}

TEST(Cosine, ZeroNormIsDomainError) {
  EXPECT_THROW(cosine(Embedding({0, 0}), Embedding({1, 0})), DomainError);
}

TEST(AffineCosine, Examples) {
  const Embedding a({1, 0}), b({0, 1});
  EXPECT_DOUBLE_EQ(affine_cosine(a, a, {1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(affine_cosine(a, a, {10.0, -5.0}), 5.0);
  EXPECT_DOUBLE_EQ(affine_cosine(a, b, {10.0, -5.0}), -5.0);
}

TEST(AdditiveAngularMargin, ZeroMarginIsIdentity) {
  for (double c = -1.0; c <= 1.0; c += 0.125) {
    EXPECT_DOUBLE_EQ(additive_angular_margin(c, 0.0).value, c);
    EXPECT_DOUBLE_EQ(additive_angular_margin(c, 0.0).slope, 1.0);
  }
}

TEST(AdditiveAngularMargin, MatchesCosOfShiftedAngleAwayFromSaturation) {
  const double m = 0.2;
  for (double theta = 0.05; theta + m < std::numbers::pi - 0.01; theta += 0.1) {
    EXPECT_NEAR(additive_angular_margin(std::cos(theta), m).value,
                std::cos(theta + m), 1e-14);
  }
}

TEST(AdditiveAngularMargin, MonotoneAcrossWholeRange) {
  for (double m : {0.1, 0.2, 0.5, 1.2}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20000; ++i) {
      const double c = -1.0 + 2.0 * i / 20000.0;
      const auto r = additive_angular_margin(c, m);
      ASSERT_GT(r.value, prev) << "m=" << m << " c=" << c;
      ASSERT_GT(r.slope, 0.0);
      prev = r.value;
    }
  }
}

TEST(AdditiveAngularMargin, SlopeMatchesFiniteDifference) {
  for (double m : {0.2, 0.7}) {
    for (double c = -0.99; c < 0.99; c += 0.0173) {
      const double h = 1e-7;
      const double fd = (additive_angular_margin(c + h, m).value -
                         additive_angular_margin(c - h, m).value) / (2 * h);
      EXPECT_NEAR(additive_angular_margin(c, m).slope, fd, 1e-6) << c;
    }
  }
}

// --- angular prototypical ------------------------------------------------

TEST(AngularPrototypical, SingleSpeakerIsZero) {
  Rng rng(1);
  const PairedBatch b = oracle::random_batch(rng, 5, 1, 0, 1);
  EXPECT_DOUBLE_EQ(angular_prototypical_loss(b, {10.0, -5.0}).value, 0.0);
}

TEST(AngularPrototypical, TwoOrthogonalSpeakers) {
  PairedBatch b;
  b.support = {{unit(2, 0), {1}}, {unit(2, 1), {2}}};
  b.prototype = b.support;
  EXPECT_NEAR(angular_prototypical_loss(b, {1.0, 0.0}).value, kLn1pInvE, 1e-15);
}

TEST(AngularPrototypical, Errors) {
  EXPECT_THROW(angular_prototypical_loss(PairedBatch{}, {}), ContractError);
  PairedBatch b;
  b.support = {{unit(2, 0), {1}}, {unit(2, 1), {1}}};
  b.prototype = b.support;
  EXPECT_THROW(angular_prototypical_loss(b, {}), ContractError);
}

TEST(AngularPrototypical, MatchesDirectEvaluation) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const PairedBatch b = oracle::random_batch(rng, 6, n, 0, n);
    const AffineCosineParams p{1.0 + 10.0 * rng.uniform(), rng.normal()};
    std::vector<std::vector<double>> logits;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row;
      for (int j = 0; j < n; ++j) {
        row.push_back(p.alpha * oracle::plain_cosine(
                                    b.support[static_cast<std::size_t>(i)].embedding.values(),
                                    b.prototype[static_cast<std::size_t>(j)].embedding.values()) +
                      p.beta);
      }
      logits.push_back(row);
      labels.push_back(i);
    }
    EXPECT_NEAR(angular_prototypical_loss(b, p).value,
                oracle::softmax_cross_entropy(logits, labels), 1e-12);
  }
}

// --- AAM softmax ---------------------------------------------------------

TEST(AamSoftmax, SingleItemExample) {
  const std::vector<Embedding> e{unit(2, 0)};
  const std::vector<int> labels{1};
  const auto out = aam_softmax_loss(e, labels, identity_head(2, 2), {1.0, 0.0}, 2);
  EXPECT_NEAR(out.value, kLn1pInvE, 1e-15);
}

TEST(AamSoftmax, ZeroMarginIsScaledCosineCrossEntropy) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t dim = 2 + rng.below(10);
    const int classes = 2 + static_cast<int>(rng.below(8));
    const std::size_t items = 1 + rng.below(10);
    const double s = 1.0 + 40.0 * rng.uniform();
    const Matrix w = oracle::random_matrix(rng, static_cast<std::size_t>(classes), dim);
    std::vector<Embedding> e;
    std::vector<int> labels;
    std::vector<std::vector<double>> logits;
    std::vector<int> zero_based;
    for (std::size_t i = 0; i < items; ++i) {
      e.push_back(oracle::random_embedding(rng, dim));
      labels.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
      zero_based.push_back(labels.back() - 1);
      std::vector<double> row;
      for (int j = 0; j < classes; ++j) {
        row.push_back(s * oracle::plain_cosine(e.back().values(),
                                               w.row(static_cast<std::size_t>(j))));
      }
      logits.push_back(row);
    }
    EXPECT_NEAR(aam_softmax_loss(e, labels, ClassifierWeights(w), {s, 0.0}, classes).value,
                oracle::softmax_cross_entropy(logits, zero_based), 1e-12);
  }
}

TEST(AamSoftmax, Errors) {
  const std::vector<Embedding> e{unit(2, 0)};
  const std::vector<int> bad{3};
  EXPECT_THROW(aam_softmax_loss(e, bad, identity_head(2, 2), {}, 2), ContractError);
  const std::vector<int> ok{1};
  EXPECT_THROW(aam_softmax_loss(e, ok, identity_head(2, 2), {1.0, 1.6}, 2),
               ContractError);
  EXPECT_THROW(aam_softmax_loss(e, ok, identity_head(2, 2), {0.0, 0.2}, 2),
               ContractError);
  EXPECT_THROW(aam_softmax_loss(e, ok, identity_head(3, 2), {}, 2), ContractError);
}

// --- stage 1 sum ---------------------------------------------------------

TEST(AsvStage1, IsSumOfComponents) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int c = n + static_cast<int>(rng.below(4));
    const PairedBatch b = oracle::random_batch(rng, 5, n, 0, n);
    const ClassifierWeights w(oracle::random_matrix(rng, static_cast<std::size_t>(c), 5));
    const AffineCosineParams pc{4.0, -1.0};
    const AamParams pa{20.0, 0.2};
    const auto total = asv_stage1_loss(b, pc, w, pa, c);
    const auto ap = angular_prototypical_loss(b, pc);
    std::vector<int> labels;
    for (const auto& s : b.flat_speakers()) labels.push_back(s.index);
    const auto aam = aam_softmax_loss(b.flat_embeddings(), labels, w, pa, c);
    EXPECT_NEAR(total.value, ap.value + aam.value, 1e-14);
    for (std::size_t i = 0; i < total.grad_embeddings.size(); ++i) {
      for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_NEAR(total.grad_embeddings[i][k],
                    ap.grad_embeddings[i][k] + aam.grad_embeddings[i][k], 1e-14);
      }
    }
    if (n == 1) EXPECT_NEAR(total.value, aam.value, 1e-15);
  }
}

// --- SASV contrastive ----------------------------------------------------

TEST(SasvContrastive, SpoofFreeReducesToPrototypical) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const PairedBatch b = oracle::random_batch(rng, 7, n, 0, n);
    const AffineCosineParams p{1.0 + 10.0 * rng.uniform(), rng.normal()};
    EXPECT_NEAR(sasv_contrastive_loss(b, p).value,
                angular_prototypical_loss(b, p).value, 1e-14);
  }
}

TEST(SasvContrastive, OneBonaFideOneSpoofPair) {
  // The only non-match prototype is orthogonal to the anchor: two terms.
  PairedBatch b;
  b.support = {{unit(3, 0), {1}}, {unit(3, 1), {1}, CmLabel::spoof}};
  b.prototype = b.support;
  EXPECT_NEAR(sasv_contrastive_loss(b, {1.0, 0.0}).value, kLn1pInvE, 1e-15);
}

TEST(SasvContrastive, TwoOrthogonalSpoofPrototypes) {
  // Denominator e^1 + e^0 + e^0.
  PairedBatch b;
  b.support = {{unit(3, 0), {1}},
               {unit(3, 1), {1}, CmLabel::spoof},
               {unit(3, 2), {2}, CmLabel::spoof}};
  b.prototype = b.support;
  EXPECT_NEAR(sasv_contrastive_loss(b, {1.0, 0.0}).value, kLn1p2InvE, 1e-15);
}

TEST(SasvContrastive, NoBonaFideIsContractError) {
  PairedBatch b;
  b.support = {{unit(2, 0), {1}, CmLabel::spoof}};
  b.prototype = b.support;
  EXPECT_THROW(sasv_contrastive_loss(b, {}), ContractError);
}

TEST(SasvContrastive, SpoofRepulsionIsMonotone) {
  // Rotate one spoof prototype towards the only bona fide anchor. With more
  // anchors the same prototype also sits in their denominators.
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    PairedBatch b = oracle::random_batch(rng, 6, 1, 3, 1);
    const auto anchor = b.support[0].embedding.values();
    const Embedding start = b.prototype[3].embedding;
    double prev = -1.0;
    double prev_cos = -2.0;
    for (int k = 0; k <= 10; ++k) {
      const double w = k / 10.0;
      std::vector<double> v(6);
      for (std::size_t i = 0; i < 6; ++i) {
        v[i] = (1.0 - w) * start[i] / start.norm() + w * anchor[i] / norm(anchor);
      }
      b.prototype[3].embedding = Embedding(v);
      const double c = cosine(b.support[0].embedding, b.prototype[3].embedding);
      const double value = sasv_contrastive_loss(b, {5.0, -1.0}).value;
      if (c > prev_cos) {
        EXPECT_GT(value, prev) << "t=" << t << " k=" << k;
      }
      prev = value;
      prev_cos = c;
    }
  }
}

// --- identification losses -----------------------------------------------

TEST(IntegratedId, SpoofItemExample) {
  const std::vector<Embedding> e{unit(3, 2)};
  const std::vector<SasvClassLabel> labels{{3}};
  EXPECT_NEAR(integrated_id_loss(e, labels, identity_head(3, 3), {1.0, 0.0}, 2).value,
              kLn1p2InvE, 1e-15);
}

TEST(IntegratedId, EqualsAamAtOneExtraClass) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const int c = 2 + static_cast<int>(rng.below(6));
    const std::size_t dim = 3 + rng.below(6);
    const ClassifierWeights w(oracle::random_matrix(rng, static_cast<std::size_t>(c) + 1, dim));
    std::vector<Embedding> e;
    std::vector<SasvClassLabel> labels;
    std::vector<int> raw;
    for (int i = 0; i < 8; ++i) {
      e.push_back(oracle::random_embedding(rng, dim));
      const CmLabel cm = rng.below(3) == 0 ? CmLabel::spoof : CmLabel::bonafide;
      const SpeakerLabel spk{1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c)))};
      labels.push_back(SasvClassLabel::of(spk, cm, c));
      raw.push_back(labels.back().index);
    }
    const AamParams p{30.0, 0.3 * rng.uniform()};
    EXPECT_NEAR(integrated_id_loss(e, labels, w, p, c).value,
                aam_softmax_loss(e, raw, w, p, c + 1).value, 1e-12);
  }
}

TEST(MultitaskId, IsSumOfTwoHeads) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const int c = 2 + static_cast<int>(rng.below(5));
    const ClassifierWeights wsv(oracle::random_matrix(rng, static_cast<std::size_t>(c), 4));
    const ClassifierWeights wspf(oracle::random_matrix(rng, 2, 4));
    std::vector<Embedding> e;
    std::vector<SpeakerLabel> spk;
    std::vector<CmLabel> cm;
    std::vector<int> spk_raw, cm_raw;
    for (int i = 0; i < 6; ++i) {
      e.push_back(oracle::random_embedding(rng, 4));
      spk.push_back({1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c)))});
      cm.push_back(rng.below(2) ? CmLabel::spoof : CmLabel::bonafide);
      spk_raw.push_back(spk.back().index);
      cm_raw.push_back(cm.back() == CmLabel::bonafide ? 1 : 2);
    }
    const AamParams p{30.0, t % 2 ? 0.0 : 0.2};
    const double sum = aam_softmax_loss(e, spk_raw, wsv, p, c).value +
                       aam_softmax_loss(e, cm_raw, wspf, p, 2).value;
    EXPECT_NEAR(multitask_id_loss(e, spk, cm, wsv, wspf, p, c).value, sum, 1e-14);
  }
}

// --- combined modes ------------------------------------------------------

TEST(Combined, ContIsExactlyContrastive) {
  Rng rng(9);
  const PairedBatch b = oracle::random_batch(rng, 6, 4, 3, 5);
  const SasvLossParams p = random_params(rng, 6, 5);
  EXPECT_EQ(combined_sasv_loss(b, LossMode::cont, p).value,
            sasv_contrastive_loss(b, p.cosine).value);
}

TEST(Combined, ModesAreSumsOfIndependentTerms) {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const int c = 4 + static_cast<int>(rng.below(4));
    const int nb = 1 + static_cast<int>(rng.below(4));
    const int ns = static_cast<int>(rng.below(4));
    const PairedBatch b = oracle::random_batch(rng, 5, nb, ns, c);
    const SasvLossParams p = random_params(rng, 5, c);
    const auto emb = b.flat_embeddings();
    const auto spk = b.flat_speakers();
    const auto cm = b.flat_cm();
    std::vector<SasvClassLabel> cls;
    for (std::size_t i = 0; i < spk.size(); ++i) cls.push_back(SasvClassLabel::of(spk[i], cm[i], c));

    const double cont = sasv_contrastive_loss(b, p.cosine).value;
    const double id1 = integrated_id_loss(emb, cls, p.integrated, p.aam, c).value;
    const double id2 = multitask_id_loss(emb, spk, cm, p.speaker, p.spoof, p.aam, c).value;
    EXPECT_NEAR(combined_sasv_loss(b, LossMode::id1, p).value, id1, 1e-14);
    EXPECT_NEAR(combined_sasv_loss(b, LossMode::id2, p).value, id2, 1e-14);
    EXPECT_NEAR(combined_sasv_loss(b, LossMode::cont_id1, p).value, cont + id1, 1e-14);
    EXPECT_NEAR(combined_sasv_loss(b, LossMode::cont_id2, p).value, cont + id2, 1e-14);
  }
}

TEST(Combined, Id2WithoutSpoofsUsesAllBonaFideBinaryHead) {
  Rng rng(11);
  const PairedBatch b = oracle::random_batch(rng, 4, 3, 0, 3);
  const SasvLossParams p = random_params(rng, 4, 3);
  std::vector<int> spk, ones;
  for (const auto& s : b.flat_speakers()) {
    spk.push_back(s.index);
    ones.push_back(1);
  }
  const auto emb = b.flat_embeddings();
  const double expected = aam_softmax_loss(emb, spk, p.speaker, p.aam, 3).value +
                          aam_softmax_loss(emb, ones, p.spoof, p.aam, 2).value;
  EXPECT_NEAR(combined_sasv_loss(b, LossMode::id2, p).value, expected, 1e-14);
}

TEST(Combined, ModeNamesRoundTrip) {
  for (LossMode m : {LossMode::cont, LossMode::id1, LossMode::id2,
                     LossMode::cont_id1, LossMode::cont_id2}) {
    EXPECT_EQ(parse_loss_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_loss_mode("cont+id3").has_value());
}

// --- shared properties ---------------------------------------------------

using BatchLoss = std::function<double(const PairedBatch&)>;

std::vector<std::pair<const char*, BatchLoss>> all_losses(const SasvLossParams& p) {
  const auto aam_flat = [p](const PairedBatch& b) {
    std::vector<int> labels;
    for (const auto& s : b.flat_speakers()) labels.push_back(s.index);
    return aam_softmax_loss(b.flat_embeddings(), labels, p.speaker, p.aam,
                            p.num_speakers).value;
  };
  std::vector<std::pair<const char*, BatchLoss>> out = {
      {"aam", aam_flat},
      {"sasv_cont", [p](const PairedBatch& b) { return sasv_contrastive_loss(b, p.cosine).value; }},
  };
  for (LossMode m : {LossMode::id1, LossMode::id2, LossMode::cont_id1, LossMode::cont_id2}) {
    out.emplace_back("combined", [p, m](const PairedBatch& b) {
      return combined_sasv_loss(b, m, p).value;
    });
  }
  return out;
}

TEST(LossProperties, NonNegativeScaleAndPermutationInvariant) {
  Rng rng(12);
  for (int t = 0; t < 40; ++t) {
    const int c = 6;
    const PairedBatch b = oracle::random_batch(rng, 5, 3, 2, c);
    const SasvLossParams p = random_params(rng, 5, c);
    PairedBatch perm = b;
    std::vector<std::size_t> order(b.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < order.size(); ++i) {
      perm.support[i] = b.support[order[i]];
      perm.prototype[i] = b.prototype[order[i]];
    }
    const PairedBatch sc = scaled(b, rng);
    for (const auto& [name, f] : all_losses(p)) {
      const double v = f(b);
      EXPECT_GE(v, 0.0) << name;
      EXPECT_NEAR(f(sc), v, 1e-12) << name;
      EXPECT_NEAR(f(perm), v, 1e-12) << name;
    }
    const double ap_value = angular_prototypical_loss(
        oracle::random_batch(rng, 5, 4, 0, 4), p.cosine).value;
    EXPECT_GE(ap_value, 0.0);
  }
}

// Central differences on every embedding coordinate and on alpha/beta.
void expect_gradients_match(const PairedBatch& b,
                            const std::function<LossOutput(const PairedBatch&,
                                                           const AffineCosineParams&)>& f,
                            const AffineCosineParams& p, bool check_affine) {
  const LossOutput out = f(b, p);
  const double h = 1e-6;
  const std::size_t n = b.size();
  auto perturbed = [&](std::size_t flat, std::size_t k, double d) {
    PairedBatch c = b;
    auto& e = flat < n ? c.support[flat].embedding : c.prototype[flat - n].embedding;
    std::vector<double> v(e.values().begin(), e.values().end());
    v[k] += d;
    e = Embedding(std::move(v));
    return f(c, p).value;
  };
  for (std::size_t i = 0; i < 2 * n; ++i) {
    for (std::size_t k = 0; k < out.grad_embeddings[i].size(); ++k) {
      const double fd = (perturbed(i, k, h) - perturbed(i, k, -h)) / (2 * h);
      EXPECT_NEAR(out.grad_embeddings[i][k], fd, 1e-6 * std::max(1.0, std::abs(fd)))
          << "embedding " << i << " coord " << k;
    }
  }
  if (check_affine) {
    const double fa = (f(b, {p.alpha + h, p.beta}).value - f(b, {p.alpha - h, p.beta}).value) / (2 * h);
    const double fb = (f(b, {p.alpha, p.beta + h}).value - f(b, {p.alpha, p.beta - h}).value) / (2 * h);
    EXPECT_NEAR(out.grad_alpha, fa, 1e-6);
    EXPECT_NEAR(out.grad_beta, fb, 1e-6);
  }
}

TEST(LossGradients, ContrastiveLossesMatchFiniteDifferences) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const AffineCosineParams p{2.0 + 8.0 * rng.uniform(), rng.normal()};
    expect_gradients_match(oracle::random_batch(rng, 4, 3, 0, 3),
                           [](const PairedBatch& b, const AffineCosineParams& q) {
                             return angular_prototypical_loss(b, q);
                           }, p, true);
    expect_gradients_match(oracle::random_batch(rng, 4, 2, 2, 4),
                           [](const PairedBatch& b, const AffineCosineParams& q) {
                             return sasv_contrastive_loss(b, q);
                           }, p, true);
  }
}

TEST(LossGradients, CombinedModesMatchFiniteDifferences) {
  Rng rng(14);
  for (LossMode m : {LossMode::id1, LossMode::id2, LossMode::cont_id1, LossMode::cont_id2}) {
    for (int t = 0; t < 4; ++t) {
      SasvLossParams p = random_params(rng, 4, 5);
      expect_gradients_match(oracle::random_batch(rng, 4, 2, 2, 5),
                              [&p, m](const PairedBatch& b, const AffineCosineParams& q) {
                                SasvLossParams r = p;
                                r.cosine = q;
                                return combined_sasv_loss(b, m, r);
                              }, p.cosine, uses_contrastive(m));
    }
  }
}

TEST(LossGradients, ClassifierWeightsMatchFiniteDifferences) {
  Rng rng(15);
  const std::size_t dim = 4;
  const int c = 5;
  std::vector<Embedding> e;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    e.push_back(oracle::random_embedding(rng, dim));
    labels.push_back(1 + static_cast<int>(rng.below(c)));
  }
  const Matrix w = oracle::random_matrix(rng, c, dim);
  const AamParams p{20.0, 0.25};
  const auto out = aam_softmax_loss(e, labels, ClassifierWeights(w), p, c);
  ASSERT_EQ(out.grad_weights.size(), 1u);
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    Matrix up = w, dn = w;
    up.data[i] += h;
    dn.data[i] -= h;
    const double fd = (aam_softmax_loss(e, labels, ClassifierWeights(up), p, c).value -
                       aam_softmax_loss(e, labels, ClassifierWeights(dn), p, c).value) / (2 * h);
    EXPECT_NEAR(out.grad_weights[0].data[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace
}  // namespace sasv
