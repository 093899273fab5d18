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
#include "sasv/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "sasv/error.hpp"

namespace sasv {

// ---------------------------------------------------------------------------
// Encoder

std::size_t Encoder::num_params() const {
  return w1.data.size() + b1.size() + w2.data.size() + b2.size();
}

Encoder Encoder::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
  return Encoder{Matrix(hidden, input), Vector(hidden, 0.0),
                 Matrix(output, hidden), Vector(output, 0.0)};
}

Encoder Encoder::random(std::size_t input, std::size_t hidden,
                        std::size_t output, Rng& rng) {
  Encoder e = zeros(input, hidden, output);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : e.w1.data) v = s1 * rng.normal();
  for (double& v : e.w2.data) v = s2 * rng.normal();
  return e;
}

Vector encode_raw(const Encoder& enc, std::span<const double> features,
                  Vector* hidden) {
  if (features.size() != enc.input_dim()) {
    throw ContractError("encode: feature dimension " +
                        std::to_string(features.size()) + " != encoder input " +
                        std::to_string(enc.input_dim()));
  }
  Vector h(enc.hidden_dim());
  for (std::size_t j = 0; j < h.size(); ++j) {
    h[j] = std::tanh(dot(enc.w1.row(j), features) + enc.b1[j]);
  }
  Vector y(enc.output_dim());
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = dot(enc.w2.row(k), h) + enc.b2[k];
  }
  if (hidden != nullptr) *hidden = std::move(h);
  return y;
}

Embedding encode(const Encoder& enc, std::span<const double> features) {
  return Embedding(encode_raw(enc, features));
}

void encoder_backward(const Encoder& enc, std::span<const double> features,
                      std::span<const double> hidden,
                      std::span<const double> grad_out, Encoder& grad) {
  Vector grad_pre(enc.hidden_dim(), 0.0);
  for (std::size_t k = 0; k < enc.output_dim(); ++k) {
    const double g = grad_out[k];
    grad.b2[k] += g;
    axpy(g, hidden, grad.w2.row(k));
    axpy(g, enc.w2.row(k), grad_pre);
  }
  for (std::size_t j = 0; j < enc.hidden_dim(); ++j) {
    const double g = grad_pre[j] * (1.0 - hidden[j] * hidden[j]);
    grad.b1[j] += g;
    axpy(g, features, grad.w1.row(j));
  }
}

namespace {

constexpr std::array<char, 4> kModelMagic = {'S', 'V', 'K', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(v));
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      throw ParseError("truncated model file", 0);
    }
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_le(in, 8);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof(v));
  if (!std::isfinite(v)) throw ParseError("non-finite model parameter", 0);
  return v;
}

}  // namespace

void write_encoder(std::ostream& out, const Encoder& enc) {
  out.write(kModelMagic.data(), kModelMagic.size());
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(enc.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(enc.hidden_dim()));
  put_u32(out, static_cast<std::uint32_t>(enc.output_dim()));
  for (double v : enc.w1.data) put_f64(out, v);
  for (double v : enc.b1) put_f64(out, v);
  for (double v : enc.w2.data) put_f64(out, v);
  for (double v : enc.b2) put_f64(out, v);
}

Encoder read_encoder(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kModelMagic) {
    throw ParseError("not a sasvkit model file", 0);
  }
  if (get_le(in, 4) != kModelVersion) throw ParseError("unsupported model version", 0);
  const auto f = get_le(in, 4), h = get_le(in, 4), d = get_le(in, 4);
  if (f < 1 || h < 1 || d < 2 || f > 4096 || h > 4096 || d > 4096) {
    throw ParseError("model dimensions out of range", 0);
  }
  Encoder e = Encoder::zeros(f, h, d);
  for (double& v : e.w1.data) v = get_f64(in);
  for (double& v : e.b1) v = get_f64(in);
  for (double& v : e.w2.data) v = get_f64(in);
  for (double& v : e.b2) v = get_f64(in);
  return e;
}

// ---------------------------------------------------------------------------
// Optimizer and schedule

void adamw_step(std::span<double> params, std::span<const double> grads,
                OptimState& st, double lr) {
  if (grads.size() != params.size()) {
    throw ContractError("adamw: gradient shape does not match parameters");
  }
  if (st.m.empty() && st.v.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size() || st.v.size() != params.size()) {
    throw ContractError("adamw: optimizer state shape does not match parameters");
  }
  if (!all_finite(grads)) throw NonFiniteError("adamw: non-finite gradient");

  ++st.step;
  const double t = static_cast<double>(st.step);
  const double bias1 = 1.0 - std::pow(st.beta1, t);
  const double bias2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double m_hat = st.m[i] / bias1;
    const double v_hat = st.v[i] / bias2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + st.eps) +
                 lr * st.weight_decay * params[i];
  }
}

std::string_view to_string(LrShape shape) {
  switch (shape) {
    case LrShape::cosine: return "cosine";
    case LrShape::linear: return "linear";
    case LrShape::constant: return "constant";
  }
  return "?";
}

std::optional<LrShape> parse_lr_shape(std::string_view token) {
  if (token == "cosine") return LrShape::cosine;
  if (token == "linear") return LrShape::linear;
  if (token == "constant") return LrShape::constant;
  return std::nullopt;
}

double lr_at(const LrSchedule& sched, int epoch) {
  constexpr double kFloor = 0.01;
  const int cycle_len = std::max(sched.cycle_epochs, 1);
  const int cycle = epoch / cycle_len;
  const int within = epoch % cycle_len;
  const int decays = cycle / std::max(sched.decay_every_cycles, 1);
  const double cycle_max = sched.max_lr * std::pow(sched.decay, decays);
  const double frac = static_cast<double>(within) / static_cast<double>(cycle_len);
  double factor = 1.0;
  switch (sched.shape) {
    case LrShape::cosine:
      factor = kFloor + (1.0 - kFloor) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
      break;
    case LrShape::linear:
      factor = 1.0 - (1.0 - kFloor) * frac;
      break;
    case LrShape::constant:
      break;
  }
  return cycle_max * factor;
}

// ---------------------------------------------------------------------------
// Trainables

namespace {

void append(Vector& out, std::span<const double> v) {
  out.insert(out.end(), v.begin(), v.end());
}

std::size_t take(std::span<const double> flat, std::size_t at, std::span<double> dst) {
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
  return at + dst.size();
}

Matrix random_head(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix m(rows, dim);
  for (double& v : m.data) v = rng.normal();
  return m;
}

}  // namespace

std::size_t Trainables::size() const {
  return encoder.num_params() + 2 + asv.weights.data.size() +
         integrated.weights.data.size() + speaker.weights.data.size() +
         spoof.weights.data.size();
}

Vector Trainables::flatten() const {
  Vector out;
  out.reserve(size());
  append(out, encoder.w1.data);
  append(out, encoder.b1);
  append(out, encoder.w2.data);
  append(out, encoder.b2);
  out.push_back(cosine.alpha);
  out.push_back(cosine.beta);
  append(out, asv.weights.data);
  append(out, integrated.weights.data);
  append(out, speaker.weights.data);
  append(out, spoof.weights.data);
  return out;
}

void Trainables::unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw ContractError("unflatten: size mismatch");
  std::size_t at = 0;
  at = take(flat, at, encoder.w1.data);
  at = take(flat, at, encoder.b1);
  at = take(flat, at, encoder.w2.data);
  at = take(flat, at, encoder.b2);
  cosine.alpha = flat[at++];
  cosine.beta = flat[at++];
  at = take(flat, at, asv.weights.data);
  at = take(flat, at, integrated.weights.data);
  at = take(flat, at, speaker.weights.data);
  take(flat, at, spoof.weights.data);
}

Trainables with_fresh_heads(const Trainables& t, Stage stage, int num_speakers,
                            Rng& rng) {
  Trainables out;
  out.encoder = t.encoder;
  out.cosine = t.cosine;
  const std::size_t dim = t.encoder.output_dim();
  const auto c = static_cast<std::size_t>(num_speakers);
  if (stage == Stage::s1) {
    out.asv = ClassifierWeights(random_head(c, dim, rng));
  } else {
    out.integrated = ClassifierWeights(random_head(c + 1, dim, rng));
    out.speaker = ClassifierWeights(random_head(c, dim, rng));
    out.spoof = ClassifierWeights(random_head(2, dim, rng));
  }
  return out;
}

Trainables initial_trainables(std::size_t feature_dim, const TrainerConfig& cfg) {
  Rng rng = Rng(cfg.seed).split(0x656e63);  // "enc"
  Trainables t;
  t.encoder = Encoder::random(feature_dim, cfg.hidden_dim, cfg.embedding_dim, rng);
  t.cosine = cfg.cosine_init;
  return t;
}

BatchGradient batch_gradient(const Trainables& t, const Dataset& d,
                             const UtteranceBatch& batch, Stage stage,
                             LossMode mode, const AamParams& aam) {
  const std::size_t pairs = batch.num_pairs();
  std::vector<std::size_t> order(batch.support);
  order.insert(order.end(), batch.prototype.begin(), batch.prototype.end());

  std::vector<Vector> hidden(order.size());
  PairedBatch pb;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const LabeledUtterance& u = d.utterances.at(order[i]);
    LabeledEmbedding e{Embedding(encode_raw(t.encoder, u.features, &hidden[i])),
                       u.speaker, u.cm};
    (i < pairs ? pb.support : pb.prototype).push_back(std::move(e));
  }

  LossOutput out;
  Trainables g;
  g.encoder = Encoder::zeros(t.encoder.input_dim(), t.encoder.hidden_dim(),
                             t.encoder.output_dim());
  g.cosine = {0.0, 0.0};
  g.asv = ClassifierWeights(Matrix(t.asv.weights.rows, t.asv.weights.cols));
  g.integrated = ClassifierWeights(
      Matrix(t.integrated.weights.rows, t.integrated.weights.cols));
  g.speaker = ClassifierWeights(Matrix(t.speaker.weights.rows, t.speaker.weights.cols));
  g.spoof = ClassifierWeights(Matrix(t.spoof.weights.rows, t.spoof.weights.cols));

  if (stage == Stage::s1) {
    out = asv_stage1_loss(pb, t.cosine, t.asv, aam, d.num_speakers);
    g.asv.weights = std::move(out.grad_weights.at(0));
  } else {
    SasvLossParams p{t.cosine, aam, t.integrated, t.speaker, t.spoof, d.num_speakers};
    out = combined_sasv_loss(pb, mode, p);
    g.integrated.weights = std::move(out.grad_weights.at(0));
    g.speaker.weights = std::move(out.grad_weights.at(1));
    g.spoof.weights = std::move(out.grad_weights.at(2));
  }
  g.cosine = {out.grad_alpha, out.grad_beta};
  for (std::size_t i = 0; i < order.size(); ++i) {
    encoder_backward(t.encoder, d.utterances[order[i]].features, hidden[i],
                     out.grad_embeddings[i], g.encoder);
  }
  return {out.value, g.flatten()};
}

StageResult run_stage(const Trainables& start, const StagePlan& plan,
                      const TrainingData& data, const TrainerConfig& cfg) {
  const Dataset* dataset = nullptr;
  const CsPairing* cs = nullptr;
  switch (plan.stage) {
    case Stage::s1:
      dataset = data.pretrain;
      break;
    case Stage::s2:
      dataset = data.pretrain;
      cs = data.cs_pairs;
      if (cs == nullptr) throw ContractError("stage s2 needs a CS pairing");
      break;
    case Stage::s3:
      dataset = data.indomain;
      break;
  }
  if (dataset == nullptr) {
    throw ContractError(std::string("stage ") + std::string(to_string(plan.stage)) +
                        " needs its training dataset");
  }
  if (plan.batch.stage != plan.stage) {
    throw ContractError("stage plan and batch spec name different stages");
  }
  if (plan.epochs <= 0) return {start, {}};

  Rng head_rng = Rng(cfg.seed).split(0x68656164 + static_cast<std::uint64_t>(plan.stage));
  StageResult result{with_fresh_heads(start, plan.stage, dataset->num_speakers, head_rng), {}};
  Trainables& t = result.state;

  const EpochSampler sampler(*dataset, plan.batch, cs);
  OptimState st = cfg.optimizer;
  st.m.clear();
  st.v.clear();
  st.step = 0;

  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    const double lr = lr_at(plan.lr, epoch);
    const auto batches = sampler.epoch(epoch);
    double total = 0.0;
    for (const auto& batch : batches) {
      const BatchGradient bg =
          batch_gradient(t, *dataset, batch, plan.stage, plan.mode, cfg.aam);
      if (!std::isfinite(bg.loss)) {
        throw NonFiniteError("non-finite loss in stage " +
                             std::string(to_string(plan.stage)) + ", epoch " +
                             std::to_string(epoch));
      }
      Vector flat = t.flatten();
      adamw_step(flat, bg.grad, st, lr);
      if (!all_finite(flat)) throw NonFiniteError("non-finite parameter after step");
      t.unflatten(flat);
      t.cosine.alpha = std::max(t.cosine.alpha, kAlphaMin);
      total += bg.loss;
    }
    result.log.push_back({plan.stage, epoch,
                          total / static_cast<double>(batches.size()), lr});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation and pipeline

EmbeddingTable embed_dataset(const Encoder& enc, const Dataset& d) {
  EmbeddingTable out;
  for (const auto& u : d.utterances) out.emplace(u.utt_id, encode(enc, u.features));
  return out;
}

EnrollmentMap enrollment_embeddings(const Encoder& enc, const Dataset& enroll) {
  EnrollmentMap out;
  for (const auto& u : enroll.utterances) {
    if (u.cm != CmLabel::bonafide) continue;
    out[speaker_key(u.speaker)].push_back(encode(enc, u.features));
  }
  return out;
}

SasvEvaluation evaluate_encoder(const Encoder& enc, const EvalData& eval) {
  if (eval.enroll == nullptr || eval.eval == nullptr || eval.trials == nullptr) {
    throw ContractError("evaluation needs enrollment, test data and trials");
  }
  const auto scored = score_trials(enrollment_embeddings(enc, *eval.enroll),
                                   embed_dataset(enc, *eval.eval), *eval.trials);
  return eval_sasv(scored);
}

PipelineResult run_pipeline(std::span<const StagePlan> plans,
                            const TrainingData& data, const EvalData& eval,
                            const TrainerConfig& cfg) {
  std::size_t feature_dim = 0;
  for (const Dataset* d : {data.pretrain, data.indomain, eval.enroll}) {
    if (d != nullptr && d->feature_dim() > 0) {
      feature_dim = d->feature_dim();
      break;
    }
  }
  if (feature_dim == 0) throw ContractError("pipeline: no data to size the encoder");

  PipelineResult result{initial_trainables(feature_dim, cfg), {}};
  for (const StagePlan& plan : plans) {
    StageResult r = run_stage(result.state, plan, data, cfg);
    result.state = std::move(r.state);
    result.report.log.insert(result.report.log.end(), r.log.begin(), r.log.end());
  }
  if (eval.enroll != nullptr) {
    result.report.metrics = evaluate_encoder(result.state.encoder, eval);
  }
  return result;
}

}  // namespace sasv
