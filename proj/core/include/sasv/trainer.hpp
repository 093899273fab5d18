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
#ifndef SASV_TRAINER_HPP_
#define SASV_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sasv/core.hpp"
#include "sasv/linalg.hpp"
#include "sasv/losses.hpp"
#include "sasv/metrics.hpp"
#include "sasv/rng.hpp"
#include "sasv/sampling.hpp"
#include "sasv/trials.hpp"

namespace sasv {

// ---------------------------------------------------------------------------
// Encoder: F -> H -> D two-layer affine map with tanh in between.

struct Encoder {
  Matrix w1;  // H x F
  Vector b1;  // H
  Matrix w2;  // D x H
  Vector b2;  // D

  std::size_t input_dim() const { return w1.cols; }
  std::size_t hidden_dim() const { return w1.rows; }
  std::size_t output_dim() const { return w2.rows; }
  std::size_t num_params() const;

  // Gaussian init with variance 1/fan_in, zero biases.
  static Encoder random(std::size_t input, std::size_t hidden,
                        std::size_t output, Rng& rng);
  static Encoder zeros(std::size_t input, std::size_t hidden, std::size_t output);

  friend bool operator==(const Encoder&, const Encoder&) = default;
};

// Forward pass. hidden, when given, receives the tanh activations needed by
// encoder_backward. Throws ContractError on a feature-dimension mismatch.
Vector encode_raw(const Encoder& enc, std::span<const double> features,
                  Vector* hidden = nullptr);
Embedding encode(const Encoder& enc, std::span<const double> features);

// Vector-Jacobian product: accumulates d(grad_out . encode(x))/d(params)
// into grad, laid out like the encoder itself.
void encoder_backward(const Encoder& enc, std::span<const double> features,
                      std::span<const double> hidden,
                      std::span<const double> grad_out, Encoder& grad);

void write_encoder(std::ostream& out, const Encoder& enc);
Encoder read_encoder(std::istream& in);

// ---------------------------------------------------------------------------
// Optimizer and schedule.

struct OptimState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// One AdamW step with bias-corrected moments and decoupled weight decay:
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p.
/// Empty moment vectors are initialized to zeros. Throws ContractError on a
/// shape mismatch and NonFiniteError on a non-finite gradient.
void adamw_step(std::span<double> params, std::span<const double> grads,
                OptimState& st, double lr);

enum class LrShape { cosine, linear, constant };
std::string_view to_string(LrShape shape);
std::optional<LrShape> parse_lr_shape(std::string_view token);

struct LrSchedule {
  double max_lr = 1e-3;
  int cycle_epochs = 25;
  double decay = 0.5;
  int decay_every_cycles = 1;
  LrShape shape = LrShape::cosine;
};

/// Within a cycle the rate ramps from the cycle maximum down towards 1% of
/// it (cosine by default); the cycle maximum is multiplied by decay after
/// every decay_every_cycles cycles.
double lr_at(const LrSchedule& sched, int epoch);

// ---------------------------------------------------------------------------
// Training.

struct StagePlan {
  Stage stage = Stage::s1;
  LossMode mode = LossMode::cont_id1;  // ignored by stage 1
  BatchSpec batch;
  LrSchedule lr;
  int epochs = 0;
};

struct TrainerConfig {
  std::size_t hidden_dim = 64;
  std::size_t embedding_dim = 16;
  AamParams aam;
  AffineCosineParams cosine_init;
  OptimState optimizer;  // hyperparameters only; moments start empty
  std::uint64_t seed = 1;
};

// Everything a stage optimizes. Heads a stage does not use stay empty.
struct Trainables {
  Encoder encoder;
  AffineCosineParams cosine;
  ClassifierWeights asv;         // stage 1, num_speakers rows
  ClassifierWeights integrated;  // stages 2-3, num_speakers + 1 rows
  ClassifierWeights speaker;     // stages 2-3, num_speakers rows
  ClassifierWeights spoof;       // stages 2-3, 2 rows

  // Layout: w1, b1, w2, b2, alpha, beta, asv, integrated, speaker, spoof.
  Vector flatten() const;
  void unflatten(std::span<const double> flat);
  std::size_t size() const;
};

struct BatchGradient {
  double loss = 0.0;
  Vector grad;  // Trainables::flatten layout
};

/// Encode every utterance of the batch, evaluate the stage loss and
/// backpropagate into all trainables.
BatchGradient batch_gradient(const Trainables& t, const Dataset& d,
                             const UtteranceBatch& batch, Stage stage,
                             LossMode mode, const AamParams& aam);

struct TrainingData {
  const Dataset* pretrain = nullptr;
  const CsPairing* cs_pairs = nullptr;
  const Dataset* indomain = nullptr;
};

struct EpochRecord {
  Stage stage;
  int epoch;
  double mean_loss;
  double lr;
};

struct StageResult {
  Trainables state;
  std::vector<EpochRecord> log;
};

// Fresh (re-initialized) classifier heads for a stage over data with
// num_speakers speakers; encoder and cosine parameters are kept.
Trainables with_fresh_heads(const Trainables& t, Stage stage, int num_speakers,
                            Rng& rng);

/// Runs plan.epochs epochs of the stage. Throws ContractError when the data
/// the plan needs is missing and NonFiniteError when a loss, gradient or
/// parameter stops being finite.
StageResult run_stage(const Trainables& start, const StagePlan& plan,
                      const TrainingData& data, const TrainerConfig& cfg);

struct EvalData {
  const Dataset* enroll = nullptr;
  const Dataset* eval = nullptr;
  const std::vector<TrialRecord>* trials = nullptr;
};

EmbeddingTable embed_dataset(const Encoder& enc, const Dataset& d);
EnrollmentMap enrollment_embeddings(const Encoder& enc, const Dataset& enroll);
SasvEvaluation evaluate_encoder(const Encoder& enc, const EvalData& eval);

struct PipelineReport {
  std::vector<EpochRecord> log;
  SasvEvaluation metrics;
};

struct PipelineResult {
  Trainables state;
  PipelineReport report;
};

/// Runs the plans in order, carrying encoder and cosine parameters across
/// stages, then evaluates the final encoder on the evaluation trials.
PipelineResult run_pipeline(std::span<const StagePlan> plans,
                            const TrainingData& data, const EvalData& eval,
                            const TrainerConfig& cfg);

// Initial trainables for a pipeline (random encoder from cfg.seed).
Trainables initial_trainables(std::size_t feature_dim, const TrainerConfig& cfg);

}  // namespace sasv

#endif  // SASV_TRAINER_HPP_
