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
#ifndef SASV_GRADCHECK_HPP_
#define SASV_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "sasv/linalg.hpp"

namespace sasv {

// The eight loss configurations exposed for finite-difference checking.
enum class GradcheckLoss {
  ap,
  aam,
  sasv_cont,
  id1,
  id2,
  cont_id1,
  cont_id2,
  asv_stage1,
};

inline constexpr GradcheckLoss kAllGradcheckLosses[] = {
    GradcheckLoss::ap,       GradcheckLoss::aam,      GradcheckLoss::sasv_cont,
    GradcheckLoss::id1,      GradcheckLoss::id2,      GradcheckLoss::cont_id1,
    GradcheckLoss::cont_id2, GradcheckLoss::asv_stage1};

std::string_view to_string(GradcheckLoss loss);
std::optional<GradcheckLoss> parse_gradcheck_loss(std::string_view name);

// Central differences of f at x with step h.
Vector central_differences(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x, double step);

// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|); 0 when both vanish.
double relative_error(std::span<const double> analytic,
                      std::span<const double> numeric);

struct GradcheckReport {
  GradcheckLoss loss;
  int instances = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

inline constexpr double kGradcheckTolerance = 1e-5;
inline constexpr double kGradcheckStep = 1e-5;

// Runs randomized instances (embedding dim in [4, 16], at most 12
// embeddings per batch, s = 30, m = 0.2) and compares the analytic
// gradient against central differences over every embedding coordinate,
// alpha, beta and every classifier weight.
GradcheckReport run_gradcheck(GradcheckLoss loss, int instances,
                              std::uint64_t seed,
                              double tolerance = kGradcheckTolerance,
                              double step = kGradcheckStep);

}  // namespace sasv

#endif  // SASV_GRADCHECK_HPP_
