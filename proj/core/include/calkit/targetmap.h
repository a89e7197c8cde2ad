// Copyright 2026 The Calkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-record calibration targets: the top class receives the bin accuracy
// q and the tail is compressed through alpha * tanh(gamma * c) + beta.

#ifndef CALKIT_TARGETMAP_H_
#define CALKIT_TARGETMAP_H_

#include <cstddef>
#include <optional>
#include <span>

#include "calkit/core.h"

namespace calkit {

enum class MappingVariant { kSimplified, kGeneral };

struct MappingParams {
  double gamma;
  double alpha;
  double beta;
  double tanh_sum;
  MappingVariant variant;
};

struct TargetDistribution {
  ConfidenceVector probs;
  ClassIndex top_index;
  double q_m;
  bool rank_preserved;
  // Absent when the source tail is all zeros.
  std::optional<MappingParams> params;
};

// gamma = ln(3) / (max(tail) * (1 - q)).
double compute_gamma(std::span<const double> tail, double q);

struct AlphaBeta {
  double alpha;
  double beta;
};

// Simplified: alpha = beta = (1 - q) / (tanh_sum + k - 1).
// General: beta = (1 - q - alpha * tanh_sum) / (k - 1) for the given alpha.
AlphaBeta solve_alpha_beta(double tanh_sum, double q, std::size_t k,
                           MappingVariant variant, double alpha = 0.0);

// q > 2 / (tanh_sum + k + 1).
bool rank_condition(double q, double tanh_sum, std::size_t k);

// True when the top class stays strictly above every other entry and tail
// entries keep the source order (c_i > c_j implies t_i >= t_j).
bool preserves_rank(const ConfidenceVector& source,
                    std::span<const double> target, ClassIndex top);

// The general variant falls back to the simplified one on a negative beta.
TargetDistribution build_target(
    const ConfidenceVector& conf, double q,
    MappingVariant variant = MappingVariant::kSimplified,
    double general_alpha = 0.0);

}  // namespace calkit

#endif  // CALKIT_TARGETMAP_H_
