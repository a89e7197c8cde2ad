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

#include "calkit/targetmap.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace calkit {
namespace {

void CheckQ(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::kBadQ, "q must lie in (0, 1), got " + std::to_string(q));
  }
}

}  // namespace

double compute_gamma(std::span<const double> tail, double q) {
  CheckQ(q);
  double top = 0.0;
  for (double c : tail) top = std::max(top, c);
  if (!(top > 0.0)) throw Error(ErrorCode::kDegenerateTail, "tail is all zeros");
  return std::log(3.0) / (top * (1.0 - q));
}

AlphaBeta solve_alpha_beta(double tanh_sum, double q, std::size_t k,
                           MappingVariant variant, double alpha) {
  CheckQ(q);
  if (k < 2) throw Error(ErrorCode::kBadParams, "k must be >= 2");
  if (!(tanh_sum >= 0.0)) throw Error(ErrorCode::kBadParams, "negative tanh sum");
  const double tail = static_cast<double>(k - 1);
  if (variant == MappingVariant::kSimplified) {
    const double a = (1.0 - q) / (tanh_sum + tail);
    return {a, a};
  }
  if (!(alpha > 0.0)) throw Error(ErrorCode::kBadParams, "alpha must be > 0");
  const double beta = (1.0 - q - alpha * tanh_sum) / tail;
  if (beta < 0.0) {
    throw Error(ErrorCode::kNegativeBeta, "alpha too large for the tail mass");
  }
  return {alpha, beta};
}

bool rank_condition(double q, double tanh_sum, std::size_t k) {
  return q > 2.0 / (tanh_sum + static_cast<double>(k) + 1.0);
}

bool preserves_rank(const ConfidenceVector& source,
                    std::span<const double> target, ClassIndex top) {
  const std::size_t k = source.k();
  for (std::size_t i = 0; i < k; ++i) {
    if (i == top) continue;
    if (!(target[top] > target[i])) return false;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == top || j == i) continue;
      if (source[i] > source[j] && target[i] < target[j]) return false;
    }
  }
  return true;
}

TargetDistribution build_target(const ConfidenceVector& conf, double q,
                                MappingVariant variant, double general_alpha) {
  CheckQ(q);
  const std::size_t k = conf.k();
  const ClassIndex top = argmax_option(conf);
  std::vector<double> tail;
  tail.reserve(k - 1);
  for (std::size_t j = 0; j < k; ++j) {
    if (j != top) tail.push_back(conf[j]);
  }
  std::vector<double> out(k);
  std::optional<MappingParams> params;

  const bool degenerate =
      std::all_of(tail.begin(), tail.end(), [](double c) { return c <= 0.0; });
  if (degenerate) {
    const double share = (1.0 - q) / static_cast<double>(k - 1);
    for (std::size_t j = 0; j < k; ++j) out[j] = share;
  } else {
    const double gamma = compute_gamma(tail, q);
    double tanh_sum = 0.0;
    for (double c : tail) tanh_sum += std::tanh(gamma * c);
    AlphaBeta ab;
    MappingVariant used = variant;
    try {
      ab = solve_alpha_beta(tanh_sum, q, k, variant, general_alpha);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNegativeBeta) throw;
      used = MappingVariant::kSimplified;
      ab = solve_alpha_beta(tanh_sum, q, k, used);
    }
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = ab.alpha * std::tanh(gamma * conf[j]) + ab.beta;
    }
    params = MappingParams{gamma, ab.alpha, ab.beta, tanh_sum, used};
  }
  out[top] = q;
  const bool ranked = preserves_rank(conf, out, top);
  return {ConfidenceVector(std::move(out)), top, q, ranked, params};
}

}  // namespace calkit
