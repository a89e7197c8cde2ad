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

// Finite-support generative models and the TCE bounds that can be
// checked exactly on them.

#ifndef CALKIT_GENMODEL_H_
#define CALKIT_GENMODEL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calkit/core.h"

namespace calkit {

struct SupportPoint {
  std::string id;
  double weight;
  ConfidenceVector label_dist;

  friend bool operator==(const SupportPoint&, const SupportPoint&) = default;
};

class FiniteGenerativeModel {
 public:
  // Throws Error(kBadParams) unless weights are nonnegative and sum to one,
  // ids are unique and every label_dist has k entries.
  FiniteGenerativeModel(std::size_t k, std::vector<SupportPoint> support);

  std::size_t k() const { return k_; }
  std::size_t size() const { return support_.size(); }
  const std::vector<SupportPoint>& support() const { return support_; }
  const SupportPoint& operator[](std::size_t i) const { return support_[i]; }

  // True when every label_dist is one-hot.
  bool HasDeterministicLabels() const;

  friend bool operator==(const FiniteGenerativeModel&,
                         const FiniteGenerativeModel&) = default;

 private:
  std::size_t k_;
  std::vector<SupportPoint> support_;
};

// Confidence vectors keyed by support point id.
class Predictor {
 public:
  void Set(const std::string& id, ConfidenceVector cv);
  // Throws Error(kUnknownSupportPoint) when id has no entry.
  const ConfidenceVector& At(const std::string& id) const;
  bool Contains(const std::string& id) const { return map_.count(id) > 0; }
  std::size_t size() const { return map_.size(); }

  // Vectors in support order.
  std::vector<const ConfidenceVector*> Aligned(
      const FiniteGenerativeModel& model) const;

  friend bool operator==(const Predictor&, const Predictor&) = default;

 private:
  std::map<std::string, ConfidenceVector> map_;
};

// The model's own label distribution used as a predictor (p*).
Predictor OptimalPredictor(const FiniteGenerativeModel& model);

// Copy of the model whose label distribution is taken from predictor.
FiniteGenerativeModel WithLabelDist(const FiniteGenerativeModel& model,
                                    const Predictor& predictor);

enum class ModelKind { kPureRandom, kDeterministic, kDirichlet };

const char* ModelKindName(ModelKind kind);
std::optional<ModelKind> ParseModelKind(const std::string& name);

struct ModelParams {
  double concentration = 1.0;
  // Draw support weights from a flat Dirichlet instead of uniform weights.
  bool random_weights = false;
};

FiniteGenerativeModel make_model(ModelKind kind, std::size_t k,
                                 std::size_t n_support,
                                 const ModelParams& params,
                                 std::uint64_t seed);

Dataset sample_dataset(const FiniteGenerativeModel& model,
                       const Predictor& predictor, std::size_t n,
                       std::uint64_t seed);

// Expected accuracy of the predictor's argmax under the model's labels.
double population_accuracy(const FiniteGenerativeModel& model,
                           const Predictor& predictor);

// Expected (1/k) L1 distance between label_dist and the predictor.
double tce(const FiniteGenerativeModel& model, const Predictor& predictor);

// Population classwise ECE, conditioning on exact per-class values.
double population_cw_ece(const FiniteGenerativeModel& model,
                         const Predictor& predictor);

// Builds a reference predictor whose accuracy on the model is close to
// acc_star. Points are predicted on their modal label or on their least
// likely label, chosen greedily in support order. Without shape_seed the
// predicted class gets max(acc_star, 1/k + 0.01) and the rest is spread
// evenly; with shape_seed the vector is a flat Dirichlet draw whose largest
// entry is moved onto the predicted class.
Predictor make_target_predictor(const FiniteGenerativeModel& model,
                                double acc_star,
                                std::optional<std::uint64_t> shape_seed =
                                    std::nullopt);

// Moves mass of pi_star towards target_acc by flipping points to one-hot
// vectors, keeping TCE(result, pi_star) <= 2 |acc - acc(pi_star)|.
Predictor construct_bound_predictor(const FiniteGenerativeModel& model,
                                    const Predictor& pi_star,
                                    double target_acc);

struct LowerBoundCheck {
  double C;
  double tce;
  double acc_star;
  double acc;
  bool holds;
};

// TCE of pi against pi_star versus C |acc(pi_star) - acc(pi)|.
LowerBoundCheck lower_bound_constant(const FiniteGenerativeModel& model,
                                     const Predictor& pi_star,
                                     const Predictor& pi);

struct EceTceCheck {
  double cw_ece_pop;
  double tce;
  bool holds;
};

EceTceCheck verify_ece_le_tce(const FiniteGenerativeModel& model,
                              const Predictor& predictor);

enum class Regime { kCalibratable, kNonCalibratable };

const char* RegimeName(Regime regime);

struct RegimeClassification {
  Regime regime;
  double acc;
  double acc_star;
  double ece_upper;
  double ece_lower;
  bool ece_lower_strictly_positive;
};

RegimeClassification classify_regime(double acc, double acc_star);

}  // namespace calkit

#endif  // CALKIT_GENMODEL_H_
