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

// EM calibration loop: stratify by max confidence, estimate bin accuracy,
// build targets, then take gradient steps on SFT + lambda * ECE loss.

#ifndef CALKIT_EMCAL_H_
#define CALKIT_EMCAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calkit/core.h"
#include "calkit/targetmap.h"

namespace calkit {

enum class Divergence { kMse, kCrossEntropy };

const char* DivergenceName(Divergence d);
std::optional<Divergence> ParseDivergence(const std::string& name);

struct EmConfig {
  int epochs = 10;
  std::size_t bins = 10;
  double lambda = 1.0;
  // Weight of the SFT term; zero gives a pure ECE pull.
  double sft_weight = 1.0;
  Divergence divergence = Divergence::kMse;
  double learning_rate = 0.05;
  std::size_t min_bin_count = 5;
  int inner_steps = 50;
  std::uint64_t seed = 42;
};

struct LatentAssignment {
  std::size_t bins = 0;
  // Per-record bin in [1, bins].
  std::vector<std::size_t> z;
};

struct BinAccuracy {
  // Indexed by bin - 1; empty bins have no estimate.
  std::vector<std::optional<double>> q;
  std::vector<std::size_t> counts;
};

inline constexpr double kMinBinAccuracy = 1e-3;
inline constexpr double kMaxBinAccuracy = 1.0 - 1e-3;
inline constexpr double kLogFloor = 1e-12;

LatentAssignment e_step(const Dataset& snapshot, std::size_t bins);

// Bins with fewer than min_bin_count records use (wins + 1) / (count + 2).
BinAccuracy m_step(const Dataset& snapshot, const LatentAssignment& z,
                   std::size_t min_bin_count);

double clamp_bin_accuracy(double q);

std::vector<TargetDistribution> build_all_targets(const Dataset& snapshot,
                                                  const BinAccuracy& qs,
                                                  const LatentAssignment& z);

// mse: (1/k) sum (p - c)^2.  cross-entropy: -sum p log(max(c, 1e-12)).
double ece_loss(std::span<const double> target, std::span<const double> conf,
                Divergence divergence);
double ece_loss(const TargetDistribution& target, const ConfidenceVector& conf,
                Divergence divergence);

// -log(max(c[label], 1e-12)).
double sft_loss(std::span<const double> conf, ClassIndex label);
double sft_loss(const ConfidenceVector& conf, ClassIndex label);

// Softmax of each row of a row-major rows x k matrix.
std::vector<double> softmax_rows(std::span<const double> logits, std::size_t k);

struct LossWeights {
  double sft_weight = 1.0;
  double lambda = 0.0;
  Divergence divergence = Divergence::kMse;
};

// Mean over records of sft_weight * SFT + lambda * ECE, where probs are the
// softmax of the logits. Writes the gradient of that mean with respect to
// the logits into logit_grad. targets may be empty when lambda is zero.
// Nonempty soft_labels replace the one-hot SFT target by -sum t log c.
double combined_loss_grad(std::span<const double> probs, std::size_t k,
                          std::span<const ClassIndex> labels,
                          std::span<const double> targets,
                          const LossWeights& weights,
                          std::span<double> logit_grad,
                          std::span<const double> soft_labels = {});

// A differentiable policy bound to a fixed set of records.
class TrainablePolicy {
 public:
  virtual ~TrainablePolicy() = default;

  virtual std::size_t num_records() const = 0;
  virtual std::size_t num_classes() const = 0;
  // Row-major num_records x num_classes.
  virtual std::vector<double> logits() const = 0;
  // Parameter gradient given the gradient with respect to logits().
  virtual std::vector<double> backward(std::span<const double> logit_grad) const = 0;
  // Gradient descent update of the parameters.
  virtual void step(std::span<const double> grad, double learning_rate) = 0;
};

// Confidences from a policy packaged with labels as a dataset.
Dataset snapshot(const TrainablePolicy& policy,
                 std::span<const ClassIndex> labels);

struct HistoryRow {
  int epoch;
  double acc;
  double conf_ece;
  double cw_ece;
  double mean_sft;
  double mean_ece;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

// Metrics of the current policy. mean_ece is measured against the targets
// the next EM epoch would use.
HistoryRow evaluate_epoch(const TrainablePolicy& policy,
                          std::span<const ClassIndex> labels,
                          const EmConfig& cfg, int epoch);

// One full-batch gradient step on the given loss.
double gradient_step(TrainablePolicy& policy,
                     std::span<const ClassIndex> labels,
                     std::span<const double> targets, const LossWeights& weights,
                     double learning_rate,
                     std::span<const double> soft_labels = {});

// Row 0 evaluates the starting policy; rows 1..epochs follow each epoch.
// Throws Error(kNonFiniteLoss) naming the failing epoch.
std::vector<HistoryRow> run_em(TrainablePolicy& policy,
                               std::span<const ClassIndex> labels,
                               const EmConfig& cfg);

}  // namespace calkit

#endif  // CALKIT_EMCAL_H_
