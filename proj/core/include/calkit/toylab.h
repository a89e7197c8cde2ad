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

// Small synthetic multiple-choice task with linear and tabular softmax
// policies, plus temperature scaling and label smoothing baselines.

#ifndef CALKIT_TOYLAB_H_
#define CALKIT_TOYLAB_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "calkit/core.h"
#include "calkit/emcal.h"
#include "calkit/metrics.h"

namespace calkit {

struct ToyTask {
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  // n x d, row-major.
  std::vector<double> features;
  std::vector<ClassIndex> labels;
  // d x k teacher weights; labels ~ softmax(teacher^T x / teacher_temperature).
  std::vector<double> teacher;
  double teacher_temperature = 1.0;
  std::vector<Split> splits;
};

// Rows [0, n - round(n * val_fraction)) are train, the rest val.
ToyTask gen_toy_task(std::size_t d, std::size_t k, std::size_t n,
                     double teacher_temperature, std::uint64_t seed,
                     double val_fraction = 0.2);

// Rows of the task carrying the given split tag.
ToyTask select_split(const ToyTask& task, Split split);

// Mean max teacher probability over the task's rows.
double bayes_accuracy(const ToyTask& task);

class LinearPolicy {
 public:
  LinearPolicy(std::size_t d, std::size_t k, double temperature = 1.0);
  LinearPolicy(std::size_t d, std::size_t k, double temperature,
               std::vector<double> weights);

  std::size_t d() const { return d_; }
  std::size_t k() const { return k_; }
  double temperature() const { return temperature_; }
  // d x k, row-major.
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& mutable_weights() { return weights_; }

  // softmax(W^T x / temperature).
  ConfidenceVector forward(std::span<const double> x) const;

  friend bool operator==(const LinearPolicy&, const LinearPolicy&) = default;

 private:
  std::size_t d_;
  std::size_t k_;
  double temperature_;
  std::vector<double> weights_;
};

class TabularPolicy {
 public:
  TabularPolicy(std::size_t n, std::size_t k);
  TabularPolicy(std::size_t n, std::size_t k, std::vector<double> logits);

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  const std::vector<double>& logits() const { return logits_; }
  std::vector<double>& mutable_logits() { return logits_; }

  ConfidenceVector forward(std::size_t record) const;

  friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> logits_;
};

using Policy = std::variant<LinearPolicy, TabularPolicy>;

// Binds a policy to the rows of a task. The policy must outlive the result.
// Tabular learning rates act per record: a step moves each row of logits by
// learning_rate times the gradient of that record's own loss.
std::unique_ptr<TrainablePolicy> bind_policy(Policy& policy, const ToyTask& task);

// Confidences of the policy on every row of the task.
Dataset policy_dataset(const Policy& policy, const ToyTask& task);

// Tabular policy holding the linear policy's logits on the task rows.
TabularPolicy to_tabular(const LinearPolicy& policy, const ToyTask& task);

// Mean sft_weight * SFT + lambda * ECE over the task rows, against targets
// (row-major n x k; may be empty when lambda is zero).
double combined_loss(const Policy& policy, const ToyTask& task,
                     std::span<const double> targets, const LossWeights& weights);

// Parameter gradient of combined_loss, laid out like the policy parameters.
std::vector<double> grad_combined(const Policy& policy, const ToyTask& task,
                                  std::span<const double> targets,
                                  const LossWeights& weights);

struct TemperatureFit {
  double temperature;
  double ece_before;
  double ece_after;
};

// Minimizes conf-ECE of apply_temperature(ds, T) over a log grid on
// [0.05, 20] plus T = 1, refined by golden-section search.
TemperatureFit fit_temperature(const Dataset& ds_val,
                               const BinningConfig& binning = {});

// softmax(log(c) / T) per record. T = 1 returns the input unchanged.
Dataset apply_temperature(const Dataset& ds, double temperature);
ConfidenceVector apply_temperature(const ConfidenceVector& cv, double temperature);

ConfidenceVector label_smooth_targets(ClassIndex label, std::size_t k,
                                      double epsilon);

enum class TrainMode { kSftOnly, kLabelSmooth, kCft, kRcft };

struct TrainSpec {
  TrainMode mode = TrainMode::kSftOnly;
  // Epoch count, inner steps, learning rate and metric bins for every mode;
  // lambda, divergence and sft_weight for the EM modes.
  EmConfig em;
  double epsilon = 0.1;
  // rcft: SFT epochs on a tabular copy before the EM stage.
  int overfit_epochs = 5;
  double overfit_learning_rate = 0.1;
};

struct TrainResult {
  Policy policy;
  std::vector<HistoryRow> history;
};

TrainResult train(const Policy& start, const ToyTask& data, const TrainSpec& spec);

// Settings of the shared starting point for toy experiments: a linear
// policy fit by SFT from zero weights, then sharpened by scaling W.
struct ToySetup {
  std::size_t d = 16;
  std::size_t k = 4;
  std::size_t n = 4000;
  double teacher_temperature = 0.7;
  double val_fraction = 0.2;
  std::uint64_t seed = 7;
  int pretrain_epochs = 40;
  int pretrain_inner_steps = 50;
  double pretrain_learning_rate = 0.5;
  double sharpen = 3.0;
};

struct ToyStart {
  ToyTask train;
  ToyTask val;
  LinearPolicy pretrained;
  LinearPolicy sharpened;
  double bayes_accuracy;
};

ToyStart prepare_toy_start(const ToySetup& setup);

}  // namespace calkit

#endif  // CALKIT_TOYLAB_H_
