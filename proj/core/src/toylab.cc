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

#include "calkit/toylab.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace calkit {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutableMap = Eigen::Map<RowMatrix>;

void CheckTask(const ToyTask& task) {
  if (task.features.size() != task.n * task.d || task.labels.size() != task.n) {
    throw Error(ErrorCode::kDimensionMismatch, "toy task arrays");
  }
}

class BoundLinear : public TrainablePolicy {
 public:
  BoundLinear(LinearPolicy& policy, const ToyTask& task)
      : policy_(policy), task_(task) {
    CheckTask(task);
    if (task.d != policy.d() || task.k != policy.k()) {
      throw Error(ErrorCode::kDimensionMismatch, "linear policy vs task");
    }
  }

  std::size_t num_records() const override { return task_.n; }
  std::size_t num_classes() const override { return policy_.k(); }

  std::vector<double> logits() const override {
    std::vector<double> out(task_.n * policy_.k());
    ConstMap x(task_.features.data(), task_.n, task_.d);
    ConstMap w(policy_.weights().data(), policy_.d(), policy_.k());
    MutableMap(out.data(), task_.n, policy_.k()).noalias() =
        (x * w) / policy_.temperature();
    return out;
  }

  std::vector<double> backward(std::span<const double> logit_grad) const override {
    std::vector<double> out(policy_.d() * policy_.k());
    ConstMap x(task_.features.data(), task_.n, task_.d);
    ConstMap g(logit_grad.data(), task_.n, policy_.k());
    MutableMap(out.data(), policy_.d(), policy_.k()).noalias() =
        (x.transpose() * g) / policy_.temperature();
    return out;
  }

  void step(std::span<const double> grad, double learning_rate) override {
    std::vector<double>& w = policy_.mutable_weights();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * grad[i];
  }

 private:
  LinearPolicy& policy_;
  const ToyTask& task_;
};

class BoundTabular : public TrainablePolicy {
 public:
  BoundTabular(TabularPolicy& policy, const ToyTask& task) : policy_(policy) {
    if (task.n != policy.n() || task.k != policy.k()) {
      throw Error(ErrorCode::kDimensionMismatch, "tabular policy vs task");
    }
  }

  std::size_t num_records() const override { return policy_.n(); }
  std::size_t num_classes() const override { return policy_.k(); }
  std::vector<double> logits() const override { return policy_.logits(); }

  std::vector<double> backward(std::span<const double> logit_grad) const override {
    return std::vector<double>(logit_grad.begin(), logit_grad.end());
  }

  void step(std::span<const double> grad, double learning_rate) override {
    const double scale = learning_rate * static_cast<double>(policy_.n());
    std::vector<double>& z = policy_.mutable_logits();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= scale * grad[i];
  }

 private:
  TabularPolicy& policy_;
};

// Softmax of log(c) / T; zero entries stay zero.
void Tempered(std::span<const double> c, double temperature,
              std::span<double> out) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.size(); ++j) {
    out[j] = std::log(c[j]) / temperature;
    hi = std::max(hi, out[j]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

void CheckTemperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kBadTemperature, "temperature must be finite and > 0");
  }
}

}  // namespace

ToyTask gen_toy_task(std::size_t d, std::size_t k, std::size_t n,
                     double teacher_temperature, std::uint64_t seed,
                     double val_fraction) {
  if (d < 1 || k < 2 || n < 1 || !(teacher_temperature > 0.0) ||
      !(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::kBadParams, "invalid toy task parameters");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ToyTask task;
  task.d = d;
  task.k = k;
  task.n = n;
  task.teacher_temperature = teacher_temperature;
  task.teacher.resize(d * k);
  for (double& w : task.teacher) w = normal(rng);
  task.features.resize(n * d);
  for (double& x : task.features) x = normal(rng);

  std::vector<double> z(n * k);
  ConstMap x(task.features.data(), n, d);
  ConstMap w(task.teacher.data(), d, k);
  MutableMap(z.data(), n, k).noalias() = (x * w) / teacher_temperature;
  const std::vector<double> probs = softmax_rows(z, k);

  task.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform(rng);
    double c = 0.0;
    ClassIndex label = k - 1;
    for (ClassIndex j = 0; j < k; ++j) {
      c += probs[i * k + j];
      if (u < c) {
        label = j;
        break;
      }
    }
    task.labels[i] = label;
  }
  const std::size_t n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * val_fraction));
  task.splits.assign(n, Split::kTrain);
  for (std::size_t i = n - n_val; i < n; ++i) task.splits[i] = Split::kVal;
  return task;
}

ToyTask select_split(const ToyTask& task, Split split) {
  CheckTask(task);
  ToyTask out;
  out.d = task.d;
  out.k = task.k;
  out.teacher = task.teacher;
  out.teacher_temperature = task.teacher_temperature;
  for (std::size_t i = 0; i < task.n; ++i) {
    if (task.splits[i] != split) continue;
    out.features.insert(out.features.end(),
                        task.features.begin() + static_cast<std::ptrdiff_t>(i * task.d),
                        task.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * task.d));
    out.labels.push_back(task.labels[i]);
    out.splits.push_back(split);
  }
  out.n = out.labels.size();
  return out;
}

double bayes_accuracy(const ToyTask& task) {
  CheckTask(task);
  if (task.n == 0) throw Error(ErrorCode::kEmptyDataset, "empty task");
  std::vector<double> z(task.n * task.k);
  ConstMap x(task.features.data(), task.n, task.d);
  ConstMap w(task.teacher.data(), task.d, task.k);
  MutableMap(z.data(), task.n, task.k).noalias() = (x * w) / task.teacher_temperature;
  const std::vector<double> probs = softmax_rows(z, task.k);
  double total = 0.0;
  for (std::size_t i = 0; i < task.n; ++i) {
    total += *std::max_element(probs.begin() + static_cast<std::ptrdiff_t>(i * task.k),
                               probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * task.k));
  }
  return total / static_cast<double>(task.n);
}

LinearPolicy::LinearPolicy(std::size_t d, std::size_t k, double temperature)
    : LinearPolicy(d, k, temperature, std::vector<double>(d * k, 0.0)) {}

LinearPolicy::LinearPolicy(std::size_t d, std::size_t k, double temperature,
                           std::vector<double> weights)
    : d_(d), k_(k), temperature_(temperature), weights_(std::move(weights)) {
  if (d_ < 1 || k_ < 2) throw Error(ErrorCode::kBadParams, "policy dimensions");
  CheckTemperature(temperature_);
  if (weights_.size() != d_ * k_) {
    throw Error(ErrorCode::kDimensionMismatch, "weights must be d x k");
  }
}

ConfidenceVector LinearPolicy::forward(std::span<const double> x) const {
  if (x.size() != d_) throw Error(ErrorCode::kDimensionMismatch, "feature size");
  std::vector<double> z(k_, 0.0);
  for (std::size_t i = 0; i < d_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) z[j] += x[i] * weights_[i * k_ + j];
  }
  for (double& v : z) v /= temperature_;
  return ConfidenceVector(softmax_rows(z, k_));
}

TabularPolicy::TabularPolicy(std::size_t n, std::size_t k)
    : TabularPolicy(n, k, std::vector<double>(n * k, 0.0)) {}

TabularPolicy::TabularPolicy(std::size_t n, std::size_t k,
                             std::vector<double> logits)
    : n_(n), k_(k), logits_(std::move(logits)) {
  if (k_ < 2) throw Error(ErrorCode::kBadParams, "policy dimensions");
  if (logits_.size() != n_ * k_) {
    throw Error(ErrorCode::kDimensionMismatch, "logits must be n x k");
  }
}

ConfidenceVector TabularPolicy::forward(std::size_t record) const {
  if (record >= n_) throw Error(ErrorCode::kDimensionMismatch, "record index");
  return ConfidenceVector(softmax_rows(
      std::span<const double>(logits_).subspan(record * k_, k_), k_));
}

std::unique_ptr<TrainablePolicy> bind_policy(Policy& policy, const ToyTask& task) {
  if (auto* lin = std::get_if<LinearPolicy>(&policy)) {
    return std::make_unique<BoundLinear>(*lin, task);
  }
  return std::make_unique<BoundTabular>(std::get<TabularPolicy>(policy), task);
}

Dataset policy_dataset(const Policy& policy, const ToyTask& task) {
  Policy copy = policy;
  return snapshot(*bind_policy(copy, task), task.labels);
}

TabularPolicy to_tabular(const LinearPolicy& policy, const ToyTask& task) {
  LinearPolicy copy = policy;
  return TabularPolicy(task.n, policy.k(), BoundLinear(copy, task).logits());
}

double combined_loss(const Policy& policy, const ToyTask& task,
                     std::span<const double> targets, const LossWeights& weights) {
  Policy copy = policy;
  const std::unique_ptr<TrainablePolicy> bound = bind_policy(copy, task);
  const std::size_t k = bound->num_classes();
  const std::vector<double> probs = softmax_rows(bound->logits(), k);
  std::vector<double> scratch(probs.size());
  return combined_loss_grad(probs, k, task.labels, targets, weights, scratch);
}

std::vector<double> grad_combined(const Policy& policy, const ToyTask& task,
                                  std::span<const double> targets,
                                  const LossWeights& weights) {
  Policy copy = policy;
  const std::unique_ptr<TrainablePolicy> bound = bind_policy(copy, task);
  const std::size_t k = bound->num_classes();
  const std::vector<double> probs = softmax_rows(bound->logits(), k);
  std::vector<double> logit_grad(probs.size());
  combined_loss_grad(probs, k, task.labels, targets, weights, logit_grad);
  std::vector<double> grad = bound->backward(logit_grad);
  for (double v : grad) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteGradient, "gradient");
  }
  return grad;
}

ConfidenceVector apply_temperature(const ConfidenceVector& cv, double temperature) {
  CheckTemperature(temperature);
  if (temperature == 1.0) return cv;
  std::vector<double> out(cv.k());
  Tempered(cv.probs(), temperature, out);
  return ConfidenceVector(std::move(out));
}

Dataset apply_temperature(const Dataset& ds, double temperature) {
  CheckTemperature(temperature);
  if (temperature == 1.0) return ds;
  std::vector<PredictionRecord> records = ds.records();
  for (PredictionRecord& r : records) {
    r.confidences = apply_temperature(r.confidences, temperature);
  }
  return Dataset(std::move(records));
}

TemperatureFit fit_temperature(const Dataset& ds_val, const BinningConfig& binning) {
  if (ds_val.empty()) throw Error(ErrorCode::kEmptyDataset, "validation split is empty");
  const std::size_t n = ds_val.n();
  const std::size_t k = ds_val.k();
  const std::size_t bins = binning.EffectiveBins(n);
  std::vector<double> top(n);
  std::vector<unsigned char> correct(n);
  std::vector<double> scratch(k);

  auto ece_at = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      const PredictionRecord& r = ds_val[i];
      if (t == 1.0) {
        std::copy(r.confidences.probs().begin(), r.confidences.probs().end(),
                  scratch.begin());
      } else {
        Tempered(r.confidences.probs(), t, scratch);
      }
      const ClassIndex j = argmax_option(std::span<const double>(scratch));
      top[i] = scratch[j];
      correct[i] = j == r.label ? 1 : 0;
    }
    return conf_ece_raw(top, correct, bins).ece;
  };

  constexpr int kGridPoints = 400;
  const double log_lo = std::log(0.05);
  const double log_hi = std::log(20.0);
  const double step = (log_hi - log_lo) / (kGridPoints - 1);

  TemperatureFit fit;
  fit.ece_before = ece_at(1.0);
  fit.temperature = 1.0;
  fit.ece_after = fit.ece_before;
  int best_index = -1;
  for (int g = 0; g < kGridPoints; ++g) {
    const double t = std::exp(log_lo + step * g);
    const double e = ece_at(t);
    if (e < fit.ece_after) {
      fit.ece_after = e;
      fit.temperature = t;
      best_index = g;
    }
  }

  // Golden-section search in log T between the neighbours of the best point.
  double a = best_index < 0 ? -step : log_lo + step * std::max(best_index - 1, 0);
  double b = best_index < 0 ? step
                            : log_lo + step * std::min(best_index + 1, kGridPoints - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = ece_at(std::exp(c));
  double fd = ece_at(std::exp(d));
  for (int it = 0; it < 60; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = ece_at(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = ece_at(std::exp(d));
    }
  }
  const double refined = fc <= fd ? c : d;
  const double refined_ece = std::min(fc, fd);
  if (refined_ece < fit.ece_after) {
    fit.ece_after = refined_ece;
    fit.temperature = std::exp(refined);
  }
  return fit;
}

ConfidenceVector label_smooth_targets(ClassIndex label, std::size_t k,
                                      double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kBadEpsilon, "epsilon must lie in [0, 1)");
  }
  if (k < 2 || label >= k) throw Error(ErrorCode::kLabelOutOfRange, "label");
  std::vector<double> t(k, epsilon / static_cast<double>(k - 1));
  t[label] = 1.0 - epsilon;
  return ConfidenceVector(std::move(t));
}

TrainResult train(const Policy& start, const ToyTask& data, const TrainSpec& spec) {
  CheckTask(data);
  const EmConfig& em = spec.em;
  if (em.epochs < 0 || em.inner_steps < 0 || !(em.learning_rate > 0.0)) {
    throw Error(ErrorCode::kBadParams, "invalid training schedule");
  }
  const std::vector<ClassIndex>& labels = data.labels;
  TrainResult result{start, {}};

  auto run_sft = [&](Policy& policy, int epochs, double lr,
                     std::span<const double> soft, int first_epoch,
                     bool record_initial) {
    const std::unique_ptr<TrainablePolicy> bound = bind_policy(policy, data);
    const LossWeights weights{1.0, 0.0, em.divergence};
    if (record_initial) {
      result.history.push_back(evaluate_epoch(*bound, labels, em, first_epoch));
    }
    for (int e = 1; e <= epochs; ++e) {
      try {
        for (int s = 0; s < em.inner_steps; ++s) {
          gradient_step(*bound, labels, {}, weights, lr, soft);
        }
      } catch (const Error& err) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(first_epoch + e) + ": " + err.what());
      }
      result.history.push_back(evaluate_epoch(*bound, labels, em, first_epoch + e));
    }
  };

  switch (spec.mode) {
    case TrainMode::kSftOnly:
      run_sft(result.policy, em.epochs, em.learning_rate, {}, 0, true);
      break;
    case TrainMode::kLabelSmooth: {
      std::vector<double> soft;
      soft.reserve(data.n * data.k);
      for (ClassIndex y : labels) {
        const ConfidenceVector t = label_smooth_targets(y, data.k, spec.epsilon);
        soft.insert(soft.end(), t.probs().begin(), t.probs().end());
      }
      run_sft(result.policy, em.epochs, em.learning_rate, soft, 0, true);
      break;
    }
    case TrainMode::kCft: {
      const std::unique_ptr<TrainablePolicy> bound = bind_policy(result.policy, data);
      result.history = run_em(*bound, labels, em);
      break;
    }
    case TrainMode::kRcft: {
      if (const auto* lin = std::get_if<LinearPolicy>(&result.policy)) {
        result.policy = to_tabular(*lin, data);
      }
      run_sft(result.policy, spec.overfit_epochs, spec.overfit_learning_rate, {}, 0,
              true);
      EmConfig stage = em;
      stage.lambda = 1.0;
      const std::unique_ptr<TrainablePolicy> bound = bind_policy(result.policy, data);
      std::vector<HistoryRow> rows = run_em(*bound, labels, stage);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        rows[r].epoch += spec.overfit_epochs;
        result.history.push_back(rows[r]);
      }
      break;
    }
  }
  return result;
}

ToyStart prepare_toy_start(const ToySetup& setup) {
  const ToyTask task = gen_toy_task(setup.d, setup.k, setup.n,
                                    setup.teacher_temperature, setup.seed,
                                    setup.val_fraction);
  ToyStart start{select_split(task, Split::kTrain), select_split(task, Split::kVal),
                 LinearPolicy(setup.d, setup.k), LinearPolicy(setup.d, setup.k), 0.0};
  start.bayes_accuracy = bayes_accuracy(start.train);

  Policy policy = LinearPolicy(setup.d, setup.k);
  {
    const std::unique_ptr<TrainablePolicy> bound = bind_policy(policy, start.train);
    const LossWeights weights{1.0, 0.0, Divergence::kMse};
    for (int e = 0; e < setup.pretrain_epochs * setup.pretrain_inner_steps; ++e) {
      gradient_step(*bound, start.train.labels, {}, weights,
                    setup.pretrain_learning_rate);
    }
  }
  start.pretrained = std::get<LinearPolicy>(policy);
  std::vector<double> w = start.pretrained.weights();
  for (double& v : w) v *= setup.sharpen;
  start.sharpened = LinearPolicy(setup.d, setup.k, start.pretrained.temperature(),
                                 std::move(w));
  return start;
}

}  // namespace calkit
