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

#include "calkit/emcal.h"

#include <algorithm>
#include <cmath>

#include "calkit/metrics.h"

namespace calkit {
namespace {

std::vector<double> FlattenTargets(const std::vector<TargetDistribution>& ts,
                                   std::size_t k) {
  std::vector<double> flat;
  flat.reserve(ts.size() * k);
  for (const TargetDistribution& t : ts) {
    flat.insert(flat.end(), t.probs.probs().begin(), t.probs.probs().end());
  }
  return flat;
}

std::vector<double> CurrentTargets(const Dataset& snap, const EmConfig& cfg) {
  const LatentAssignment z = e_step(snap, cfg.bins);
  const BinAccuracy qs = m_step(snap, z, cfg.min_bin_count);
  return FlattenTargets(build_all_targets(snap, qs, z), snap.k());
}

}  // namespace

const char* DivergenceName(Divergence d) {
  return d == Divergence::kMse ? "mse" : "ce";
}

std::optional<Divergence> ParseDivergence(const std::string& name) {
  if (name == "mse") return Divergence::kMse;
  if (name == "ce" || name == "cross-entropy") return Divergence::kCrossEntropy;
  return std::nullopt;
}

LatentAssignment e_step(const Dataset& snapshot, std::size_t bins) {
  LatentAssignment out;
  out.bins = bins;
  out.z.reserve(snapshot.n());
  for (const PredictionRecord& r : snapshot.records()) {
    out.z.push_back(bin_index(r.confidences.max(), bins));
  }
  return out;
}

BinAccuracy m_step(const Dataset& snapshot, const LatentAssignment& z,
                   std::size_t min_bin_count) {
  if (z.z.size() != snapshot.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment size");
  }
  std::vector<std::size_t> wins(z.bins, 0);
  BinAccuracy out;
  out.counts.assign(z.bins, 0);
  out.q.assign(z.bins, std::nullopt);
  for (std::size_t i = 0; i < snapshot.n(); ++i) {
    const PredictionRecord& r = snapshot[i];
    const std::size_t m = z.z[i] - 1;
    ++out.counts[m];
    if (argmax_option(r.confidences) == r.label) ++wins[m];
  }
  for (std::size_t m = 0; m < z.bins; ++m) {
    const double c = static_cast<double>(out.counts[m]);
    const double w = static_cast<double>(wins[m]);
    if (out.counts[m] == 0) continue;
    out.q[m] = out.counts[m] < min_bin_count ? (w + 1.0) / (c + 2.0) : w / c;
  }
  return out;
}

double clamp_bin_accuracy(double q) {
  return std::clamp(q, kMinBinAccuracy, kMaxBinAccuracy);
}

std::vector<TargetDistribution> build_all_targets(const Dataset& snapshot,
                                                  const BinAccuracy& qs,
                                                  const LatentAssignment& z) {
  std::vector<TargetDistribution> out;
  out.reserve(snapshot.n());
  for (std::size_t i = 0; i < snapshot.n(); ++i) {
    const std::optional<double>& q = qs.q.at(z.z[i] - 1);
    if (!q) throw Error(ErrorCode::kBadQ, "no estimate for an occupied bin");
    out.push_back(build_target(snapshot[i].confidences, clamp_bin_accuracy(*q)));
  }
  return out;
}

double ece_loss(std::span<const double> target, std::span<const double> conf,
                Divergence divergence) {
  if (target.size() != conf.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "target and confidence sizes");
  }
  double total = 0.0;
  if (divergence == Divergence::kMse) {
    for (std::size_t j = 0; j < conf.size(); ++j) {
      const double d = target[j] - conf[j];
      total += d * d;
    }
    return total / static_cast<double>(conf.size());
  }
  for (std::size_t j = 0; j < conf.size(); ++j) {
    total -= target[j] * std::log(std::max(conf[j], kLogFloor));
  }
  return total;
}

double ece_loss(const TargetDistribution& target, const ConfidenceVector& conf,
                Divergence divergence) {
  return ece_loss(target.probs.probs(), conf.probs(), divergence);
}

double sft_loss(std::span<const double> conf, ClassIndex label) {
  return -std::log(std::max(conf[label], kLogFloor));
}

double sft_loss(const ConfidenceVector& conf, ClassIndex label) {
  if (label >= conf.k()) throw Error(ErrorCode::kLabelOutOfRange, "label");
  return sft_loss(conf.probs(), label);
}

std::vector<double> softmax_rows(std::span<const double> logits, std::size_t k) {
  std::vector<double> out(logits.size());
  for (std::size_t base = 0; base < logits.size(); base += k) {
    double hi = logits[base];
    for (std::size_t j = 1; j < k; ++j) hi = std::max(hi, logits[base + j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[base + j] = std::exp(logits[base + j] - hi);
      sum += out[base + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[base + j] /= sum;
  }
  return out;
}

double combined_loss_grad(std::span<const double> probs, std::size_t k,
                          std::span<const ClassIndex> labels,
                          std::span<const double> targets,
                          const LossWeights& weights,
                          std::span<double> logit_grad,
                          std::span<const double> soft_labels) {
  const std::size_t n = labels.size();
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no records");
  if (probs.size() != n * k || logit_grad.size() != n * k) {
    throw Error(ErrorCode::kDimensionMismatch, "probability matrix size");
  }
  const bool use_ece = weights.lambda != 0.0;
  if (use_ece && targets.size() != n * k) {
    throw Error(ErrorCode::kDimensionMismatch, "target matrix size");
  }
  if (!soft_labels.empty() && soft_labels.size() != n * k) {
    throw Error(ErrorCode::kDimensionMismatch, "soft label matrix size");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> g(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> c = probs.subspan(i * k, k);
    std::span<double> out = logit_grad.subspan(i * k, k);
    double loss = 0.0;
    if (soft_labels.empty()) {
      loss = sft_loss(c, labels[i]);
      for (std::size_t j = 0; j < k; ++j) {
        out[j] = weights.sft_weight * (c[j] - (j == labels[i] ? 1.0 : 0.0));
      }
    } else {
      const std::span<const double> t = soft_labels.subspan(i * k, k);
      for (std::size_t j = 0; j < k; ++j) {
        loss -= t[j] * std::log(std::max(c[j], kLogFloor));
        out[j] = weights.sft_weight * (c[j] - t[j]);
      }
    }
    loss *= weights.sft_weight;
    if (use_ece) {
      const std::span<const double> p = targets.subspan(i * k, k);
      loss += weights.lambda * ece_loss(p, c, weights.divergence);
      // dL/dc, then through the softmax Jacobian: c * (g - <c, g>).
      for (std::size_t j = 0; j < k; ++j) {
        if (weights.divergence == Divergence::kMse) {
          g[j] = -2.0 / static_cast<double>(k) * (p[j] - c[j]);
        } else {
          g[j] = c[j] < kLogFloor ? 0.0 : -p[j] / c[j];
        }
      }
      double cg = 0.0;
      for (std::size_t j = 0; j < k; ++j) cg += c[j] * g[j];
      for (std::size_t j = 0; j < k; ++j) {
        out[j] += weights.lambda * c[j] * (g[j] - cg);
      }
    }
    for (std::size_t j = 0; j < k; ++j) out[j] *= inv_n;
    total += loss;
  }
  const double mean = total * inv_n;
  if (!std::isfinite(mean)) throw Error(ErrorCode::kNonFiniteLoss, "combined loss");
  return mean;
}

Dataset snapshot(const TrainablePolicy& policy,
                 std::span<const ClassIndex> labels) {
  const std::size_t k = policy.num_classes();
  if (labels.size() != policy.num_records()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels and policy records");
  }
  const std::vector<double> probs = softmax_rows(policy.logits(), k);
  std::vector<PredictionRecord> records;
  records.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> row(probs.begin() + static_cast<std::ptrdiff_t>(i * k),
                            probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteLoss, "policy produced non-finite output");
      }
    }
    records.push_back({"r" + std::to_string(i), ConfidenceVector(std::move(row)),
                       labels[i], std::nullopt});
  }
  return Dataset(std::move(records));
}

HistoryRow evaluate_epoch(const TrainablePolicy& policy,
                          std::span<const ClassIndex> labels,
                          const EmConfig& cfg, int epoch) {
  const Dataset snap = snapshot(policy, labels);
  const BinningConfig binning{cfg.bins, BinStrategy::kFixed};
  HistoryRow row;
  row.epoch = epoch;
  row.acc = accuracy(snap);
  row.conf_ece = conf_ece(snap, binning).ece;
  row.cw_ece = cw_ece(snap, binning).ece;
  const std::size_t k = snap.k();
  const std::vector<double> targets = CurrentTargets(snap, cfg);
  double sft = 0.0;
  double ece = 0.0;
  for (std::size_t i = 0; i < snap.n(); ++i) {
    const std::vector<double>& c = snap[i].confidences.probs();
    sft += sft_loss(c, labels[i]);
    ece += ece_loss(std::span<const double>(targets).subspan(i * k, k), c,
                    cfg.divergence);
  }
  row.mean_sft = sft / static_cast<double>(snap.n());
  row.mean_ece = ece / static_cast<double>(snap.n());
  return row;
}

double gradient_step(TrainablePolicy& policy,
                     std::span<const ClassIndex> labels,
                     std::span<const double> targets, const LossWeights& weights,
                     double learning_rate,
                     std::span<const double> soft_labels) {
  const std::size_t k = policy.num_classes();
  const std::vector<double> probs = softmax_rows(policy.logits(), k);
  std::vector<double> logit_grad(probs.size());
  const double loss = combined_loss_grad(probs, k, labels, targets, weights,
                                         logit_grad, soft_labels);
  const std::vector<double> grad = policy.backward(logit_grad);
  for (double v : grad) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteGradient, "policy gradient");
    }
  }
  policy.step(grad, learning_rate);
  return loss;
}

std::vector<HistoryRow> run_em(TrainablePolicy& policy,
                               std::span<const ClassIndex> labels,
                               const EmConfig& cfg) {
  if (cfg.epochs < 0 || cfg.inner_steps < 0 || cfg.bins < 1 ||
      cfg.lambda < 0.0 || !(cfg.learning_rate > 0.0) || cfg.min_bin_count < 1) {
    throw Error(ErrorCode::kBadParams, "invalid EM configuration");
  }
  const LossWeights weights{cfg.sft_weight, cfg.lambda, cfg.divergence};
  std::vector<HistoryRow> history;
  history.push_back(evaluate_epoch(policy, labels, cfg, 0));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    try {
      const std::vector<double> targets =
          CurrentTargets(snapshot(policy, labels), cfg);
      for (int s = 0; s < cfg.inner_steps; ++s) {
        gradient_step(policy, labels, targets, weights, cfg.learning_rate);
      }
      history.push_back(evaluate_epoch(policy, labels, cfg, epoch));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteLoss &&
          e.code() != ErrorCode::kNonFiniteGradient &&
          e.code() != ErrorCode::kInvalidVector) {
        throw;
      }
      throw Error(ErrorCode::kNonFiniteLoss,
                  "epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  return history;
}

}  // namespace calkit
