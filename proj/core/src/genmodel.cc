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

#include "calkit/genmodel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>
#include <utility>

namespace calkit {
namespace {

std::vector<double> DirichletDraw(std::size_t k, double alpha,
                                  std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> v(k);
  double sum = 0.0;
  do {
    sum = 0.0;
    for (double& x : v) {
      x = gamma(rng);
      sum += x;
    }
  } while (!(sum > 0.0) || !std::isfinite(sum));
  for (double& x : v) x /= sum;
  return v;
}

std::vector<double> OneHot(std::size_t k, ClassIndex j) {
  std::vector<double> v(k, 0.0);
  v[j] = 1.0;
  return v;
}

double ScaledL1(const ConfidenceVector& a, const ConfidenceVector& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.k(); ++j) s += std::abs(a[j] - b[j]);
  return s / static_cast<double>(a.k());
}

ClassIndex ArgminLabel(const ConfidenceVector& cv) {
  ClassIndex best = 0;
  for (ClassIndex j = 1; j < cv.k(); ++j) {
    if (cv[j] < cv[best]) best = j;
  }
  return best;
}

void CheckCovers(const FiniteGenerativeModel& model,
                 const Predictor& predictor) {
  for (const SupportPoint& p : model.support()) {
    if (predictor.At(p.id).k() != model.k()) {
      throw Error(ErrorCode::kDimensionMismatch, "predictor at " + p.id);
    }
  }
}

}  // namespace

FiniteGenerativeModel::FiniteGenerativeModel(std::size_t k,
                                             std::vector<SupportPoint> support)
    : k_(k), support_(std::move(support)) {
  if (k_ < 2) throw Error(ErrorCode::kBadParams, "k must be >= 2");
  if (support_.empty()) throw Error(ErrorCode::kBadParams, "empty support");
  double total = 0.0;
  std::unordered_set<std::string> ids;
  for (const SupportPoint& p : support_) {
    if (!std::isfinite(p.weight) || p.weight < 0.0) {
      throw Error(ErrorCode::kBadParams, "bad weight at " + p.id);
    }
    if (p.label_dist.k() != k_) {
      throw Error(ErrorCode::kBadParams, "label_dist size at " + p.id);
    }
    if (p.id.empty() || !ids.insert(p.id).second) {
      throw Error(ErrorCode::kBadParams, "empty or duplicate id '" + p.id + "'");
    }
    total += p.weight;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::kBadParams, "weights do not sum to one");
  }
}

bool FiniteGenerativeModel::HasDeterministicLabels() const {
  return std::all_of(support_.begin(), support_.end(),
                     [](const SupportPoint& p) { return p.label_dist.max() == 1.0; });
}

void Predictor::Set(const std::string& id, ConfidenceVector cv) {
  map_.insert_or_assign(id, std::move(cv));
}

const ConfidenceVector& Predictor::At(const std::string& id) const {
  auto it = map_.find(id);
  if (it == map_.end()) throw Error(ErrorCode::kUnknownSupportPoint, id);
  return it->second;
}

std::vector<const ConfidenceVector*> Predictor::Aligned(
    const FiniteGenerativeModel& model) const {
  std::vector<const ConfidenceVector*> out;
  out.reserve(model.size());
  for (const SupportPoint& p : model.support()) out.push_back(&At(p.id));
  return out;
}

Predictor OptimalPredictor(const FiniteGenerativeModel& model) {
  Predictor p;
  for (const SupportPoint& s : model.support()) p.Set(s.id, s.label_dist);
  return p;
}

FiniteGenerativeModel WithLabelDist(const FiniteGenerativeModel& model,
                                    const Predictor& predictor) {
  CheckCovers(model, predictor);
  std::vector<SupportPoint> support = model.support();
  for (SupportPoint& p : support) p.label_dist = predictor.At(p.id);
  return FiniteGenerativeModel(model.k(), std::move(support));
}

const char* ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPureRandom: return "pure-random";
    case ModelKind::kDeterministic: return "deterministic";
    case ModelKind::kDirichlet: return "dirichlet";
  }
  return "pure-random";
}

std::optional<ModelKind> ParseModelKind(const std::string& name) {
  if (name == "pure-random") return ModelKind::kPureRandom;
  if (name == "deterministic") return ModelKind::kDeterministic;
  if (name == "dirichlet") return ModelKind::kDirichlet;
  return std::nullopt;
}

FiniteGenerativeModel make_model(ModelKind kind, std::size_t k,
                                 std::size_t n_support,
                                 const ModelParams& params,
                                 std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kBadParams, "k must be >= 2");
  if (n_support < 1) throw Error(ErrorCode::kBadParams, "n_support must be >= 1");
  if (kind == ModelKind::kDirichlet &&
      !(params.concentration > 0.0 && std::isfinite(params.concentration))) {
    throw Error(ErrorCode::kBadParams, "concentration must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::vector<double> weights =
      params.random_weights
          ? DirichletDraw(n_support, 1.0, rng)
          : std::vector<double>(n_support, 1.0 / static_cast<double>(n_support));

  std::vector<SupportPoint> support;
  support.reserve(n_support);
  for (std::size_t i = 0; i < n_support; ++i) {
    std::vector<double> dist;
    switch (kind) {
      case ModelKind::kPureRandom:
        dist.assign(k, 1.0 / static_cast<double>(k));
        break;
      case ModelKind::kDeterministic:
        dist = OneHot(k, i % k);
        break;
      case ModelKind::kDirichlet:
        dist = DirichletDraw(k, params.concentration, rng);
        break;
    }
    support.push_back({"x" + std::to_string(i), weights[i],
                       ConfidenceVector(std::move(dist))});
  }
  return FiniteGenerativeModel(k, std::move(support));
}

Dataset sample_dataset(const FiniteGenerativeModel& model,
                       const Predictor& predictor, std::size_t n,
                       std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kBadParams, "n must be >= 1");
  CheckCovers(model, predictor);
  const std::vector<const ConfidenceVector*> preds = predictor.Aligned(model);

  std::vector<double> cumulative(model.size());
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    acc += model[i].weight;
    cumulative[i] = acc;
    if (model[i].weight > 0.0) last_positive = i;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<PredictionRecord> records;
  records.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = uniform(rng) * acc;
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    if (i > last_positive) i = last_positive;
    while (model[i].weight <= 0.0) ++i;

    const ConfidenceVector& dist = model[i].label_dist;
    const double v = uniform(rng);
    ClassIndex label = argmax_option(dist);
    double c = 0.0;
    for (ClassIndex j = 0; j < dist.k(); ++j) {
      if (dist[j] <= 0.0) continue;
      c += dist[j];
      label = j;
      if (v < c) break;
    }
    records.push_back({"s" + std::to_string(s), *preds[i], label, std::nullopt});
  }
  return Dataset(std::move(records));
}

double population_accuracy(const FiniteGenerativeModel& model,
                           const Predictor& predictor) {
  double acc = 0.0;
  for (const SupportPoint& p : model.support()) {
    acc += p.weight * p.label_dist[argmax_option(predictor.At(p.id))];
  }
  return acc;
}

double tce(const FiniteGenerativeModel& model, const Predictor& predictor) {
  CheckCovers(model, predictor);
  double total = 0.0;
  for (const SupportPoint& p : model.support()) {
    total += p.weight * ScaledL1(p.label_dist, predictor.At(p.id));
  }
  return total;
}

double population_cw_ece(const FiniteGenerativeModel& model,
                         const Predictor& predictor) {
  CheckCovers(model, predictor);
  const std::size_t k = model.k();
  double total = 0.0;
  for (ClassIndex j = 0; j < k; ++j) {
    // Group mass and label mass by the exact predicted value for class j.
    std::map<double, std::pair<double, double>> groups;
    for (const SupportPoint& p : model.support()) {
      auto& g = groups[predictor.At(p.id)[j]];
      g.first += p.weight;
      g.second += p.weight * p.label_dist[j];
    }
    for (const auto& [value, g] : groups) {
      total += std::abs(g.second - value * g.first);
    }
  }
  return total / static_cast<double>(k);
}

Predictor make_target_predictor(const FiniteGenerativeModel& model,
                                double acc_star,
                                std::optional<std::uint64_t> shape_seed) {
  if (!(acc_star >= 0.0 && acc_star <= 1.0)) {
    throw Error(ErrorCode::kBadParams, "acc_star outside [0, 1]");
  }
  const std::size_t k = model.k();
  std::vector<ClassIndex> predicted(model.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    predicted[i] = ArgminLabel(model[i].label_dist);
    acc += model[i].weight * model[i].label_dist[predicted[i]];
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const ConfidenceVector& dist = model[i].label_dist;
    const ClassIndex modal = argmax_option(dist);
    const double step = model[i].weight * (dist[modal] - dist[predicted[i]]);
    if (std::abs(acc + step - acc_star) < std::abs(acc - acc_star)) {
      acc += step;
      predicted[i] = modal;
    }
  }

  std::optional<std::mt19937_64> rng;
  if (shape_seed) rng.emplace(*shape_seed);
  const double top =
      std::min(1.0, std::max(acc_star, 1.0 / static_cast<double>(k) + 0.01));
  Predictor out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    std::vector<double> v;
    if (rng) {
      v = DirichletDraw(k, 1.0, *rng);
      const ClassIndex hi = argmax_option(std::span<const double>(v));
      std::swap(v[hi], v[predicted[i]]);
    } else {
      v.assign(k, (1.0 - top) / static_cast<double>(k - 1));
      v[predicted[i]] = top;
    }
    out.Set(model[i].id, ConfidenceVector(std::move(v)));
  }
  return out;
}

Predictor construct_bound_predictor(const FiniteGenerativeModel& model,
                                    const Predictor& pi_star,
                                    double target_acc) {
  if (!(target_acc >= 0.0 && target_acc <= 1.0)) {
    throw Error(ErrorCode::kBadParams, "target accuracy outside [0, 1]");
  }
  CheckCovers(model, pi_star);
  const std::size_t k = model.k();
  const double acc_star = population_accuracy(model, pi_star);
  const bool raise = target_acc >= acc_star;

  struct Candidate {
    std::size_t index;
    ClassIndex to;
    double delta;
  };
  std::vector<Candidate> candidates;
  double available = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const SupportPoint& p = model[i];
    if (p.weight <= 0.0) continue;
    const ConfidenceVector& ref = pi_star.At(p.id);
    const ClassIndex c = argmax_option(ref);
    ClassIndex to;
    if (raise) {
      to = argmax_option(p.label_dist);
    } else {
      to = c == 0 ? 1 : 0;
    }
    const double delta = p.weight * (p.label_dist[to] - p.label_dist[c]);
    const double cost = p.weight * 2.0 * (1.0 - ref[to]) / static_cast<double>(k);
    const bool moves = raise ? delta > 0.0 : delta < 0.0;
    if (!moves || cost > 2.0 * std::abs(delta)) continue;
    candidates.push_back({i, to, delta});
    available += std::abs(delta);
  }
  if (std::abs(target_acc - acc_star) > available + 1e-12) {
    throw Error(ErrorCode::kUnreachableAccuracy,
                "target " + std::to_string(target_acc) + " is " +
                    std::to_string(std::abs(target_acc - acc_star)) +
                    " away from " + std::to_string(acc_star) +
                    " but only " + std::to_string(available) +
                    " mass can move");
  }

  Predictor out = pi_star;
  double acc = acc_star;
  for (const Candidate& cand : candidates) {
    if (std::abs(acc + cand.delta - target_acc) < std::abs(acc - target_acc)) {
      acc += cand.delta;
      out.Set(model[cand.index].id, ConfidenceVector(OneHot(k, cand.to)));
    }
  }
  return out;
}

LowerBoundCheck lower_bound_constant(const FiniteGenerativeModel& model,
                                     const Predictor& pi_star,
                                     const Predictor& pi) {
  CheckCovers(model, pi_star);
  CheckCovers(model, pi);
  double min_gap = std::numeric_limits<double>::infinity();
  for (const SupportPoint& p : model.support()) {
    if (p.weight <= 0.0) continue;
    const ConfidenceVector& a = pi_star.At(p.id);
    const ConfidenceVector& b = pi.At(p.id);
    if (argmax_option(a) == argmax_option(b)) continue;
    double gap = 0.0;
    for (std::size_t j = 0; j < a.k(); ++j) {
      gap = std::max(gap, std::abs(a[j] - b[j]));
    }
    min_gap = std::min(min_gap, gap);
  }
  if (!std::isfinite(min_gap)) {
    throw Error(ErrorCode::kNoDisagreement, "argmaxes agree on the support");
  }
  LowerBoundCheck out;
  out.C = min_gap / static_cast<double>(model.k());
  out.tce = tce(WithLabelDist(model, pi_star), pi);
  out.acc_star = population_accuracy(model, pi_star);
  out.acc = population_accuracy(model, pi);
  out.holds = out.tce >= out.C * std::abs(out.acc_star - out.acc);
  return out;
}

EceTceCheck verify_ece_le_tce(const FiniteGenerativeModel& model,
                              const Predictor& predictor) {
  EceTceCheck out;
  out.cw_ece_pop = population_cw_ece(model, predictor);
  out.tce = tce(model, predictor);
  out.holds = out.cw_ece_pop <= out.tce + 1e-12;
  return out;
}

const char* RegimeName(Regime regime) {
  return regime == Regime::kCalibratable ? "calibratable" : "non-calibratable";
}

RegimeClassification classify_regime(double acc, double acc_star) {
  if (!(acc >= 0.0 && acc <= 1.0 && acc_star >= 0.0 && acc_star <= 1.0)) {
    throw Error(ErrorCode::kBadParams, "accuracies must lie in [0, 1]");
  }
  RegimeClassification out;
  out.acc = acc;
  out.acc_star = acc_star;
  out.regime = acc <= acc_star ? Regime::kCalibratable : Regime::kNonCalibratable;
  out.ece_upper = 2.0 * std::abs(acc_star - acc);
  out.ece_lower = 0.0;
  out.ece_lower_strictly_positive = out.regime == Regime::kNonCalibratable;
  return out;
}

}  // namespace calkit
