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

#include "calkit/metrics.h"

#include <cmath>
#include <map>

namespace calkit {
namespace {

void RequireNonEmpty(const Dataset& ds) {
  if (ds.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset has no records");
}

class BinAccumulator {
 public:
  explicit BinAccumulator(std::size_t bins)
      : bins_(bins), count_(bins, 0), conf_(bins, 0.0), hits_(bins, 0.0) {}

  void Add(double value, bool hit) {
    const std::size_t m = bin_index(value, bins_) - 1;
    ++count_[m];
    conf_[m] += value;
    if (hit) hits_[m] += 1.0;
  }

  std::vector<BinStats> Table() const {
    std::vector<BinStats> out(bins_);
    const double M = static_cast<double>(bins_);
    for (std::size_t m = 0; m < bins_; ++m) {
      BinStats& b = out[m];
      b.m = m + 1;
      b.lo = static_cast<double>(m) / M;
      b.hi = static_cast<double>(m + 1) / M;
      b.count = count_[m];
      if (count_[m] > 0) {
        const double c = static_cast<double>(count_[m]);
        b.mean_conf = conf_[m] / c;
        b.empirical_freq = hits_[m] / c;
      }
    }
    return out;
  }

 private:
  std::size_t bins_;
  std::vector<std::size_t> count_;
  std::vector<double> conf_;
  std::vector<double> hits_;
};

double WeightedGap(const std::vector<BinStats>& table, std::size_t n) {
  double total = 0.0;
  for (const BinStats& b : table) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) *
             std::abs(b.empirical_freq - b.mean_conf);
  }
  return total;
}

std::vector<BinStats> ClassTable(const Dataset& ds, std::size_t bins,
                                 ClassIndex j) {
  BinAccumulator acc(bins);
  for (const PredictionRecord& r : ds.records()) {
    acc.Add(r.confidences[j], r.label == j);
  }
  return acc.Table();
}

std::vector<DiagramRow> WithDensity(const std::vector<BinStats>& table,
                                    double total) {
  std::vector<DiagramRow> rows;
  rows.reserve(table.size());
  for (const BinStats& b : table) {
    rows.push_back({b, static_cast<double>(b.count) / total});
  }
  return rows;
}

}  // namespace

double accuracy(const Dataset& ds) {
  RequireNonEmpty(ds);
  std::size_t hits = 0;
  for (const PredictionRecord& r : ds.records()) {
    if (argmax_option(r.confidences) == r.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.n());
}

EceResult conf_ece_raw(std::span<const double> top_conf,
                       std::span<const unsigned char> correct, std::size_t bins) {
  if (top_conf.empty()) throw Error(ErrorCode::kEmptyDataset, "no records");
  if (correct.size() != top_conf.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "correctness flags");
  }
  BinAccumulator acc(bins);
  for (std::size_t i = 0; i < top_conf.size(); ++i) {
    acc.Add(top_conf[i], correct[i] != 0);
  }
  EceResult out;
  out.bins = acc.Table();
  out.ece = WeightedGap(out.bins, top_conf.size());
  return out;
}

EceResult conf_ece(const Dataset& ds, const BinningConfig& binning) {
  RequireNonEmpty(ds);
  std::vector<double> top_conf;
  std::vector<unsigned char> correct;
  top_conf.reserve(ds.n());
  correct.reserve(ds.n());
  for (const PredictionRecord& r : ds.records()) {
    const ClassIndex top = argmax_option(r.confidences);
    top_conf.push_back(r.confidences[top]);
    correct.push_back(top == r.label ? 1 : 0);
  }
  return conf_ece_raw(top_conf, correct, binning.EffectiveBins(ds.n()));
}

ClasswiseEceResult cw_ece(const Dataset& ds, const BinningConfig& binning) {
  RequireNonEmpty(ds);
  const std::size_t bins = binning.EffectiveBins(ds.n());
  ClasswiseEceResult out;
  out.ece = 0.0;
  for (ClassIndex j = 0; j < ds.k(); ++j) {
    out.per_class.push_back(ClassTable(ds, bins, j));
    out.ece += WeightedGap(out.per_class.back(), ds.n());
  }
  out.ece /= static_cast<double>(ds.k());
  return out;
}

double mc_ece_population(const FiniteGenerativeModel& model,
                         const Predictor& predictor) {
  const std::size_t k = model.k();
  struct Group {
    double mass = 0.0;
    std::vector<double> label_mass;
  };
  std::map<std::vector<double>, Group> groups;
  for (const SupportPoint& p : model.support()) {
    const ConfidenceVector& q = predictor.At(p.id);
    if (q.k() != k) throw Error(ErrorCode::kDimensionMismatch, p.id);
    Group& g = groups[q.probs()];
    if (g.label_mass.empty()) g.label_mass.assign(k, 0.0);
    g.mass += p.weight;
    for (std::size_t j = 0; j < k; ++j) {
      g.label_mass[j] += p.weight * p.label_dist[j];
    }
  }
  double total = 0.0;
  for (const auto& [q, g] : groups) {
    if (g.mass <= 0.0) continue;
    double gap = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      gap += std::abs(g.label_mass[j] / g.mass - q[j]);
    }
    total += g.mass * gap / static_cast<double>(k);
  }
  return total;
}

std::vector<DiagramRow> reliability_diagram(const Dataset& ds,
                                            const BinningConfig& binning,
                                            DiagramMode mode,
                                            ClassIndex cls) {
  RequireNonEmpty(ds);
  const double n = static_cast<double>(ds.n());
  switch (mode) {
    case DiagramMode::kConfidence:
      return WithDensity(conf_ece(ds, binning).bins, n);
    case DiagramMode::kPerClass:
      if (cls >= ds.k()) throw Error(ErrorCode::kLabelOutOfRange, "class index");
      return WithDensity(ClassTable(ds, binning.EffectiveBins(ds.n()), cls), n);
    case DiagramMode::kClasswiseMerged:
      break;
  }
  const ClasswiseEceResult cw = cw_ece(ds, binning);
  std::vector<BinStats> merged = cw.per_class.front();
  for (BinStats& b : merged) {
    b.count = 0;
    b.mean_conf = 0.0;
    b.empirical_freq = 0.0;
  }
  for (const std::vector<BinStats>& table : cw.per_class) {
    for (std::size_t m = 0; m < table.size(); ++m) {
      const double c = static_cast<double>(table[m].count);
      merged[m].count += table[m].count;
      merged[m].mean_conf += c * table[m].mean_conf;
      merged[m].empirical_freq += c * table[m].empirical_freq;
    }
  }
  for (BinStats& b : merged) {
    if (b.count == 0) continue;
    b.mean_conf /= static_cast<double>(b.count);
    b.empirical_freq /= static_cast<double>(b.count);
  }
  return WithDensity(merged, n * static_cast<double>(ds.k()));
}

double win_rate(std::span<const PairwisePreferenceRecord> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no preference pairs");
  std::size_t wins = 0;
  for (const PairwisePreferenceRecord& p : pairs) {
    if (!std::isfinite(p.logp_chosen) || !std::isfinite(p.logp_reject)) {
      throw Error(ErrorCode::kNonFiniteInput, "pair " + p.id);
    }
    if (p.logp_chosen > p.logp_reject) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(pairs.size());
}

double sequence_logprob(std::span<const double> token_logps) {
  double total = 0.0;
  for (double lp : token_logps) {
    if (!std::isfinite(lp)) {
      throw Error(ErrorCode::kNonFiniteInput, "token log-probability");
    }
    total += lp;
  }
  return total;
}

CalibrationReport evaluate(const Dataset& ds, const BinningConfig& binning) {
  RequireNonEmpty(ds);
  CalibrationReport r;
  r.n = ds.n();
  r.k = ds.k();
  r.M = binning.EffectiveBins(ds.n());
  r.accuracy = accuracy(ds);
  EceResult conf = conf_ece(ds, binning);
  ClasswiseEceResult cw = cw_ece(ds, binning);
  r.conf_ece = conf.ece;
  r.cw_ece = cw.ece;
  r.conf_bins = std::move(conf.bins);
  r.classwise_bins = std::move(cw.per_class);
  return r;
}

}  // namespace calkit
