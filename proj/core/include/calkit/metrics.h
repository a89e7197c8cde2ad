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

#ifndef CALKIT_METRICS_H_
#define CALKIT_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calkit/core.h"
#include "calkit/genmodel.h"

namespace calkit {

struct BinStats {
  std::size_t m = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_conf = 0.0;
  double empirical_freq = 0.0;

  friend bool operator==(const BinStats&, const BinStats&) = default;
};

struct EceResult {
  double ece;
  std::vector<BinStats> bins;
};

struct ClasswiseEceResult {
  double ece;
  std::vector<std::vector<BinStats>> per_class;
};

double accuracy(const Dataset& ds);

// Binned over max confidence; correctness uses argmax_option.
EceResult conf_ece(const Dataset& ds, const BinningConfig& binning);

// conf-ECE from per-record max confidence and correctness flags.
EceResult conf_ece_raw(std::span<const double> top_conf,
                       std::span<const unsigned char> correct, std::size_t bins);

// Per class j, binned over the predicted probability of j.
ClasswiseEceResult cw_ece(const Dataset& ds, const BinningConfig& binning);

// Groups support points by their exact predicted vector.
double mc_ece_population(const FiniteGenerativeModel& model,
                         const Predictor& predictor);

enum class DiagramMode { kConfidence, kClasswiseMerged, kPerClass };

struct DiagramRow {
  BinStats bin;
  double density;
};

// kClasswiseMerged pools the k per-class tables, so densities there are
// relative to n * k.
std::vector<DiagramRow> reliability_diagram(const Dataset& ds,
                                            const BinningConfig& binning,
                                            DiagramMode mode,
                                            ClassIndex cls = 0);

struct PairwisePreferenceRecord {
  std::string id;
  double logp_chosen;
  double logp_reject;
};

// Ties count as losses.
double win_rate(std::span<const PairwisePreferenceRecord> pairs);

double sequence_logprob(std::span<const double> token_logps);

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t M = 0;
  double accuracy = 0.0;
  double conf_ece = 0.0;
  double cw_ece = 0.0;
  std::vector<BinStats> conf_bins;
  std::vector<std::vector<BinStats>> classwise_bins;
  std::optional<std::string> regime;

  friend bool operator==(const CalibrationReport&,
                         const CalibrationReport&) = default;
};

CalibrationReport evaluate(const Dataset& ds, const BinningConfig& binning);

}  // namespace calkit

#endif  // CALKIT_METRICS_H_
