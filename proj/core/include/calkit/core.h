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

#ifndef CALKIT_CORE_H_
#define CALKIT_CORE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calkit/error.h"

namespace calkit {

using ClassIndex = std::size_t;

// Entries of a stored vector must sum to one within this tolerance.
inline constexpr double kSimplexTolerance = 1e-9;
// Ingested vectors within this tolerance are renormalized instead of rejected.
inline constexpr double kIngestTolerance = 1e-6;

// A point on the probability simplex over k >= 2 classes.
class ConfidenceVector {
 public:
  // Throws Error(kInvalidVector) unless the invariants hold.
  explicit ConfidenceVector(std::vector<double> probs);

  std::size_t k() const { return probs_.size(); }
  double operator[](std::size_t j) const { return probs_[j]; }
  const std::vector<double>& probs() const { return probs_; }
  double max() const;

  friend bool operator==(const ConfidenceVector&,
                         const ConfidenceVector&) = default;

 private:
  std::vector<double> probs_;
};

enum class Split { kTrain, kVal, kTest };

const char* SplitName(Split split);
std::optional<Split> ParseSplit(const std::string& name);

struct PredictionRecord {
  std::string id;
  ConfidenceVector confidences;
  ClassIndex label;
  std::optional<Split> split;

  friend bool operator==(const PredictionRecord&,
                         const PredictionRecord&) = default;
};

// Records sharing one class count, with unique nonempty ids.
class Dataset {
 public:
  Dataset() = default;
  // Throws on mixed k, bad labels, empty or duplicate ids.
  explicit Dataset(std::vector<PredictionRecord> records);

  std::size_t n() const { return records_.size(); }
  std::size_t k() const { return k_; }
  bool empty() const { return records_.empty(); }
  const std::vector<PredictionRecord>& records() const { return records_; }
  const PredictionRecord& operator[](std::size_t i) const {
    return records_[i];
  }

 private:
  std::vector<PredictionRecord> records_;
  std::size_t k_ = 0;
};

enum class BinStrategy { kFixed, kCubeRoot };

struct BinningConfig {
  std::size_t bins = 10;
  BinStrategy strategy = BinStrategy::kFixed;

  // Bin count used for a dataset of n records.
  std::size_t EffectiveBins(std::size_t n) const;
};

// max(1, round(n^(1/3))).
std::size_t CubeRootBins(std::size_t n);

ConfidenceVector normalize_options(std::span<const double> raw_scores);

// Lowest index attaining the maximum.
ClassIndex argmax_option(const ConfidenceVector& cv);
ClassIndex argmax_option(std::span<const double> values);

// Bin m in [1, M] with value in ((m-1)/M, m/M]; zero folds into bin 1.
std::size_t bin_index(double value, std::size_t bins);

// Loosely typed record as it arrives from an external source.
struct RawRecord {
  std::optional<std::string> id;
  std::optional<std::vector<double>> confidences;
  std::optional<std::int64_t> label;
  std::optional<std::string> split;
};

struct Violation {
  std::size_t index;
  ErrorCode code;
  std::string reason;
};

struct ValidationResult {
  std::optional<Dataset> dataset;
  std::vector<Violation> violations;

  bool ok() const { return dataset.has_value(); }
};

ValidationResult validate_dataset(std::span<const RawRecord> raw);

}  // namespace calkit

#endif  // CALKIT_CORE_H_
