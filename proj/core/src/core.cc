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

#include "calkit/core.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>

namespace calkit {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidVector: return "InvalidVector";
    case ErrorCode::kAllZeroScores: return "AllZeroScores";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kSimplexViolation: return "SimplexViolation";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kUnknownSupportPoint: return "UnknownSupportPoint";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kUnreachableAccuracy: return "UnreachableAccuracy";
    case ErrorCode::kNoDisagreement: return "NoDisagreement";
    case ErrorCode::kDegenerateTail: return "DegenerateTail";
    case ErrorCode::kBadQ: return "BadQ";
    case ErrorCode::kNegativeBeta: return "NegativeBeta";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBadTemperature: return "BadTemperature";
    case ErrorCode::kBadEpsilon: return "BadEpsilon";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

ConfidenceVector::ConfidenceVector(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw Error(ErrorCode::kInvalidVector, "need at least two classes");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::kInvalidVector, "entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::kInvalidVector, "entries do not sum to one");
  }
}

double ConfidenceVector::max() const {
  return *std::max_element(probs_.begin(), probs_.end());
}

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

Dataset::Dataset(std::vector<PredictionRecord> records)
    : records_(std::move(records)) {
  if (records_.empty()) return;
  k_ = records_.front().confidences.k();
  std::unordered_set<std::string> seen;
  seen.reserve(records_.size());
  for (const PredictionRecord& r : records_) {
    if (r.confidences.k() != k_) {
      throw Error(ErrorCode::kSchemaError, "record " + r.id + " has k=" +
                                               std::to_string(r.confidences.k()) +
                                               ", expected " + std::to_string(k_));
    }
    if (r.label >= k_) {
      throw Error(ErrorCode::kLabelOutOfRange, "record " + r.id);
    }
    if (r.id.empty()) throw Error(ErrorCode::kSchemaError, "empty id");
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, r.id);
    }
  }
}

std::size_t CubeRootBins(std::size_t n) {
  const double m = std::round(std::cbrt(static_cast<double>(n)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

std::size_t BinningConfig::EffectiveBins(std::size_t n) const {
  if (strategy == BinStrategy::kCubeRoot) return CubeRootBins(n);
  if (bins < 1) throw Error(ErrorCode::kBadParams, "bin count must be >= 1");
  return bins;
}

ConfidenceVector normalize_options(std::span<const double> raw_scores) {
  double sum = 0.0;
  for (double s : raw_scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kNonFiniteScore, "score is not finite");
    }
    if (s < 0.0) throw Error(ErrorCode::kBadParams, "negative score");
    sum += s;
  }
  if (sum <= 0.0) throw Error(ErrorCode::kAllZeroScores, "all scores are zero");
  std::vector<double> probs(raw_scores.begin(), raw_scores.end());
  for (double& p : probs) p /= sum;
  return ConfidenceVector(std::move(probs));
}

ClassIndex argmax_option(std::span<const double> values) {
  ClassIndex best = 0;
  for (ClassIndex j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

ClassIndex argmax_option(const ConfidenceVector& cv) {
  return argmax_option(std::span<const double>(cv.probs()));
}

std::size_t bin_index(double value, std::size_t bins) {
  if (bins < 1) throw Error(ErrorCode::kBadParams, "bin count must be >= 1");
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "value outside [0, 1]");
  }
  const double M = static_cast<double>(bins);
  auto upper = [M](std::size_t m) { return static_cast<double>(m) / M; };
  std::size_t m = static_cast<std::size_t>(std::ceil(value * M));
  m = std::clamp<std::size_t>(m, 1, bins);
  while (m > 1 && value <= upper(m - 1)) --m;
  while (m < bins && value > upper(m)) ++m;
  return m;
}

ValidationResult validate_dataset(std::span<const RawRecord> raw) {
  ValidationResult result;
  std::vector<PredictionRecord> records;
  records.reserve(raw.size());
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> k;

  auto reject = [&](std::size_t i, ErrorCode code, std::string reason) {
    result.violations.push_back({i, code, std::move(reason)});
  };

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawRecord& r = raw[i];
    if (!r.id || !r.confidences || !r.label) {
      std::string missing = !r.id ? "id" : !r.confidences ? "confidences" : "label";
      reject(i, ErrorCode::kSchemaError, "missing field '" + missing + "'");
      continue;
    }
    if (r.id->empty()) {
      reject(i, ErrorCode::kSchemaError, "empty id");
      continue;
    }
    std::optional<Split> split;
    if (r.split) {
      split = ParseSplit(*r.split);
      if (!split) {
        reject(i, ErrorCode::kSchemaError, "unknown split '" + *r.split + "'");
        continue;
      }
    }
    std::vector<double> probs = *r.confidences;
    if (probs.size() < 2) {
      reject(i, ErrorCode::kSchemaError, "need at least two confidences");
      continue;
    }
    if (k && probs.size() != *k) {
      reject(i, ErrorCode::kSchemaError,
             "expected " + std::to_string(*k) + " confidences, got " +
                 std::to_string(probs.size()));
      continue;
    }
    bool finite = true;
    bool nonneg = true;
    double sum = 0.0;
    for (double p : probs) {
      finite = finite && std::isfinite(p);
      nonneg = nonneg && p >= 0.0;
      sum += p;
    }
    if (!finite) {
      reject(i, ErrorCode::kSchemaError, "non-finite confidence");
      continue;
    }
    if (!nonneg || std::abs(sum - 1.0) > kIngestTolerance) {
      reject(i, ErrorCode::kSimplexViolation,
             nonneg ? "confidences sum to " + std::to_string(sum)
                    : "negative confidence");
      continue;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      for (double& p : probs) p /= sum;
    }
    if (*r.label < 0 || static_cast<std::uint64_t>(*r.label) >= probs.size()) {
      reject(i, ErrorCode::kLabelOutOfRange,
             "label " + std::to_string(*r.label) + " not in [0, " +
                 std::to_string(probs.size()) + ")");
      continue;
    }
    if (!seen.insert(*r.id).second) {
      reject(i, ErrorCode::kDuplicateId, "duplicate id '" + *r.id + "'");
      continue;
    }
    if (!k) k = probs.size();
    try {
      records.push_back({*r.id, ConfidenceVector(std::move(probs)),
                         static_cast<ClassIndex>(*r.label), split});
    } catch (const Error& e) {
      reject(i, ErrorCode::kSimplexViolation, e.what());
    }
  }
  if (result.violations.empty()) result.dataset = Dataset(std::move(records));
  return result;
}

}  // namespace calkit
