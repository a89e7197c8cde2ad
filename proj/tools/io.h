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

// File formats used by the command line tool.

#ifndef CALKIT_TOOLS_IO_H_
#define CALKIT_TOOLS_IO_H_

#include <cstddef>
#include <string>
#include <vector>

#include "calkit/core.h"
#include "calkit/emcal.h"
#include "calkit/genmodel.h"
#include "calkit/metrics.h"
#include "calkit/toylab.h"

namespace calkit::io {

// Problem found on a given (1-based) line of an input file.
struct LineDiagnostic {
  std::size_t line;
  ErrorCode code;
  std::string reason;
};

// Thrown when an input file parses but fails validation.
class InputError : public Error {
 public:
  InputError(ErrorCode code, std::string message,
             std::vector<LineDiagnostic> diagnostics)
      : Error(code, std::move(message)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<LineDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<LineDiagnostic> diagnostics_;
};

// Throws Error(kIoError) when the file cannot be read.
std::string read_file(const std::string& path);

// Writes a sibling temporary file, then renames it over path.
void write_file_atomic(const std::string& path, const std::string& content);

// Blank lines are skipped but still counted.
Dataset parse_predictions_jsonl(const std::string& text);
std::string predictions_to_jsonl(const Dataset& ds);

std::vector<PairwisePreferenceRecord> parse_pairs_jsonl(const std::string& text);

std::string report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const std::string& text);

std::string model_to_json(const FiniteGenerativeModel& model);
FiniteGenerativeModel model_from_json(const std::string& text);

std::string history_to_json(const std::vector<HistoryRow>& history);

std::string policy_to_json(const Policy& policy);
Policy policy_from_json(const std::string& text);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace calkit::io

#endif  // CALKIT_TOOLS_IO_H_
