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

#include "io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace calkit::io {
namespace {

using Json = nlohmann::ordered_json;

std::vector<std::pair<std::size_t, std::string>> SplitLines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.emplace_back(number, line);
  }
  return lines;
}

[[noreturn]] void Fail(ErrorCode code, const std::string& what) {
  throw InputError(code, what, {});
}

const Json& Field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    Fail(ErrorCode::kSchemaError, std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

double Number(const Json& j, const char* name) {
  const Json& v = Field(j, name);
  if (!v.is_number()) {
    Fail(ErrorCode::kSchemaError, std::string("field '") + name + "' must be a number");
  }
  return v.get<double>();
}

std::size_t Count(const Json& j, const char* name) {
  const Json& v = Field(j, name);
  if (!v.is_number_unsigned()) {
    Fail(ErrorCode::kSchemaError,
         std::string("field '") + name + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> Numbers(const Json& j, const char* name) {
  const Json& v = Field(j, name);
  if (!v.is_array()) {
    Fail(ErrorCode::kSchemaError, std::string("field '") + name + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& x : v) {
    if (!x.is_number()) {
      Fail(ErrorCode::kSchemaError,
           std::string("field '") + name + "' must hold numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

Json Parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kSchemaError, std::string("malformed JSON: ") + e.what());
  }
}

Json BinsToJson(const std::vector<BinStats>& bins) {
  Json arr = Json::array();
  for (const BinStats& b : bins) {
    arr.push_back(Json{{"m", b.m},
                       {"lo", b.lo},
                       {"hi", b.hi},
                       {"count", b.count},
                       {"mean_conf", b.mean_conf},
                       {"empirical_freq", b.empirical_freq}});
  }
  return arr;
}

std::vector<BinStats> BinsFromJson(const Json& arr) {
  if (!arr.is_array()) Fail(ErrorCode::kSchemaError, "bin table must be an array");
  std::vector<BinStats> out;
  for (const Json& b : arr) {
    out.push_back({Count(b, "m"), Number(b, "lo"), Number(b, "hi"), Count(b, "count"),
                   Number(b, "mean_conf"), Number(b, "empirical_freq")});
  }
  return out;
}

}  // namespace

std::string format_double(double value) { return Json(value).dump(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "cannot read '" + path + "'");
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename onto '" + path + "'");
  }
}

namespace {

[[noreturn]] void ThrowDiagnostics(std::vector<LineDiagnostic> diagnostics) {
  const ErrorCode code = diagnostics.front().code;
  const std::string message = std::to_string(diagnostics.size()) + " invalid line(s)";
  throw InputError(code, message, std::move(diagnostics));
}

}  // namespace

Dataset parse_predictions_jsonl(const std::string& text) {
  std::vector<LineDiagnostic> diagnostics;
  std::vector<RawRecord> raw;
  std::vector<std::size_t> line_of;
  for (const auto& [number, line] : SplitLines(text)) {
    RawRecord r;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      diagnostics.push_back({number, ErrorCode::kSchemaError, "malformed JSON"});
      continue;
    }
    if (!j.is_object()) {
      diagnostics.push_back({number, ErrorCode::kSchemaError, "expected an object"});
      continue;
    }
    std::string problem;
    if (j.contains("id")) {
      if (j["id"].is_string()) r.id = j["id"].get<std::string>();
      else problem = "'id' must be a string";
    }
    if (j.contains("confidences")) {
      const Json& c = j["confidences"];
      if (c.is_array() && std::all_of(c.begin(), c.end(),
                                      [](const Json& x) { return x.is_number(); })) {
        r.confidences = c.get<std::vector<double>>();
      } else {
        problem = "'confidences' must be an array of numbers";
      }
    }
    if (j.contains("label")) {
      if (j["label"].is_number_integer()) r.label = j["label"].get<std::int64_t>();
      else problem = "'label' must be an integer";
    }
    if (j.contains("split")) {
      if (j["split"].is_string()) r.split = j["split"].get<std::string>();
      else if (!j["split"].is_null()) problem = "'split' must be a string";
    }
    if (!problem.empty()) {
      diagnostics.push_back({number, ErrorCode::kSchemaError, problem});
      continue;
    }
    raw.push_back(std::move(r));
    line_of.push_back(number);
  }
  ValidationResult result = validate_dataset(raw);
  for (const Violation& v : result.violations) {
    diagnostics.push_back({line_of[v.index], v.code, v.reason});
  }
  if (!diagnostics.empty()) {
    std::sort(diagnostics.begin(), diagnostics.end(),
              [](const LineDiagnostic& a, const LineDiagnostic& b) { return a.line < b.line; });
    ThrowDiagnostics(std::move(diagnostics));
  }
  if (result.dataset->empty()) {
    throw InputError(ErrorCode::kEmptyDataset, "no records", {});
  }
  return std::move(*result.dataset);
}

std::string predictions_to_jsonl(const Dataset& ds) {
  std::string out;
  for (const PredictionRecord& r : ds.records()) {
    Json j{{"id", r.id}, {"confidences", r.confidences.probs()}, {"label", r.label}};
    if (r.split) j["split"] = SplitName(*r.split);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<PairwisePreferenceRecord> parse_pairs_jsonl(const std::string& text) {
  std::vector<LineDiagnostic> diagnostics;
  std::vector<PairwisePreferenceRecord> pairs;
  for (const auto& [number, line] : SplitLines(text)) {
    try {
      const Json j = Parse(line);
      const Json& id = Field(j, "id");
      if (!id.is_string()) Fail(ErrorCode::kSchemaError, "'id' must be a string");
      pairs.push_back({id.get<std::string>(), Number(j, "logp_chosen"),
                       Number(j, "logp_reject")});
    } catch (const InputError& e) {
      diagnostics.push_back({number, e.code(), e.what()});
    }
  }
  if (!diagnostics.empty()) {
    ThrowDiagnostics(std::move(diagnostics));
  }
  if (pairs.empty()) throw InputError(ErrorCode::kEmptyInput, "no preference pairs", {});
  return pairs;
}

std::string report_to_json(const CalibrationReport& report) {
  Json j{{"n", report.n},
         {"k", report.k},
         {"M", report.M},
         {"accuracy", report.accuracy},
         {"conf_ece", report.conf_ece},
         {"cw_ece", report.cw_ece},
         {"conf_bins", BinsToJson(report.conf_bins)}};
  Json cw = Json::array();
  for (const auto& table : report.classwise_bins) cw.push_back(BinsToJson(table));
  j["classwise_bins"] = std::move(cw);
  if (report.regime) j["regime"] = *report.regime;
  return j.dump(2) + "\n";
}

CalibrationReport report_from_json(const std::string& text) {
  const Json j = Parse(text);
  CalibrationReport r;
  r.n = Count(j, "n");
  r.k = Count(j, "k");
  r.M = Count(j, "M");
  r.accuracy = Number(j, "accuracy");
  r.conf_ece = Number(j, "conf_ece");
  r.cw_ece = Number(j, "cw_ece");
  r.conf_bins = BinsFromJson(Field(j, "conf_bins"));
  const Json& cw = Field(j, "classwise_bins");
  if (!cw.is_array()) Fail(ErrorCode::kSchemaError, "'classwise_bins' must be an array");
  for (const Json& table : cw) r.classwise_bins.push_back(BinsFromJson(table));
  if (j.contains("regime")) {
    if (!j["regime"].is_string()) Fail(ErrorCode::kSchemaError, "'regime' must be a string");
    r.regime = j["regime"].get<std::string>();
  }
  return r;
}

std::string model_to_json(const FiniteGenerativeModel& model) {
  Json support = Json::array();
  for (const SupportPoint& p : model.support()) {
    support.push_back(Json{{"id", p.id},
                           {"weight", p.weight},
                           {"label_dist", p.label_dist.probs()}});
  }
  return Json{{"k", model.k()}, {"support", std::move(support)}}.dump(2) + "\n";
}

FiniteGenerativeModel model_from_json(const std::string& text) {
  const Json j = Parse(text);
  const std::size_t k = Count(j, "k");
  const Json& arr = Field(j, "support");
  if (!arr.is_array()) Fail(ErrorCode::kSchemaError, "'support' must be an array");
  try {
    std::vector<SupportPoint> support;
    for (const Json& p : arr) {
      const Json& id = Field(p, "id");
      if (!id.is_string()) Fail(ErrorCode::kSchemaError, "'id' must be a string");
      support.push_back({id.get<std::string>(), Number(p, "weight"),
                         ConfidenceVector(Numbers(p, "label_dist"))});
    }
    return FiniteGenerativeModel(k, std::move(support));
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    Fail(ErrorCode::kSchemaError, e.what());
  }
}

std::string history_to_json(const std::vector<HistoryRow>& history) {
  Json arr = Json::array();
  for (const HistoryRow& h : history) {
    arr.push_back(Json{{"epoch", h.epoch},
                       {"acc", h.acc},
                       {"conf_ece", h.conf_ece},
                       {"cw_ece", h.cw_ece},
                       {"mean_sft", h.mean_sft},
                       {"mean_ece", h.mean_ece}});
  }
  return arr.dump(2) + "\n";
}

std::string policy_to_json(const Policy& policy) {
  Json j;
  if (const auto* lin = std::get_if<LinearPolicy>(&policy)) {
    j = Json{{"type", "linear"},
             {"dims", Json{{"d", lin->d()}, {"k", lin->k()}}},
             {"weights", lin->weights()},
             {"temperature", lin->temperature()}};
  } else {
    const TabularPolicy& tab = std::get<TabularPolicy>(policy);
    j = Json{{"type", "tabular"},
             {"dims", Json{{"n", tab.n()}, {"k", tab.k()}}},
             {"logits", tab.logits()},
             {"temperature", 1.0}};
  }
  return j.dump(2) + "\n";
}

Policy policy_from_json(const std::string& text) {
  const Json j = Parse(text);
  const Json& type = Field(j, "type");
  const Json& dims = Field(j, "dims");
  try {
    if (type == "linear") {
      return LinearPolicy(Count(dims, "d"), Count(dims, "k"), Number(j, "temperature"),
                          Numbers(j, "weights"));
    }
    if (type == "tabular") {
      return TabularPolicy(Count(dims, "n"), Count(dims, "k"), Numbers(j, "logits"));
    }
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    Fail(ErrorCode::kSchemaError, e.what());
  }
  Fail(ErrorCode::kSchemaError, "unknown policy type");
}

}  // namespace calkit::io
