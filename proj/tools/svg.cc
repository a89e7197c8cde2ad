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

#include "svg.h"

#include <algorithm>
#include <cstdio>

namespace calkit::io {
namespace {

constexpr double kWidth = 400.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double X(double p) { return kMargin + p * kWidth; }
double Y(double p) { return kMargin + (1.0 - p) * kHeight; }

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string reliability_svg(const std::vector<DiagramRow>& rows, std::size_t k,
                            DiagramMode mode, const std::string& title) {
  const double floor = mode == DiagramMode::kConfidence && k > 0
                           ? 1.0 / static_cast<double>(k)
                           : 0.0;
  double max_density = 0.0;
  for (const DiagramRow& r : rows) max_density = std::max(max_density, r.density);

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       Fixed(kWidth + 2 * kMargin) + "\" height=\"" + Fixed(kHeight + 2 * kMargin) +
       "\">\n";
  s += "  <title>" + Escape(title) + "</title>\n";
  s += "  <rect x=\"" + Fixed(X(0)) + "\" y=\"" + Fixed(Y(1)) + "\" width=\"" +
       Fixed(kWidth) + "\" height=\"" + Fixed(kHeight) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (const DiagramRow& r : rows) {
    if (r.bin.hi <= floor) continue;
    if (r.bin.count == 0) continue;
    const double opacity = max_density > 0.0 ? r.density / max_density : 0.0;
    s += "  <rect class=\"bin\" data-m=\"" + std::to_string(r.bin.m) + "\" x=\"" +
         Fixed(X(r.bin.lo)) + "\" y=\"" + Fixed(Y(r.bin.empirical_freq)) +
         "\" width=\"" + Fixed((r.bin.hi - r.bin.lo) * kWidth) + "\" height=\"" +
         Fixed(r.bin.empirical_freq * kHeight) + "\" fill=\"#1f5fa8\" fill-opacity=\"" +
         Fixed(opacity) + "\" stroke=\"#1f3f78\"/>\n";
  }
  s += "  <line class=\"diagonal\" x1=\"" + Fixed(X(0)) + "\" y1=\"" + Fixed(Y(0)) +
       "\" x2=\"" + Fixed(X(1)) + "\" y2=\"" + Fixed(Y(1)) +
       "\" stroke=\"#c33\" stroke-dasharray=\"6 4\"/>\n";
  s += "  <text x=\"" + Fixed(X(0.5)) + "\" y=\"" + Fixed(kHeight + 1.8 * kMargin) +
       "\" text-anchor=\"middle\">confidence</text>\n";
  s += "  <text x=\"" + Fixed(kMargin * 0.4) + "\" y=\"" + Fixed(Y(0.5)) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 " + Fixed(kMargin * 0.4) + " " +
       Fixed(Y(0.5)) + ")\">accuracy</text>\n";
  s += "  <text x=\"" + Fixed(X(0.5)) + "\" y=\"" + Fixed(kMargin * 0.6) +
       "\" text-anchor=\"middle\">" + Escape(title) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace calkit::io
