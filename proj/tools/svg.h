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

#ifndef CALKIT_TOOLS_SVG_H_
#define CALKIT_TOOLS_SVG_H_

#include <cstddef>
#include <string>
#include <vector>

#include "calkit/metrics.h"

namespace calkit::io {

// Bars at the empirical frequency of each bin, shaded by bin density, with
// the identity diagonal for reference. In confidence mode bins lying wholly
// below 1/k are left out since max confidence cannot fall there.
std::string reliability_svg(const std::vector<DiagramRow>& rows, std::size_t k,
                            DiagramMode mode, const std::string& title);

}  // namespace calkit::io

#endif  // CALKIT_TOOLS_SVG_H_
