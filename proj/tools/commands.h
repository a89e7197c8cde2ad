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

#ifndef CALKIT_TOOLS_COMMANDS_H_
#define CALKIT_TOOLS_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "calkit/emcal.h"
#include "calkit/error.h"

namespace calkit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
};

int ExitCodeFor(ErrorCode code);

struct EvalOptions {
  std::string input;
  std::string bins = "10";
  std::string report;
  std::string plot;
  std::string plot_mode = "confidence";
  std::size_t plot_class = 0;
  std::optional<double> acc_star;
};

struct SimulateOptions {
  std::string model = "pure-random";
  double alpha = 1.0;
  std::size_t k = 4;
  std::size_t n = 100000;
  std::size_t support = 100;
  bool random_weights = false;
  std::uint64_t seed = 42;
  std::string out;
};

struct BoundsOptions {
  std::string model;
  std::optional<double> acc_star;
  std::optional<std::uint64_t> shape_seed;
  std::string acc_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  std::string out;
};

struct TrainToyOptions {
  std::string mode = "sft-only";
  double lambda = 1.0;
  int epochs = 10;
  std::size_t bins = 10;
  std::uint64_t seed = 42;
  std::string out;
  std::string divergence = "mse";
  std::optional<double> learning_rate;
  int inner_steps = 50;
  double epsilon = 0.1;
  int sft_epochs = 10;
  double sft_learning_rate = 0.05;
  int overfit_epochs = 5;
  double overfit_learning_rate = 0.1;
  std::size_t d = 16;
  std::size_t k = 4;
  std::size_t n = 4000;
  double teacher_temperature = 0.7;
  double sharpen = 3.0;
};

struct WinrateOptions {
  std::string pairs;
};

int cmd_eval(const EvalOptions& opt, std::ostream& out);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out);
int cmd_bounds(const BoundsOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train_toy(const TrainToyOptions& opt, std::ostream& out);
int cmd_winrate(const WinrateOptions& opt, std::ostream& out);

// Parses arguments (argv[0] is the program name), dispatches, and converts
// failures into diagnostics on err and an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace calkit::cli

#endif  // CALKIT_TOOLS_COMMANDS_H_
