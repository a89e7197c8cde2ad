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

#include "commands.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <system_error>

#include "CLI11.hpp"
#include "calkit/genmodel.h"
#include "calkit/metrics.h"
#include "calkit/toylab.h"
#include "io.h"
#include "svg.h"

namespace calkit::cli {
namespace {

namespace fs = std::filesystem;

std::string Fmt(double v) { return io::format_double(v); }

BinningConfig ParseBins(const std::string& text) {
  BinningConfig b;
  if (text == "heuristic") {
    b.strategy = BinStrategy::kCubeRoot;
    return b;
  }
  std::size_t pos = 0;
  long long m = 0;
  try {
    m = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || m < 1) {
    throw Error(ErrorCode::kBadParams, "--bins must be a positive integer or 'heuristic'");
  }
  b.bins = static_cast<std::size_t>(m);
  return b;
}

DiagramMode ParsePlotMode(const std::string& text) {
  if (text == "confidence") return DiagramMode::kConfidence;
  if (text == "classwise-merged") return DiagramMode::kClasswiseMerged;
  if (text == "per-class") return DiagramMode::kPerClass;
  throw Error(ErrorCode::kBadParams, "unknown plot mode '" + text + "'");
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
}

std::string Join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

std::vector<double> ParseGrid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::kBadParams, "bad --acc-grid entry '" + item + "'");
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw Error(ErrorCode::kBadParams, "--acc-grid is empty");
  return grid;
}

void PrintSummary(std::ostream& out, const CalibrationReport& r) {
  out << "n=" << r.n << " k=" << r.k << " M=" << r.M << "\n"
      << "accuracy=" << Fmt(r.accuracy) << "\n"
      << "conf_ece=" << Fmt(r.conf_ece) << "\n"
      << "cw_ece=" << Fmt(r.cw_ece) << "\n";
}

std::string PlotFor(const Dataset& ds, const BinningConfig& binning,
                    const std::string& title) {
  return io::reliability_svg(
      reliability_diagram(ds, binning, DiagramMode::kConfidence, 0), ds.k(),
      DiagramMode::kConfidence, title);
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return kExitIo;
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kNonFiniteGradient:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const BinningConfig binning = ParseBins(opt.bins);
  const DiagramMode mode = ParsePlotMode(opt.plot_mode);
  const Dataset ds = io::parse_predictions_jsonl(io::read_file(opt.input));
  CalibrationReport report = evaluate(ds, binning);
  if (opt.acc_star) {
    report.regime = RegimeName(classify_regime(report.accuracy, *opt.acc_star).regime);
  }
  if (!opt.report.empty()) io::write_file_atomic(opt.report, io::report_to_json(report));
  if (!opt.plot.empty()) {
    const std::vector<DiagramRow> rows =
        reliability_diagram(ds, binning, mode, opt.plot_class);
    io::write_file_atomic(opt.plot, io::reliability_svg(rows, ds.k(), mode, opt.input));
  }
  PrintSummary(out, report);
  if (report.regime) out << "regime=" << *report.regime << "\n";
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  const std::optional<ModelKind> kind = ParseModelKind(opt.model);
  if (!kind) throw Error(ErrorCode::kBadParams, "unknown model kind '" + opt.model + "'");
  if (opt.n < 1) throw Error(ErrorCode::kBadParams, "--n must be positive");
  ModelParams params;
  params.concentration = opt.alpha;
  params.random_weights = opt.random_weights;
  const FiniteGenerativeModel model = make_model(*kind, opt.k, opt.support, params, opt.seed);
  const Dataset ds = sample_dataset(model, OptimalPredictor(model), opt.n, opt.seed + 1);
  const CalibrationReport report = evaluate(ds, BinningConfig{});
  if (!opt.out.empty()) {
    EnsureDir(opt.out);
    io::write_file_atomic(Join(opt.out, "dataset.jsonl"), io::predictions_to_jsonl(ds));
    io::write_file_atomic(Join(opt.out, "model.json"), io::model_to_json(model));
  }
  out << "model=" << ModelKindName(*kind) << "\n";
  PrintSummary(out, report);
  return kExitOk;
}

int cmd_bounds(const BoundsOptions& opt, std::ostream& out, std::ostream& err) {
  const std::vector<double> grid = ParseGrid(opt.acc_grid);
  const FiniteGenerativeModel base = io::model_from_json(io::read_file(opt.model));
  const Predictor pi_star = opt.acc_star
                                ? make_target_predictor(base, *opt.acc_star, opt.shape_seed)
                                : OptimalPredictor(base);
  // Accuracy is scored on the model's labels, TCE against the reference.
  const FiniteGenerativeModel reference = WithLabelDist(base, pi_star);
  const double acc_star = population_accuracy(base, pi_star);

  std::ostringstream csv;
  csv << "target_acc,achieved_acc,tce,envelope_2gap,C,cwece_pop,holds\n";
  bool unreachable = false;
  for (double a : grid) {
    csv << Fmt(a) << ",";
    Predictor pi;
    try {
      pi = construct_bound_predictor(base, pi_star, a);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnreachableAccuracy && e.code() != ErrorCode::kBadParams) {
        throw;
      }
      unreachable = true;
      err << "target " << Fmt(a) << ": " << e.what() << "\n";
      csv << "nan,nan,nan,nan,nan,unreachable\n";
      continue;
    }
    const double achieved = population_accuracy(base, pi);
    const double t = tce(reference, pi);
    const double envelope = 2.0 * std::abs(acc_star - achieved);
    const EceTceCheck ece_check = verify_ece_le_tce(reference, pi);
    double C = std::numeric_limits<double>::quiet_NaN();
    bool holds = t <= envelope + 1e-12 && ece_check.holds;
    try {
      const LowerBoundCheck lb = lower_bound_constant(base, pi_star, pi);
      C = lb.C;
      holds = holds && lb.holds;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoDisagreement) throw;
    }
    csv << Fmt(achieved) << "," << Fmt(t) << "," << Fmt(envelope) << ","
        << (std::isnan(C) ? std::string("nan") : Fmt(C)) << ","
        << Fmt(ece_check.cw_ece_pop) << "," << (holds ? "true" : "false") << "\n";
  }
  if (!opt.out.empty()) {
    io::write_file_atomic(opt.out, csv.str());
  } else {
    out << csv.str();
  }
  out << "acc_star=" << Fmt(acc_star) << "\n";
  return unreachable ? kExitValidation : kExitOk;
}

int cmd_train_toy(const TrainToyOptions& opt, std::ostream& out) {
  const std::string& mode = opt.mode;
  const bool known = mode == "sft-only" || mode == "cft" || mode == "rcft" ||
                     mode == "ece-only" || mode == "label-smooth" || mode == "ts";
  if (!known) throw Error(ErrorCode::kBadParams, "unknown mode '" + mode + "'");
  const std::optional<Divergence> divergence = ParseDivergence(opt.divergence);
  if (!divergence) {
    throw Error(ErrorCode::kBadParams, "unknown divergence '" + opt.divergence + "'");
  }
  if (opt.epochs < 0 || opt.sft_epochs < 0 || opt.inner_steps < 1 || opt.bins < 1) {
    throw Error(ErrorCode::kBadParams, "epochs, steps and bins must be positive");
  }

  ToySetup setup;
  setup.d = opt.d;
  setup.k = opt.k;
  setup.n = opt.n;
  setup.teacher_temperature = opt.teacher_temperature;
  setup.seed = opt.seed;
  setup.sharpen = opt.sharpen;
  const ToyStart start = prepare_toy_start(setup);
  const BinningConfig binning{opt.bins, BinStrategy::kFixed};

  TrainSpec spec;
  spec.em.epochs = opt.epochs;
  spec.em.bins = opt.bins;
  spec.em.inner_steps = opt.inner_steps;
  spec.em.seed = opt.seed;
  spec.em.divergence = *divergence;
  spec.em.lambda = opt.lambda;
  if (opt.learning_rate) spec.em.learning_rate = *opt.learning_rate;
  spec.epsilon = opt.epsilon;
  spec.overfit_epochs = opt.overfit_epochs;
  spec.overfit_learning_rate = opt.overfit_learning_rate;

  // Calibration modes act on the sft-only endpoint.
  Policy initial = start.sharpened;
  if (mode != "sft-only" && mode != "label-smooth") {
    TrainSpec sft;
    sft.em.epochs = opt.sft_epochs;
    sft.em.bins = opt.bins;
    sft.em.inner_steps = opt.inner_steps;
    sft.em.learning_rate = opt.sft_learning_rate;
    initial = train(initial, start.train, sft).policy;
  }

  const ToyTask& eval_task = mode == "ts" ? start.val : start.train;
  const Dataset before = policy_dataset(initial, eval_task);
  TrainResult result{initial, {}};
  if (mode == "ts") {
    const TemperatureFit fit = fit_temperature(before, binning);
    const LinearPolicy& lin = std::get<LinearPolicy>(initial);
    result.policy = LinearPolicy(lin.d(), lin.k(), lin.temperature() * fit.temperature,
                                 lin.weights());
    out << "temperature=" << Fmt(fit.temperature) << "\n";
  } else {
    if (mode == "sft-only") {
      spec.mode = TrainMode::kSftOnly;
    } else if (mode == "label-smooth") {
      spec.mode = TrainMode::kLabelSmooth;
    } else if (mode == "rcft") {
      spec.mode = TrainMode::kRcft;
    } else {
      spec.mode = TrainMode::kCft;
      if (mode == "ece-only") {
        spec.em.sft_weight = 0.0;
        if (spec.em.lambda == 0.0) spec.em.lambda = 1.0;
      }
    }
    result = train(initial, start.train, spec);
  }
  const Dataset after = policy_dataset(result.policy, eval_task);
  const CalibrationReport before_report = evaluate(before, binning);
  const CalibrationReport after_report = evaluate(after, binning);

  if (!opt.out.empty()) {
    EnsureDir(opt.out);
    io::write_file_atomic(Join(opt.out, "history.json"), io::history_to_json(result.history));
    io::write_file_atomic(Join(opt.out, "report.json"), io::report_to_json(after_report));
    io::write_file_atomic(Join(opt.out, "before.svg"), PlotFor(before, binning, "before"));
    io::write_file_atomic(Join(opt.out, "after.svg"), PlotFor(after, binning, "after"));
    io::write_file_atomic(Join(opt.out, "policy.json"), io::policy_to_json(result.policy));
  }
  out << "mode=" << mode << "\n"
      << "bayes_accuracy=" << Fmt(start.bayes_accuracy) << "\n"
      << "before_accuracy=" << Fmt(before_report.accuracy) << "\n"
      << "before_conf_ece=" << Fmt(before_report.conf_ece) << "\n"
      << "after_accuracy=" << Fmt(after_report.accuracy) << "\n"
      << "after_conf_ece=" << Fmt(after_report.conf_ece) << "\n"
      << "after_cw_ece=" << Fmt(after_report.cw_ece) << "\n";
  return kExitOk;
}

int cmd_winrate(const WinrateOptions& opt, std::ostream& out) {
  const std::vector<PairwisePreferenceRecord> pairs =
      io::parse_pairs_jsonl(io::read_file(opt.pairs));
  const double rate = win_rate(pairs);
  std::size_t wins = 0;
  for (const PairwisePreferenceRecord& p : pairs) {
    if (p.logp_chosen > p.logp_reject) ++wins;
  }
  out << "win_rate=" << Fmt(rate) << "\n"
      << "wins=" << wins << "\n"
      << "total=" << pairs.size() << "\n";
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Calibration toolkit", "calkit"};
  app.require_subcommand(1);

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a predictions file");
  eval_cmd->add_option("input", eval.input, "Predictions JSONL")->required();
  eval_cmd->add_option("--bins", eval.bins, "Bin count or 'heuristic'");
  eval_cmd->add_option("--report", eval.report, "Report JSON output path");
  eval_cmd->add_option("--plot", eval.plot, "Reliability diagram SVG output path");
  eval_cmd->add_option("--plot-mode", eval.plot_mode,
                       "confidence, classwise-merged or per-class");
  eval_cmd->add_option("--class", eval.plot_class, "Class for per-class plots");
  eval_cmd->add_option("--acc-star", eval.acc_star, "Optimal accuracy for the regime");

  SimulateOptions sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Sample from a synthetic model");
  sim_cmd->add_option("--model", sim.model, "pure-random, deterministic or dirichlet");
  sim_cmd->add_option("--alpha", sim.alpha, "Dirichlet concentration");
  sim_cmd->add_option("--k", sim.k, "Number of classes");
  sim_cmd->add_option("--n", sim.n, "Number of samples");
  sim_cmd->add_option("--support", sim.support, "Support size");
  sim_cmd->add_flag("--random-weights", sim.random_weights, "Random support weights");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--out", sim.out, "Output directory");

  BoundsOptions bounds;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "Trace the TCE envelope");
  bounds_cmd->add_option("--model", bounds.model, "Model JSON")->required();
  bounds_cmd->add_option("--acc-star", bounds.acc_star, "Reference accuracy");
  bounds_cmd->add_option("--shape-seed", bounds.shape_seed, "Reference shape seed");
  bounds_cmd->add_option("--acc-grid", bounds.acc_grid, "Comma-separated accuracies");
  bounds_cmd->add_option("--out", bounds.out, "CSV output path");

  TrainToyOptions toy;
  CLI::App* toy_cmd = app.add_subcommand("train-toy", "Train on the toy task");
  toy_cmd->add_option("--mode", toy.mode,
                      "sft-only, cft, rcft, ece-only, label-smooth or ts");
  toy_cmd->add_option("--lambda", toy.lambda, "Calibration weight");
  toy_cmd->add_option("--epochs", toy.epochs, "Training epochs");
  toy_cmd->add_option("--bins", toy.bins, "Bin count");
  toy_cmd->add_option("--seed", toy.seed, "Random seed");
  toy_cmd->add_option("--out", toy.out, "Output directory");
  toy_cmd->add_option("--divergence", toy.divergence, "mse or ce");
  toy_cmd->add_option("--lr", toy.learning_rate, "Learning rate");
  toy_cmd->add_option("--inner-steps", toy.inner_steps, "Gradient steps per epoch");
  toy_cmd->add_option("--epsilon", toy.epsilon, "Label smoothing");
  toy_cmd->add_option("--sft-epochs", toy.sft_epochs, "SFT stage epochs");
  toy_cmd->add_option("--sft-lr", toy.sft_learning_rate, "SFT stage learning rate");
  toy_cmd->add_option("--overfit-epochs", toy.overfit_epochs, "rcft overfit epochs");
  toy_cmd->add_option("--overfit-lr", toy.overfit_learning_rate, "rcft overfit rate");
  toy_cmd->add_option("--d", toy.d, "Feature dimension");
  toy_cmd->add_option("--k", toy.k, "Number of classes");
  toy_cmd->add_option("--n", toy.n, "Number of records");
  toy_cmd->add_option("--teacher-temperature", toy.teacher_temperature,
                      "Teacher temperature");
  toy_cmd->add_option("--sharpen", toy.sharpen, "Weight scale after pretraining");

  WinrateOptions winrate;
  CLI::App* winrate_cmd = app.add_subcommand("winrate", "Pairwise win rate");
  winrate_cmd->add_option("--pairs", winrate.pairs, "Pairs JSONL")->required();

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.push_back("calkit");
  for (std::string& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*sim_cmd) return cmd_simulate(sim, out);
    if (*bounds_cmd) return cmd_bounds(bounds, out, err);
    if (*toy_cmd) return cmd_train_toy(toy, out);
    if (*winrate_cmd) return cmd_winrate(winrate, out);
  } catch (const io::InputError& e) {
    for (const io::LineDiagnostic& d : e.diagnostics()) {
      err << "line " << d.line << ": " << ErrorCodeName(d.code) << ": " << d.reason << "\n";
    }
    err << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const Error& e) {
    err << e.what() << "\n";
    return ExitCodeFor(e.code());
  }
  return kExitValidation;
}

}  // namespace calkit::cli
