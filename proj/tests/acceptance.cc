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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "calkit/core.h"
#include "calkit/emcal.h"
#include "calkit/genmodel.h"
#include "calkit/metrics.h"
#include "calkit/targetmap.h"
#include "calkit/toylab.h"
#include "commands.h"
#include "io.h"

namespace calkit {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass;
  std::string detail;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string Fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

std::vector<double> Dirichlet(std::size_t k, double concentration, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> v(k);
  double sum = 0.0;
  for (double& x : v) sum += (x = g(rng));
  if (sum <= 0.0) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(k));
    return v;
  }
  for (double& x : v) x /= sum;
  return v;
}

ConfidenceVector DirichletVector(std::size_t k, double concentration, std::mt19937_64& rng) {
  for (;;) {
    std::vector<double> v = Dirichlet(k, concentration, rng);
    double sum = 0.0;
    for (double x : v) sum += x;
    if (std::abs(sum - 1.0) <= 1e-12) return ConfidenceVector(std::move(v));
  }
}

Predictor RandomPredictor(const FiniteGenerativeModel& model, double concentration,
                          std::mt19937_64& rng) {
  Predictor p;
  for (const SupportPoint& s : model.support()) {
    p.Set(s.id, DirichletVector(model.k(), concentration, rng));
  }
  return p;
}

struct Instance {
  FiniteGenerativeModel model;
  std::uint64_t seed;
};

Instance RandomModel(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> k_dist(2, 6);
  std::uniform_int_distribution<std::size_t> support_dist(1, 100);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  std::uniform_real_distribution<double> conc(0.3, 5.0);
  const std::uint64_t seed = rng();
  ModelParams params;
  params.concentration = conc(rng);
  params.random_weights = (seed & 1) != 0;
  const ModelKind kind = static_cast<ModelKind>(kind_dist(rng));
  return {make_model(kind, k_dist(rng), support_dist(rng), params, seed), seed};
}

// Model-based sampling from the optimal predictor keeps both ECE notions small.
Outcome Criterion1() {
  struct Case {
    const char* name;
    ModelKind kind;
    double alpha;
  };
  const Case cases[] = {{"pure-random", ModelKind::kPureRandom, 1.0},
                        {"deterministic", ModelKind::kDeterministic, 1.0},
                        {"dirichlet(0.5)", ModelKind::kDirichlet, 0.5},
                        {"dirichlet(1)", ModelKind::kDirichlet, 1.0},
                        {"dirichlet(5)", ModelKind::kDirichlet, 5.0}};
  bool pass = true;
  std::ostringstream detail;
  std::uint64_t seed = 101;
  for (const Case& c : cases) {
    Stopwatch sw;
    ModelParams params;
    params.concentration = c.alpha;
    const auto model = make_model(c.kind, 4, 100, params, seed);
    const Dataset ds = sample_dataset(model, OptimalPredictor(model), 100000, seed + 1);
    const BinningConfig bins{10, BinStrategy::kFixed};
    const double conf = conf_ece(ds, bins).ece;
    const double cw = cw_ece(ds, bins).ece;
    const double secs = sw.Seconds();
    const bool ok = conf <= 0.02 && cw <= 0.02 && secs < 10.0;
    pass = pass && ok;
    detail << c.name << " conf=" << Fmt("%.4f", conf) << " cw=" << Fmt("%.4f", cw) << " t="
           << Fmt("%.2fs", secs) << (ok ? "" : " FAIL") << "; ";
    seed += 10;
  }
  return {pass, detail.str()};
}

// Construction keeps TCE within twice the accuracy change.
Outcome Criterion2() {
  Stopwatch sw;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> acc_dist(0.3, 0.95);
  std::size_t checked = 0, violations = 0, unreachable = 0;
  double worst = -1.0;
  for (int inst = 0; inst < 200; ++inst) {
    const Instance in = RandomModel(rng);
    const Predictor pi_star =
        make_target_predictor(in.model, acc_dist(rng), in.seed % 3 == 0
                                                           ? std::nullopt
                                                           : std::optional<std::uint64_t>(in.seed));
    const double a_star = population_accuracy(in.model, pi_star);
    const FiniteGenerativeModel reference = WithLabelDist(in.model, pi_star);
    // Grid spread over the accuracies reachable by one-hot predictions.
    double lowest = 0.0, highest = 0.0;
    for (const SupportPoint& s : in.model.support()) {
      const auto& p = s.label_dist.probs();
      lowest += s.weight * *std::min_element(p.begin(), p.end());
      highest += s.weight * *std::max_element(p.begin(), p.end());
    }
    for (int g = 1; g <= 9; ++g) {
      const double target = lowest + (highest - lowest) * 0.1 * g;
      Predictor pi;
      try {
        pi = construct_bound_predictor(in.model, pi_star, target);
      } catch (const Error&) {
        ++unreachable;
        continue;
      }
      const double acc = population_accuracy(in.model, pi);
      const double t = tce(reference, pi);
      const double slack = t - 2.0 * std::abs(a_star - acc);
      worst = std::max(worst, slack);
      ++checked;
      if (slack > 1e-12) ++violations;
    }
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << checked << " constructions, " << unreachable << " unreachable targets, "
         << violations << " violations, max(TCE - 2|da|)=" << Fmt("%.3g", worst)
         << ", t=" << Fmt("%.2fs", secs);
  return {violations == 0 && checked > 0 && secs < 5.0, detail.str()};
}

// Lower bound with the proof constant.
Outcome Criterion3() {
  Stopwatch sw;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> acc_dist(0.3, 0.95);
  std::uniform_real_distribution<double> conc(0.2, 3.0);
  int instances = 0, violations = 0, skipped = 0;
  while (instances < 1000) {
    const Instance in = RandomModel(rng);
    const Predictor pi_star =
        (in.seed % 2 == 0) ? OptimalPredictor(in.model)
                           : make_target_predictor(in.model, acc_dist(rng), in.seed);
    const Predictor pi = RandomPredictor(in.model, conc(rng), rng);
    LowerBoundCheck check;
    try {
      check = lower_bound_constant(in.model, pi_star, pi);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoDisagreement) throw;
      ++skipped;
      continue;
    }
    ++instances;
    if (!check.holds || check.tce < check.C * std::abs(check.acc_star - check.acc)) {
      ++violations;
    }
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << instances << " instances (" << skipped << " without disagreement skipped), "
         << violations << " violations, t=" << Fmt("%.2fs", secs);
  return {violations == 0 && secs < 5.0, detail.str()};
}

// Population classwise ECE never exceeds TCE.
Outcome Criterion4() {
  Stopwatch sw;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> conc(0.2, 3.0);
  int violations = 0;
  double worst = -1.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const Instance in = RandomModel(rng);
    const Predictor pi = RandomPredictor(in.model, conc(rng), rng);
    const EceTceCheck check = verify_ece_le_tce(in.model, pi);
    worst = std::max(worst, check.cw_ece_pop - check.tce);
    if (check.cw_ece_pop > check.tce + 1e-12 || !check.holds) ++violations;
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << "1000 instances, " << violations
         << " violations, max(cwECE - TCE)=" << Fmt("%.3g", worst) << ", t=" << Fmt("%.2fs", secs);
  return {violations == 0 && secs < 5.0, detail.str()};
}

bool OnSimplex(const std::vector<double>& v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= -tol) || !(x <= 1.0 + tol)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

bool DistinctEntries(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) == s.end();
}

// Rank-preserving target mapping.
Outcome Criterion5() {
  Stopwatch sw;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> high_q(0.26, 0.99);
  std::uniform_real_distribution<double> low_q(0.0, 0.25);
  constexpr int kTrials = 100000;
  constexpr std::size_t kClasses = 4;
  int simplex_bad = 0, top_bad = 0, rank_bad = 0, low_simplex_bad = 0;
  std::string example;
  for (int t = 0; t < kTrials; ++t) {
    std::vector<double> v;
    do {
      v = Dirichlet(kClasses, 1.0, rng);
    } while (!DistinctEntries(v) || std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) > 1e-12);
    const ConfidenceVector conf(v);
    const double q = high_q(rng);
    const TargetDistribution target = build_target(conf, q);
    const std::vector<double>& p = target.probs.probs();
    if (!OnSimplex(p, 1e-9)) ++simplex_bad;
    if (std::abs(p[target.top_index] - q) > 1e-12) ++top_bad;
    if (!preserves_rank(conf, p, target.top_index)) {
      if (rank_bad == 0) {
        std::ostringstream os;
        os << " e.g. conf=[" << Fmt("%.4f", v[0]) << "," << Fmt("%.4f", v[1]) << ","
           << Fmt("%.4f", v[2]) << "," << Fmt("%.4f", v[3]) << "] q=" << Fmt("%.4f", q);
        example = os.str();
      }
      ++rank_bad;
    }
    double lq = low_q(rng);
    if (lq <= 0.0) lq = 0.25;
    if (!OnSimplex(build_target(conf, lq).probs.probs(), 1e-9)) ++low_simplex_bad;
  }
  // Worked example recomputed from the mapping formulas.
  const ConfidenceVector worked({0.7, 0.2, 0.06, 0.04});
  const TargetDistribution w = build_target(worked, 0.6);
  const double gamma = std::log(3.0) / (0.2 * (1.0 - 0.6));
  const double th[3] = {std::tanh(gamma * 0.2), std::tanh(gamma * 0.06),
                        std::tanh(gamma * 0.04)};
  const double alpha = (1.0 - 0.6) / (th[0] + th[1] + th[2] + 3.0);
  bool worked_ok = std::abs(w.probs[0] - 0.6) <= 1e-9;
  for (int i = 0; i < 3; ++i) {
    worked_ok = worked_ok && std::abs(w.probs[i + 1] - (alpha * th[i] + alpha)) <= 1e-9;
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << kTrials << " mappings: simplex violations " << simplex_bad << ", top mismatches "
         << top_bad << ", rank violations " << rank_bad << " ("
         << Fmt("%.3f%%", 100.0 * rank_bad / kTrials) << ")" << example
         << "; low-q simplex violations " << low_simplex_bad << "; worked example "
         << (worked_ok ? "ok" : "mismatch") << ", t=" << Fmt("%.2fs", secs);
  return {simplex_bad == 0 && top_bad == 0 && rank_bad == 0 && low_simplex_bad == 0 &&
              worked_ok && secs < 5.0,
          detail.str()};
}

double NormRelativeError(const std::vector<double>& a, const std::vector<double>& f) {
  double diff = 0.0, na = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - f[i]));
    na = std::max(na, std::abs(a[i]));
    nf = std::max(nf, std::abs(f[i]));
  }
  const double scale = std::max(na, nf);
  return scale == 0.0 ? diff : diff / scale;
}

std::vector<double>& Params(Policy& p) {
  if (auto* lin = std::get_if<LinearPolicy>(&p)) return lin->mutable_weights();
  return std::get<TabularPolicy>(p).mutable_logits();
}

// Analytic gradients against central differences.
Outcome Criterion6() {
  Stopwatch sw;
  constexpr double kH = 1e-5;
  double worst = 0.0;
  std::string worst_case;
  int instances = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(600 + seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> q_dist(0.3, 0.95);
    const std::size_t k = 3 + seed % 3;
    const ToyTask task = gen_toy_task(4, k, 12, 1.0, seed);
    std::vector<double> w(4 * k);
    for (double& v : w) v = normal(rng);
    const LinearPolicy lin(4, k, 0.9, w);
    std::vector<double> targets;
    const Dataset snap = policy_dataset(Policy(lin), task);
    for (const PredictionRecord& r : snap.records()) {
      const TargetDistribution t = build_target(r.confidences, q_dist(rng));
      targets.insert(targets.end(), t.probs.probs().begin(), t.probs.probs().end());
    }
    for (int which = 0; which < 2; ++which) {
      const Policy base = which == 0 ? Policy(lin) : Policy(to_tabular(lin, task));
      for (double lambda : {0.0, 1.0}) {
        for (Divergence div : {Divergence::kMse, Divergence::kCrossEntropy}) {
          const LossWeights weights{1.0, lambda, div};
          const std::vector<double> analytic = grad_combined(base, task, targets, weights);
          Policy probe = base;
          std::vector<double>& theta = Params(probe);
          std::vector<double> fd(theta.size());
          for (std::size_t i = 0; i < theta.size(); ++i) {
            const double orig = theta[i];
            theta[i] = orig + kH;
            const double up = combined_loss(probe, task, targets, weights);
            theta[i] = orig - kH;
            const double down = combined_loss(probe, task, targets, weights);
            theta[i] = orig;
            fd[i] = (up - down) / (2.0 * kH);
          }
          const double err = NormRelativeError(analytic, fd);
          ++instances;
          if (err > worst) {
            worst = err;
            worst_case = std::string(which == 0 ? "linear" : "tabular") + " lambda=" +
                         Fmt("%g", lambda) + " " + DivergenceName(div) + " seed=" +
                         std::to_string(seed);
          }
        }
      }
    }
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << instances << " gradient checks, max relative error " << Fmt("%.3g", worst) << " ("
         << worst_case << "), t=" << Fmt("%.2fs", secs);
  return {worst <= 1e-4 && secs < 30.0, detail.str()};
}

Dataset Rows(const std::vector<std::pair<std::vector<double>, ClassIndex>>& rows) {
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    records.push_back({"r" + std::to_string(i), ConfidenceVector(rows[i].first),
                       rows[i].second, std::nullopt});
  }
  return Dataset(std::move(records));
}

// Hand-computed metric and loss fixtures.
Outcome Criterion7() {
  const Dataset four = Rows({{{0.8, 0.2, 0.0, 0.0}, 0},
                             {{0.8, 0.2, 0.0, 0.0}, 0},
                             {{0.1, 0.8, 0.1, 0.0}, 0},
                             {{0.0, 0.1, 0.1, 0.8}, 2}});
  const std::vector<double> one_hot{1, 0, 0, 0};
  const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  const Dataset constant = Rows({{one_hot, 0}, {one_hot, 1}, {one_hot, 2}, {one_hot, 3}});
  const BinningConfig bins{10, BinStrategy::kFixed};
  const double conf = conf_ece(four, bins).ece;
  const double cw = cw_ece(constant, bins).ece;
  const double mse = ece_loss(one_hot, uniform, Divergence::kMse);
  const double ce = ece_loss(one_hot, uniform, Divergence::kCrossEntropy);
  const bool ok = std::abs(conf - 0.3) <= 1e-12 && std::abs(cw - 0.375) <= 1e-12 &&
                  std::abs(mse - 0.1875) <= 1e-12 && std::abs(ce - std::log(4.0)) <= 1e-12 &&
                  std::abs(ce - 1.386) <= 5e-4;
  std::ostringstream detail;
  detail << "conf-ECE=" << io::format_double(conf) << " cw-ECE=" << io::format_double(cw)
         << " mse=" << io::format_double(mse) << " ce=" << io::format_double(ce);
  return {ok, detail.str()};
}

struct ToyBaseline {
  ToyStart start;
  TrainResult sft;
};

ToyBaseline SftBaseline() {
  ToySetup setup;
  setup.seed = 7;
  ToyStart start = prepare_toy_start(setup);
  TrainSpec spec;
  spec.mode = TrainMode::kSftOnly;
  spec.em.epochs = 10;
  spec.em.learning_rate = 0.05;
  spec.em.inner_steps = 50;
  TrainResult sft = train(start.sharpened, start.train, spec);
  return {std::move(start), std::move(sft)};
}

// Toy-scale trend: sft-only, CFT and RCFT.
Outcome Criterion8() {
  Stopwatch sw;
  const ToyBaseline base = SftBaseline();
  const HistoryRow& s = base.sft.history.back();

  TrainSpec cft;
  cft.mode = TrainMode::kCft;
  cft.em.epochs = 15;
  cft.em.lambda = 1.0;
  cft.em.divergence = Divergence::kCrossEntropy;
  cft.em.learning_rate = 0.5;
  cft.em.inner_steps = 50;
  const TrainResult c = train(base.sft.policy, base.start.train, cft);
  const HistoryRow& ce = c.history.back();

  TrainSpec rcft;
  rcft.mode = TrainMode::kRcft;
  rcft.overfit_epochs = 5;
  rcft.overfit_learning_rate = 0.1;
  rcft.em.epochs = 10;
  rcft.em.lambda = 1.0;
  rcft.em.divergence = Divergence::kCrossEntropy;
  rcft.em.learning_rate = 0.1;
  rcft.em.inner_steps = 50;
  const TrainResult r = train(base.sft.policy, base.start.train, rcft);
  const HistoryRow& re = r.history.back();
  const double secs = sw.Seconds();

  const bool sft_ok = s.acc >= 0.85 && s.conf_ece >= 0.05;
  const bool cft_ok = ce.conf_ece <= 0.5 * s.conf_ece && std::abs(ce.acc - s.acc) <= 0.02;
  const bool rcft_ok = re.acc > ce.acc && re.conf_ece < s.conf_ece;
  std::ostringstream detail;
  detail << "sft acc=" << Fmt("%.4f", s.acc) << " ece=" << Fmt("%.4f", s.conf_ece)
         << (sft_ok ? "" : " FAIL") << "; cft acc=" << Fmt("%.4f", ce.acc)
         << " ece=" << Fmt("%.4f", ce.conf_ece) << (cft_ok ? "" : " FAIL")
         << "; rcft acc=" << Fmt("%.4f", re.acc) << " ece=" << Fmt("%.4f", re.conf_ece)
         << (rcft_ok ? "" : " FAIL") << "; t=" << Fmt("%.2fs", secs);
  return {sft_ok && cft_ok && rcft_ok && secs < 60.0, detail.str()};
}

// ECE-only training collapses toward chance; lambda = 0 is plain SFT.
Outcome Criterion9() {
  Stopwatch sw;
  const ToyBaseline base = SftBaseline();
  const double chance = 1.0 / static_cast<double>(base.start.train.k);

  TrainSpec ece_only;
  ece_only.mode = TrainMode::kCft;
  ece_only.em.sft_weight = 0.0;
  ece_only.em.lambda = 1.0;
  ece_only.em.divergence = Divergence::kCrossEntropy;
  ece_only.em.epochs = 40;
  ece_only.em.learning_rate = 0.5;
  ece_only.em.inner_steps = 50;
  const TrainResult e = train(base.sft.policy, base.start.train, ece_only);
  const HistoryRow& ee = e.history.back();
  const bool collapse_ok = std::abs(ee.acc - chance) <= 0.05 && ee.conf_ece < 0.02;

  TrainSpec sft;
  sft.em.epochs = 5;
  sft.em.learning_rate = 0.05;
  TrainSpec zero = sft;
  zero.mode = TrainMode::kCft;
  zero.em.lambda = 0.0;
  const TrainResult a = train(base.start.sharpened, base.start.train, sft);
  const TrainResult b = train(base.start.sharpened, base.start.train, zero);
  const bool same = std::get<LinearPolicy>(a.policy) == std::get<LinearPolicy>(b.policy) &&
                    a.history == b.history;
  const double secs = sw.Seconds();

  std::ostringstream detail;
  detail << "ece-only acc=" << Fmt("%.4f", ee.acc) << " (1/k=" << Fmt("%.2f", chance)
         << ") ece=" << Fmt("%.4f", ee.conf_ece) << (collapse_ok ? "" : " FAIL")
         << "; lambda=0 vs sft-only " << (same ? "bitwise equal" : "DIFFER FAIL")
         << "; t=" << Fmt("%.2fs", secs);
  return {collapse_ok && same && secs < 60.0, detail.str()};
}

// Temperature scaling keeps accuracy; the fitted temperature never hurts.
Outcome Criterion10() {
  Stopwatch sw;
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<std::size_t> k_dist(2, 6);
  std::uniform_int_distribution<std::size_t> n_dist(20, 200);
  std::uniform_real_distribution<double> scale_dist(0.2, 6.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double grid[] = {0.05, 0.1, 0.25, 0.5, 0.8, 1.0, 1.25, 2.0, 3.0, 5.0, 10.0, 20.0};
  int acc_changes = 0, ece_increases = 0;
  for (int d = 0; d < 1000; ++d) {
    const std::size_t k = k_dist(rng), n = n_dist(rng);
    const double scale = scale_dist(rng);
    std::vector<PredictionRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> z(k);
      for (double& x : z) x = scale * normal(rng);
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double& x : z) sum += (x = std::exp(x - mx));
      for (double& x : z) x /= sum;
      const std::vector<double>& draw = z;
      // Label from the softmax itself with probability one half, else uniform.
      ClassIndex label = static_cast<ClassIndex>(std::min<std::size_t>(k - 1, k * u(rng)));
      if (u(rng) < 0.5) {
        double r = u(rng), acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          acc += draw[j];
          if (r <= acc) {
            label = static_cast<ClassIndex>(j);
            break;
          }
        }
      }
      records.push_back({"r" + std::to_string(i), ConfidenceVector(draw), label, std::nullopt});
    }
    const Dataset ds(std::move(records));
    const double acc = accuracy(ds);
    for (double T : grid) {
      if (accuracy(apply_temperature(ds, T)) != acc) ++acc_changes;
    }
    const TemperatureFit fit = fit_temperature(ds);
    const double before = conf_ece(ds, BinningConfig{}).ece;
    const double after = conf_ece(apply_temperature(ds, fit.temperature), BinningConfig{}).ece;
    if (after > before || fit.ece_after > fit.ece_before) ++ece_increases;
  }
  const double secs = sw.Seconds();
  std::ostringstream detail;
  detail << "1000 datasets x 12 temperatures: " << acc_changes << " accuracy changes, "
         << ece_increases << " fitted ECE increases, t=" << Fmt("%.2fs", secs);
  return {acc_changes == 0 && ece_increases == 0 && secs < 10.0, detail.str()};
}

std::map<std::string, std::string> Snapshot(const fs::path& dir, const std::string& stdout_text,
                                            int code) {
  std::map<std::string, std::string> files;
  files["<stdout>"] = stdout_text;
  files["<exit>"] = std::to_string(code);
  if (fs::exists(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) {
        files[fs::relative(entry.path(), dir).string()] = io::read_file(entry.path().string());
      }
    }
  }
  return files;
}

// Every subcommand is byte-identical across two runs.
Outcome Criterion11() {
  const fs::path root = fs::temp_directory_path() / "calkit_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root / "inputs");
  const std::string data = (root / "inputs" / "dataset.jsonl").string();
  const std::string pairs = (root / "inputs" / "pairs.jsonl").string();
  const fs::path out = root / "out";
  {
    std::ostringstream o, e;
    cli::run_cli({"calkit", "simulate", "--model", "dirichlet", "--n", "5000", "--seed", "3",
                  "--out", (root / "inputs").string()},
                 o, e);
    io::write_file_atomic(pairs,
                          "{\"id\":\"a\",\"logp_chosen\":-1.5,\"logp_reject\":-2.0}\n"
                          "{\"id\":\"b\",\"logp_chosen\":-3.0,\"logp_reject\":-2.0}\n"
                          "{\"id\":\"c\",\"logp_chosen\":-0.5,\"logp_reject\":-0.75}\n");
  }
  const std::string o = out.string();
  const std::vector<std::vector<std::string>> commands = {
      {"simulate", "--model", "pure-random", "--n", "20000", "--seed", "9", "--out", o},
      {"simulate", "--model", "dirichlet", "--alpha", "0.5", "--random-weights", "--n", "20000",
       "--out", o},
      {"eval", data, "--bins", "heuristic", "--report", o + "/report.json", "--plot",
       o + "/plot.svg", "--acc-star", "0.7"},
      {"eval", data, "--plot", o + "/cw.svg", "--plot-mode", "per-class",
       "--class", "1"},
      {"bounds", "--model", (root / "inputs" / "model.json").string(), "--acc-star", "0.6",
       "--shape-seed", "5", "--acc-grid", "0.3,0.4,0.5", "--out", o + "/bounds.csv"},
      {"bounds", "--model", (root / "inputs" / "model.json").string(), "--acc-grid", "0.2,0.5"},
      {"train-toy", "--mode", "sft-only", "--n", "1500", "--epochs", "4", "--out", o},
      {"train-toy", "--mode", "label-smooth", "--n", "1500", "--epochs", "4", "--out", o},
      {"train-toy", "--mode", "ts", "--n", "1500", "--sft-epochs", "3", "--out", o},
      {"train-toy", "--mode", "cft", "--n", "1500", "--epochs", "4", "--sft-epochs", "3",
       "--out", o},
      {"train-toy", "--mode", "rcft", "--n", "1500", "--epochs", "4", "--sft-epochs", "3",
       "--out", o},
      {"train-toy", "--mode", "ece-only", "--n", "1500", "--epochs", "4", "--sft-epochs", "3",
       "--out", o},
      {"winrate", "--pairs", pairs},
  };
  bool pass = true;
  std::ostringstream detail;
  for (const auto& cmd : commands) {
    std::map<std::string, std::string> runs[2];
    for (auto& snap : runs) {
      fs::remove_all(out);
      fs::create_directories(out);
      std::vector<std::string> args{"calkit"};
      args.insert(args.end(), cmd.begin(), cmd.end());
      std::ostringstream so, se;
      const int code = cli::run_cli(args, so, se);
      snap = Snapshot(out, so.str(), code);
    }
    const bool same = runs[0] == runs[1];
    const bool ran = runs[0]["<exit>"] == "0";
    pass = pass && same && ran;
    detail << cmd[0];
    if (cmd[0] == "train-toy") detail << "(" << cmd[2] << ")";
    detail << (same ? "" : " DIFFER") << (ran ? "" : " EXIT=" + runs[0]["<exit>"]) << " ";
  }
  fs::remove_all(root);
  detail << "(" << commands.size() << " commands, " << (pass ? "identical" : "mismatch") << ")";
  return {pass, detail.str()};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& Criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> kAll = {
      {"zero ECE of the optimal predictor", Criterion1},
      {"TCE upper bound construction", Criterion2},
      {"TCE lower bound constant", Criterion3},
      {"classwise ECE below TCE", Criterion4},
      {"rank-preserving mapping suite", Criterion5},
      {"gradient oracle", Criterion6},
      {"metric fixtures", Criterion7},
      {"toy trend: sft-only, cft, rcft", Criterion8},
      {"toy trend: ece-only and lambda=0", Criterion9},
      {"temperature scaling invariants", Criterion10},
      {"CLI determinism", Criterion11},
  };
  return kAll;
}

}  // namespace
}  // namespace calkit

int main(int argc, char** argv) {
  CLI::App app{"Runs the acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const auto& criteria = calkit::Criteria();
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    calkit::Outcome result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    if (!result.pass) ++failures;
    std::printf("[%s] criterion %2zu (%s): %s\n", result.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, result.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
