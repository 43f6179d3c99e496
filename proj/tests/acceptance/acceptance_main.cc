/* Copyright 2026 The uapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "uapseg/attack.hpp"
#include "uapseg/data.hpp"
#include "uapseg/error.hpp"
#include "uapseg/eval.hpp"
#include "uapseg/frequency.hpp"
#include "uapseg/losses.hpp"
#include "uapseg/model.hpp"

namespace uapseg {
namespace {

namespace fs = std::filesystem;
using testing::FiniteDifferenceGradient;
using testing::Median;
using testing::RandomLabels;
using testing::RandomTensor;
using testing::RelativeError;
using testing::SetIouOracle;

// Pinned tolerances and gates.
constexpr double kOrthoTol = 1e-9;
constexpr double kProjectionTol = 1e-6;
constexpr double kConstantTol = 1e-9;
constexpr double kFdStep = 1e-3;
constexpr double kFdRelTol = 1e-3;
constexpr int kFdTrials = 20;
constexpr double kEpsilon = 10.0 / 255.0;
constexpr double kBoundSlack = 1e-9;
constexpr int kMiouPairs = 1000;
constexpr double kHandCaseTol = 1e-15;  // rounding of the rational 7/12
constexpr double kBenignGate = 0.85;
constexpr double kAttackRatio = 0.5;
constexpr double kAblationSlack = 0.05;
constexpr double kMonotoneSlack = 0.03;
const std::vector<uint64_t> kSeeds = {0, 1, 2};
const std::vector<double> kEpsilons = {2.0 / 255, 4.0 / 255, 8.0 / 255,
                                       10.0 / 255};

// Corpus and victims.
constexpr int kCorpusSize = 250;
constexpr uint64_t kCorpusSeed = 2026;
constexpr uint64_t kModelASeed = 11;
constexpr uint64_t kModelBSeed = 12;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void Report(const char* id, const char* title, const Outcome& o,
            double seconds) {
  std::printf("%s %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", title,
              o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

void RunCriterion(const char* id, const char* title,
                  const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  Report(id, title, o,
         std::chrono::duration<double>(Clock::now() - start).count());
}

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

Outcome FilterOrthonormality() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (int n = 2; n <= 64; n += 2) {
    const Matrix f = HaarLowpassFilter(n);
    const Matrix gram = f * f.transpose();
    worst = std::max(
        worst, (gram - Matrix::Identity(n / 2, n / 2)).cwiseAbs().maxCoeff());
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  return {worst < kOrthoTol && secs < 1.0,
          Fmt("max |LL^T - I| = %.2e over n = 2..64 (tol %.0e), %.3fs (< 1s)",
              worst, kOrthoTol, secs)};
}

Outcome LowpassProjection() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const FrequencyTransform t(8, 8);
  double idem = 0.0;
  double lin = 0.0;
  double cst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor3 x = RandomTensor(rng, {3, 8, 8}, 0.0, 1.0);
    const Tensor3 y = RandomTensor(rng, {3, 8, 8}, 0.0, 1.0);
    const double a = coef(rng);
    const double b = coef(rng);
    const Tensor3 px = LowpassProject(x, t);
    const Tensor3 py = LowpassProject(y, t);
    idem = std::max(idem, MaxAbsDiff(LowpassProject(px, t).values(), px.values()));
    Tensor3 combo(x.shape());
    Tensor3 expected(x.shape());
    for (std::size_t j = 0; j < x.size(); ++j) {
      combo[j] = a * x[j] + b * y[j];
      expected[j] = a * px[j] + b * py[j];
    }
    lin = std::max(lin, MaxAbsDiff(LowpassProject(combo, t).values(),
                                   expected.values()));
    const Tensor3 c(3, 8, 8, coef(rng));
    cst = std::max(cst, MaxAbsDiff(LowpassProject(c, t).values(), c.values()));
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  return {idem < kProjectionTol && lin < kProjectionTol && cst < kConstantTol &&
              secs < 5.0,
          Fmt("idempotence %.1e, linearity %.1e (tol %.0e); constants %.1e "
              "(tol %.0e); 100 images",
              idem, lin, kProjectionTol, cst, kConstantTol)};
}

Outcome GradientCorrectness() {
  const auto start = Clock::now();
  struct TermCase {
    const char* name;
    unsigned terms;
  };
  const TermCase cases[] = {{"J_pd", kTermPixelDeviation},
                            {"J_fd", kTermFeatureDeviation},
                            {"J_ls", kTermLowFrequency},
                            {"J_total", kAllTerms}};
  const FrequencyTransform transform(8, 8);
  std::map<std::string, double> worst;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < kFdTrials; ++trial) {
    const Segmenter model(Architecture::kToyA, 4, 100 + trial);
    const Tensor3 x = RandomTensor(rng, {3, 8, 8}, 0.05, 0.95);
    Tensor3 x_adv = x;
    std::uniform_real_distribution<double> d(-kEpsilon, kEpsilon);
    for (double& v : x_adv.values()) v += d(rng);
    const LabelMap labels = RandomLabels(rng, 8, 8, 4, kDefaultIgnoreLabel, 0.1);
    const Tensor3 benign = model.Forward(x);
    // The success mask is a selector and is held fixed while probing.
    const SuccessMask mask =
        ComputeSuccessMask(model.Forward(x_adv), labels, kDefaultIgnoreLabel);
    for (const TermCase& c : cases) {
      AttackConfig cfg;
      cfg.enabled_terms = c.terms;
      const ObjectiveResult r = EvaluateObjective(model, x_adv, x, labels,
                                                  benign, cfg, transform, &mask);
      auto f = [&](const Tensor3& z) {
        return EvaluateObjective(model, z, x, labels, benign, cfg, transform,
                                 &mask)
            .loss.j_total;
      };
      const double err =
          RelativeError(r.grad_x_adv, FiniteDifferenceGradient(f, x_adv, kFdStep));
      worst[c.name] = std::max(worst[c.name], err);
    }
  }
  bool ok = true;
  std::string detail;
  for (const TermCase& c : cases) {
    ok = ok && worst[c.name] < kFdRelTol;
    detail += Fmt("%s %.1e, ", c.name, worst[c.name]);
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  ok = ok && secs < 120.0;
  detail += Fmt("max rel err over %d trials (tol %.0e, step %.0e)", kFdTrials,
                kFdRelTol, kFdStep);
  return {ok, detail};
}

Outcome MiouOracle() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> kdist(2, 5);
  int mismatches = 0;
  int compared = 0;
  for (int i = 0; i < kMiouPairs; ++i) {
    const int k = kdist(rng);
    const LabelMap truth = RandomLabels(rng, 8, 8, k, kDefaultIgnoreLabel, 0.15);
    const LabelMap pred = RandomLabels(rng, 8, 8, k);
    ConfusionMatrix acc(k);
    AccumulateConfusion(pred, truth, kDefaultIgnoreLabel, acc);
    if (acc.Total() == 0) continue;
    SetIouOracle oracle(k, kDefaultIgnoreLabel);
    oracle.Add(pred, truth);
    ++compared;
    mismatches += ComputeMiou(acc).miou != oracle.Miou();
  }
  ConfusionMatrix hand(2);
  hand.at(0, 0) = 2;
  hand.at(0, 1) = 1;
  hand.at(1, 1) = 1;
  const double h = ComputeMiou(hand).miou;
  return {mismatches == 0 && compared == kMiouPairs &&
              std::abs(h - 7.0 / 12.0) <= kHandCaseTol,
          Fmt("%d/%d pairs differ from set oracle (exact); [[2,1],[0,1]] -> "
              "%.17g (7/12 within %.0e)",
              mismatches, compared, h, kHandCaseTol)};
}

// Shared state for the end-to-end criteria.
struct Bench {
  DatasetSplit split;
  Segmenter model_a{Architecture::kToyA, 4, kModelASeed};
  Segmenter model_b{Architecture::kToyB, 4, kModelBSeed};
  double benign_a = 0.0;
  double benign_b = 0.0;
  // (epsilon index, seed) -> full-term result.
  std::map<std::pair<int, uint64_t>, UapResult> full;
  std::map<uint64_t, UapResult> pd_only;
  // Instrumented constraint check on the default run.
  double max_delta = 0.0;
  double min_input = 1.0;
  double max_input = 0.0;
  long inputs_seen = 0;
  int steps_seen = 0;
};

AttackConfig ConfigFor(double epsilon, uint64_t seed, unsigned terms) {
  AttackConfig cfg = AttackConfig::WithEpsilon(epsilon);
  cfg.seed = seed;
  cfg.enabled_terms = terms;
  return cfg;
}

void Prepare(Bench& b) {
  ShapesOptions opts;
  opts.seed = kCorpusSeed;
  b.split = SplitTrainEval(GenerateShapesDataset(kCorpusSize, opts));
  TrainToy(b.model_a, b.split.train, TrainConfig{});
  TrainToy(b.model_b, b.split.train, TrainConfig{});
  b.benign_a = Evaluate(b.model_a, b.split.eval).miou;
  b.benign_b = Evaluate(b.model_b, b.split.eval).miou;

  AttackHooks hooks;
  hooks.on_model_input = [&](const Tensor3& x) {
    ++b.inputs_seen;
    for (double v : x.values()) {
      b.min_input = std::min(b.min_input, v);
      b.max_input = std::max(b.max_input, v);
    }
  };
  hooks.on_step = [&](int, const Perturbation& d, const LossBreakdown&) {
    ++b.steps_seen;
    b.max_delta = std::max(b.max_delta, d.MaxAbs());
  };
  const int last = static_cast<int>(kEpsilons.size()) - 1;
  for (uint64_t seed : kSeeds) {
    for (int e = 0; e <= last; ++e) {
      const bool instrument = seed == kSeeds.front() && e == last;
      b.full.emplace(std::pair{e, seed},
                     TrainUap(b.split.train, b.model_a,
                              ConfigFor(kEpsilons[e], seed, kAllTerms),
                              instrument ? &hooks : nullptr));
    }
    b.pd_only.emplace(seed, TrainUap(b.split.train, b.model_a,
                                     ConfigFor(kEpsilon, seed,
                                               kTermPixelDeviation)));
  }
}

double AdvMiou(const Segmenter& m, const Dataset& d, const UapResult& r) {
  return Evaluate(m, d, &r.perturbation).miou;
}

Outcome ConstraintSafety(const Bench& b) {
  const int expected_steps = 5 * ((200 + 4) / 5);
  const bool ok = b.max_delta <= kEpsilon + kBoundSlack && b.min_input >= 0.0 &&
                  b.max_input <= 1.0 && b.steps_seen == expected_steps &&
                  b.inputs_seen > 0;
  return {ok, Fmt("max ||delta||_inf %.10f (bound %.10f + %.0e) over %d "
                  "steps; %ld model inputs in [%.3f, %.3f]",
                  b.max_delta, kEpsilon, kBoundSlack, b.steps_seen,
                  b.inputs_seen, b.min_input, b.max_input)};
}

Outcome Efficacy(const Bench& b) {
  const int last = static_cast<int>(kEpsilons.size()) - 1;
  const double adv = AdvMiou(b.model_a, b.split.eval,
                             b.full.at({last, kSeeds.front()}));
  return {b.benign_a >= kBenignGate && adv <= kAttackRatio * b.benign_a,
          Fmt("benign mIoU %.4f (>= %.2f); adversarial %.4f (<= %.2f x "
              "benign = %.4f)",
              b.benign_a, kBenignGate, adv, kAttackRatio,
              kAttackRatio * b.benign_a)};
}

Outcome AblationOrdering(const Bench& b) {
  const int last = static_cast<int>(kEpsilons.size()) - 1;
  std::vector<double> full;
  std::vector<double> pd;
  for (uint64_t seed : kSeeds) {
    full.push_back(AdvMiou(b.model_a, b.split.eval, b.full.at({last, seed})));
    pd.push_back(AdvMiou(b.model_a, b.split.eval, b.pd_only.at(seed)));
  }
  const double mf = Median(full);
  const double mp = Median(pd);
  return {mf <= mp + kAblationSlack,
          Fmt("median adv mIoU {pd,fd,ls} %.4f vs {pd} %.4f (+%.2f slack); "
              "seeds 0-2 full %.4f/%.4f/%.4f pd %.4f/%.4f/%.4f",
              mf, mp, kAblationSlack, full[0], full[1], full[2], pd[0], pd[1],
              pd[2])};
}

Outcome EpsilonMonotonicity(const Bench& b) {
  std::vector<double> medians;
  for (int e = 0; e < static_cast<int>(kEpsilons.size()); ++e) {
    std::vector<double> v;
    for (uint64_t seed : kSeeds) {
      v.push_back(AdvMiou(b.model_a, b.split.eval, b.full.at({e, seed})));
    }
    medians.push_back(Median(v));
  }
  bool ok = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    ok = ok && medians[i] <= medians[i - 1] + kMonotoneSlack;
  }
  return {ok, Fmt("median adv mIoU at eps 2/4/8/10 /255: %.4f %.4f %.4f %.4f "
                  "(non-increasing within %.2f)",
                  medians[0], medians[1], medians[2], medians[3],
                  kMonotoneSlack)};
}

Outcome Transferability(const Bench& b) {
  const int last = static_cast<int>(kEpsilons.size()) - 1;
  bool ok = true;
  std::string values;
  for (uint64_t seed : kSeeds) {
    const double m = AdvMiou(b.model_b, b.split.eval, b.full.at({last, seed}));
    ok = ok && m < b.benign_b;
    values += Fmt(" %.4f", m);
  }
  return {ok, Fmt("model B benign %.4f; under model-A deltas (seeds 0-2):%s",
                  b.benign_b, values.c_str())};
}

Outcome DeterminismAndSerialization(const Bench& b) {
  const int last = static_cast<int>(kEpsilons.size()) - 1;
  const UapResult& ref = b.full.at({last, kSeeds.front()});
  const UapResult again = TrainUap(b.split.train, b.model_a,
                                   ConfigFor(kEpsilon, kSeeds.front(), kAllTerms));
  const bool same_delta =
      again.perturbation.delta.size() == ref.perturbation.delta.size() &&
      std::memcmp(again.perturbation.delta.data(), ref.perturbation.delta.data(),
                  ref.perturbation.delta.size() * sizeof(float)) == 0;

  const fs::path dir = fs::temp_directory_path() / "uapseg_acceptance";
  fs::create_directories(dir);
  const std::string pert_path = (dir / "delta.uap").string();
  SavePerturbation(ref.perturbation, pert_path);
  const Perturbation loaded = LoadPerturbation(pert_path);
  const bool pert_rt =
      loaded.delta.size() == ref.perturbation.delta.size() &&
      std::memcmp(loaded.delta.data(), ref.perturbation.delta.data(),
                  loaded.delta.size() * sizeof(float)) == 0 &&
      loaded.epsilon == ref.perturbation.epsilon &&
      loaded.trained_on == ref.perturbation.trained_on;

  const std::string ckpt_path = (dir / "a.ckpt").string();
  SaveCheckpoint(b.model_a, ckpt_path);
  const Segmenter reloaded = LoadCheckpoint(ckpt_path);
  const bool ckpt_rt = reloaded.Parameters() == b.model_a.Parameters() &&
                       reloaded.model_id() == b.model_a.model_id();

  // Out-of-bound file: overwrite the last stored value with eps + 0.1.
  const std::string bad_path = (dir / "bad.uap").string();
  fs::copy_file(pert_path, bad_path, fs::copy_options::overwrite_existing);
  {
    const float bad = static_cast<float>(kEpsilon + 0.1);
    std::fstream f(bad_path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-static_cast<std::streamoff>(sizeof(float)), std::ios::end);
    f.write(reinterpret_cast<const char*>(&bad), sizeof bad);
  }
  bool rejected = false;
  try {
    LoadPerturbation(bad_path);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::kIntegrity;
  }
  fs::remove_all(dir);
  return {same_delta && pert_rt && ckpt_rt && rejected,
          Fmt("rerun delta bit-identical: %s; perturbation round trip: %s; "
              "checkpoint round trip: %s; out-of-bound file rejected: %s",
              same_delta ? "yes" : "no", pert_rt ? "yes" : "no",
              ckpt_rt ? "yes" : "no", rejected ? "yes" : "no")};
}

}  // namespace
}  // namespace uapseg

int main() {
  using namespace uapseg;
  RunCriterion("AC1", "filter orthonormality", FilterOrthonormality);
  RunCriterion("AC2", "low-pass projection", LowpassProjection);
  RunCriterion("AC3", "gradient correctness", GradientCorrectness);

  Bench bench;
  const auto start = Clock::now();
  bool ready = true;
  std::string setup_error;
  try {
    Prepare(bench);
  } catch (const std::exception& e) {
    ready = false;
    setup_error = e.what();
  }
  std::printf("     setup: corpus %zu/%zu, victims and %zu attack runs in %.1fs\n",
              bench.split.train.size(), bench.split.eval.size(),
              bench.full.size() + bench.pd_only.size(),
              std::chrono::duration<double>(Clock::now() - start).count());

  auto e2e = [&](const char* id, const char* title, Outcome (*f)(const Bench&)) {
    if (!ready) {
      Report(id, title, {false, "setup failed: " + setup_error}, 0.0);
      return;
    }
    RunCriterion(id, title, [&] { return f(bench); });
  };
  e2e("AC4", "constraint safety", ConstraintSafety);
  RunCriterion("AC5", "mIoU oracle equivalence", MiouOracle);
  e2e("AC6", "desk-scale efficacy", Efficacy);
  e2e("AC7", "ablation ordering", AblationOrdering);
  e2e("AC8", "epsilon monotonicity", EpsilonMonotonicity);
  e2e("AC9", "transferability", Transferability);
  e2e("AC10", "determinism and serialization", DeterminismAndSerialization);

  std::printf("%s: %d criteria failed\n", g_failures ? "FAILED" : "OK",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
