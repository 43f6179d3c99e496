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

#include "uapseg/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace uapseg {
namespace {

using testing::CodeOf;
using testing::RandomTensor;

Dataset SmallData(uint64_t seed, int n = 10) {
  ShapesOptions opts;
  opts.height = 16;
  opts.width = 16;
  opts.seed = seed;
  return GenerateShapesDataset(n, opts);
}

SegmentationBatch AsBatch(const Dataset& d, std::size_t n) {
  SegmentationBatch b;
  for (std::size_t i = 0; i < std::min(n, d.size()); ++i) {
    b.push_back(&d.examples[i]);
  }
  return b;
}

const Segmenter& TrainedModel() {
  static const Segmenter* model = [] {
    auto* m = new Segmenter(Architecture::kToyA, 4, 3);
    TrainConfig cfg;
    cfg.epochs = 4;
    TrainToy(*m, SmallData(100, 40), cfg);
    return m;
  }();
  return *model;
}

TEST(ProjectTest, Examples) {
  const double eps = 0.1;
  std::mt19937_64 rng(1);
  const Tensor3 inside = RandomTensor(rng, {3, 4, 4}, -eps, eps);
  const Tensor3 p = Project(inside, eps);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], inside[i]);

  const Tensor3 twice = Project(Tensor3(3, 4, 4, 2 * eps), eps);
  for (double v : twice.values()) EXPECT_EQ(v, eps);

  const Tensor3 wild = RandomTensor(rng, {3, 8, 8}, -1, 1);
  const Tensor3 q = Project(wild, eps);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double w = wild[i];
    EXPECT_EQ(q[i], w > eps ? eps : (w < -eps ? -eps : w));
  }
}

TEST(ApplyPerturbationTest, ClampsToUnitRange) {
  Tensor3 x(1, 1, 3);
  x[0] = 0.02;
  x[1] = 0.5;
  x[2] = 0.99;
  Tensor3 d(1, 1, 3);
  d[0] = -0.04;
  d[1] = 0.03;
  d[2] = 0.04;
  const Tensor3 xa = ApplyPerturbation(x, d);
  EXPECT_EQ(xa[0], 0.0);
  EXPECT_DOUBLE_EQ(xa[1], 0.53);
  EXPECT_EQ(xa[2], 1.0);
}

TEST(TermsTest, ParseAndFormat) {
  EXPECT_EQ(ParseTerms("pd"), kTermPixelDeviation);
  EXPECT_EQ(ParseTerms("pd,fd,ls"), kAllTerms);
  EXPECT_EQ(ParseTerms(" ls , pd "), kTermPixelDeviation | kTermLowFrequency);
  EXPECT_EQ(FormatTerms(kAllTerms), "pd,fd,ls");
  EXPECT_EQ(CodeOf([] { ParseTerms(""); }), ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([] { ParseTerms("pd,xx"); }), ErrorCode::kUsage);
}

TEST(AttackConfigTest, DefaultsAndValidation) {
  const AttackConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.epsilon, 10.0 / 255.0);
  EXPECT_DOUBLE_EQ(cfg.step_size, cfg.epsilon / 10.0);
  EXPECT_EQ(cfg.batch_size, 5);
  EXPECT_EQ(cfg.k, 1.0);
  EXPECT_EQ(cfg.lambda, 0.3);
  EXPECT_DOUBLE_EQ(AttackConfig::WithEpsilon(0.02).step_size, 0.002);
  cfg.Validate();

  AttackConfig bad = cfg;
  bad.enabled_terms = 0;
  EXPECT_EQ(CodeOf([&] { bad.Validate(); }), ErrorCode::kConfig);
  bad = cfg;
  bad.step_size = 0.0;
  EXPECT_EQ(CodeOf([&] { bad.Validate(); }), ErrorCode::kConfig);
  bad = cfg;
  bad.step_size = 2 * cfg.epsilon;
  EXPECT_EQ(CodeOf([&] { bad.Validate(); }), ErrorCode::kConfig);
  bad = cfg;
  bad.lambda = 1.5;
  EXPECT_EQ(CodeOf([&] { bad.Validate(); }), ErrorCode::kConfig);
}

// With only the pixel term and lambda = 1/2 the step is plain CE ascent.
TEST(UapStepTest, HalfLambdaPixelTermIsCrossEntropyAscent) {
  const Dataset data = SmallData(2, 5);
  const Segmenter& model = TrainedModel();
  AttackConfig cfg;
  cfg.enabled_terms = kTermPixelDeviation;
  cfg.lambda = 0.5;
  const SegmentationBatch batch = AsBatch(data, 5);

  Perturbation delta = Perturbation::Zeros(data.image_shape(), cfg.epsilon);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  for (float& v : delta.delta) v = u(rng) * delta.epsilon;
  const Tensor3 d0 = delta.AsTensor();

  // Oracle: batch mean of d(mean CE)/dx through the clamp.
  Tensor3 ce_grad(d0.shape());
  for (const Example* ex : batch) {
    Tensor3 xa(d0.shape());
    for (std::size_t i = 0; i < xa.size(); ++i) {
      xa[i] = std::min(1.0, std::max(0.0, ex->image[i] + d0[i]));
    }
    auto mean_ce = [&](const Tensor3& z, Tensor3* g) {
      const int k = z.channels();
      const std::size_t plane = z.shape().plane();
      *g = Tensor3(z.shape());
      double total = 0.0;
      for (std::size_t p = 0; p < plane; ++p) {
        double zsum = 0.0;
        for (int c = 0; c < k; ++c) zsum += std::exp(z[c * plane + p]);
        const int y = ex->labels[p];
        total += std::log(zsum) - z[y * plane + p];
        for (int c = 0; c < k; ++c) {
          (*g)[c * plane + p] =
              (std::exp(z[c * plane + p]) / zsum - (c == y)) / plane;
        }
      }
      return total / plane;
    };
    const Tensor3 g = model.InputGradient(mean_ce, xa);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = ex->image[i] + d0[i];
      if (s >= 0.0 && s <= 1.0) ce_grad[i] += g[i] / batch.size();
    }
  }

  UapStep(delta, batch, model, cfg);
  const double scale = MaxAbs(ce_grad.values());
  int compared = 0;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    if (std::abs(ce_grad[i]) < 1e-9 * scale) continue;
    ++compared;
    const double expected = std::clamp(
        d0[i] + cfg.step_size * (ce_grad[i] > 0 ? 1.0 : -1.0), -cfg.epsilon,
        cfg.epsilon);
    EXPECT_NEAR(delta.delta[i], expected, 1e-7) << "coordinate " << i;
  }
  EXPECT_GT(compared, static_cast<int>(d0.size()) / 2);
}

TEST(UapStepTest, ZeroStepLeavesDeltaButReportsLoss) {
  const Dataset data = SmallData(4, 5);
  AttackConfig cfg;
  cfg.step_size = 0.0;
  Perturbation delta = Perturbation::Zeros(data.image_shape(), cfg.epsilon);
  delta.delta[7] = 0.01f;
  const std::vector<float> before = delta.delta;
  const LossBreakdown loss = UapStep(delta, AsBatch(data, 5), TrainedModel(), cfg);
  EXPECT_EQ(delta.delta, before);
  EXPECT_LT(loss.j_total, 0.0);
  EXPECT_GT(loss.ce_mean, 0.0);
}

TEST(UapStepTest, NumericFailureLeavesDeltaUntouched) {
  const Dataset data = SmallData(5, 2);
  Segmenter broken(Architecture::kToyB, 4, 0);
  std::vector<double> params = broken.Parameters();
  params[0] = std::numeric_limits<double>::quiet_NaN();
  broken.SetParameters(params);
  AttackConfig cfg;
  Perturbation delta = Perturbation::Zeros(data.image_shape(), cfg.epsilon);
  delta.delta[0] = 0.02f;
  const std::vector<float> before = delta.delta;
  EXPECT_EQ(CodeOf([&] { UapStep(delta, AsBatch(data, 2), broken, cfg); }),
            ErrorCode::kNumeric);
  EXPECT_EQ(delta.delta, before);
}

TEST(UapStepTest, OneStepDescendsInMostTrials) {
  const Segmenter& model = TrainedModel();
  int descended = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const Dataset data = SmallData(1000 + t, 5);
    const SegmentationBatch batch = AsBatch(data, 5);
    AttackConfig cfg;
    Perturbation delta = Perturbation::Zeros(data.image_shape(), cfg.epsilon);
    const double before = EvaluateBatch(delta, batch, model, cfg).j_total;
    UapStep(delta, batch, model, cfg);
    const double after = EvaluateBatch(delta, batch, model, cfg).j_total;
    descended += after <= before;
  }
  EXPECT_GE(descended, trials * 9 / 10);
}

TEST(TrainUapTest, ZeroEpochsGiveZeroDelta) {
  const Dataset data = SmallData(6, 5);
  AttackConfig cfg;
  cfg.epochs = 0;
  const UapResult r = TrainUap(data, TrainedModel(), cfg);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.perturbation.MaxAbs(), 0.0);
  EXPECT_EQ(r.perturbation.trained_on, TrainedModel().model_id());
}

TEST(TrainUapTest, DeterministicGivenSeed) {
  const Dataset data = SmallData(7, 10);
  AttackConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  const UapResult a = TrainUap(data, TrainedModel(), cfg);
  const UapResult b = TrainUap(data, TrainedModel(), cfg);
  EXPECT_EQ(a.perturbation.delta, b.perturbation.delta);
  EXPECT_EQ(a.manifest, b.manifest);
  ASSERT_EQ(a.history.size(), 4u);
  cfg.seed = 6;
  EXPECT_NE(TrainUap(data, TrainedModel(), cfg).perturbation.delta,
            a.perturbation.delta);
}

TEST(TrainUapTest, ManifestRecordsRun) {
  const Dataset data = SmallData(8, 5);
  AttackConfig cfg;
  cfg.epochs = 1;
  const UapResult r = TrainUap(data, TrainedModel(), cfg);
  auto find = [&](const std::string& key) {
    for (const auto& [k, v] : r.manifest) {
      if (k == key) return v;
    }
    return std::string("<missing>");
  };
  EXPECT_EQ(find("model_id"), TrainedModel().model_id());
  EXPECT_EQ(find("dataset_fingerprint"), DatasetFingerprint(data));
  EXPECT_EQ(find("steps"), "1");
  EXPECT_EQ(find("perturbation_id"), r.perturbation.Id());
  EXPECT_EQ(find("terms"), "pd,fd,ls");
}

TEST(TrainUapTest, ZeroWeightMatchesDroppedFrequencyTerm) {
  const Dataset data = SmallData(9, 10);
  AttackConfig with_ls;
  with_ls.epochs = 2;
  with_ls.k = 0.0;
  AttackConfig without = with_ls;
  without.enabled_terms = kTermPixelDeviation | kTermFeatureDeviation;
  const UapResult a = TrainUap(data, TrainedModel(), with_ls);
  const UapResult b = TrainUap(data, TrainedModel(), without);
  EXPECT_EQ(a.perturbation.delta, b.perturbation.delta);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].j_total, b.history[i].j_total);
    EXPECT_EQ(a.history[i].j_pd, b.history[i].j_pd);
    EXPECT_EQ(a.history[i].j_fd, b.history[i].j_fd);
    EXPECT_EQ(a.history[i].ce_mean, b.history[i].ce_mean);
    EXPECT_EQ(b.history[i].j_ls, 0.0);
  }
}

TEST(TrainUapTest, HooksSeeOnlyFeasiblePoints) {
  const Dataset data = SmallData(10, 10);
  AttackConfig cfg;
  cfg.epochs = 3;
  cfg.step_size = cfg.epsilon / 2;
  double max_delta = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  int steps = 0;
  long inputs = 0;
  AttackHooks hooks;
  hooks.on_model_input = [&](const Tensor3& x) {
    ++inputs;
    for (double v : x.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  hooks.on_step = [&](int step, const Perturbation& d, const LossBreakdown&) {
    EXPECT_EQ(step, steps++);
    max_delta = std::max(max_delta, d.MaxAbs());
  };
  TrainUap(data, TrainedModel(), cfg, &hooks);
  EXPECT_EQ(steps, 6);
  EXPECT_GT(inputs, 0);
  EXPECT_LE(max_delta, 10.0 / 255.0 + 1e-9);
  EXPECT_GT(max_delta, 0.0);
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
}

TEST(TrainUapTest, InvalidConfigsAreRejected) {
  const Dataset data = SmallData(11, 3);
  AttackConfig cfg;
  cfg.enabled_terms = 0;
  EXPECT_EQ(CodeOf([&] { TrainUap(data, TrainedModel(), cfg); }),
            ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([&] { TrainUap(Dataset{}, TrainedModel(), AttackConfig{}); }),
            ErrorCode::kData);
}

}  // namespace
}  // namespace uapseg
