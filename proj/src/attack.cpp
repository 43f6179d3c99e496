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
#include <sstream>

#include "uapseg/error.hpp"

namespace uapseg {
namespace {

// Nearest float to v whose magnitude does not exceed bound.
float ToFloatWithin(double v, double bound) {
  float f = static_cast<float>(v);
  if (std::abs(static_cast<double>(f)) > bound) {
    f = std::nextafter(f, 0.0f);
  }
  return f;
}

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void RequireFiniteTensor(const Tensor3& t, const char* what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      Fail(ErrorCode::kNumeric, std::string("non-finite ") + what);
    }
  }
}

void AddScaled(LossBreakdown& acc, const LossBreakdown& x, double s) {
  acc.j_pd += s * x.j_pd;
  acc.j_fd += s * x.j_fd;
  acc.j_ls += s * x.j_ls;
  acc.j_total += s * x.j_total;
  acc.ce_mean += s * x.ce_mean;
}

// Shared by EvaluateBatch and UapStep. When grad_sum is non-null it receives
// the batch-mean gradient with respect to delta.
LossBreakdown BatchObjective(const Perturbation& delta,
                             const SegmentationBatch& batch,
                             const Segmenter& model, const AttackConfig& cfg,
                             const AttackHooks* hooks, Tensor3* grad_sum) {
  if (batch.empty()) Fail(ErrorCode::kData, "empty batch");
  const Tensor3 d = delta.AsTensor();
  const FrequencyTransform transform(d.height(), d.width());
  LossBreakdown mean;
  if (grad_sum != nullptr) *grad_sum = Tensor3(d.shape());
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const Example* ex : batch) {
    RequireSameShape(ex->image.shape(), d.shape(), "perturbation vs image");
    const Tensor3 x_adv = ApplyPerturbation(ex->image, d);
    if (hooks != nullptr && hooks->on_model_input) {
      hooks->on_model_input(ex->image);
      hooks->on_model_input(x_adv);
    }
    // Benign logits are recomputed per batch and carry no gradient.
    const Tensor3 benign = model.Forward(ex->image);
    ObjectiveResult r = EvaluateObjective(model, x_adv, ex->image, ex->labels,
                                          benign, cfg, transform);
    AddScaled(mean, r.loss, inv);
    if (grad_sum != nullptr) {
      for (std::size_t i = 0; i < r.grad_x_adv.size(); ++i) {
        const double s = ex->image[i] + d[i];
        // Gradient flows through clamp(., 0, 1) only inside the range.
        if (s >= 0.0 && s <= 1.0) (*grad_sum)[i] += inv * r.grad_x_adv[i];
      }
    }
  }
  if (!std::isfinite(mean.j_total)) Fail(ErrorCode::kNumeric, "non-finite loss");
  if (grad_sum != nullptr) RequireFiniteTensor(*grad_sum, "gradient");
  return mean;
}

}  // namespace

unsigned ParseTerms(const std::string& csv) {
  unsigned terms = 0;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok.empty()) continue;
    if (tok == "pd") {
      terms |= kTermPixelDeviation;
    } else if (tok == "fd") {
      terms |= kTermFeatureDeviation;
    } else if (tok == "ls") {
      terms |= kTermLowFrequency;
    } else {
      Fail(ErrorCode::kUsage, "unknown loss term '" + tok + "' (use pd, fd, ls)");
    }
  }
  if (terms == 0) Fail(ErrorCode::kUsage, "no loss terms enabled");
  return terms;
}

std::string FormatTerms(unsigned terms) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += ",";
    out += name;
  };
  if (terms & kTermPixelDeviation) add("pd");
  if (terms & kTermFeatureDeviation) add("fd");
  if (terms & kTermLowFrequency) add("ls");
  return out;
}

AttackConfig AttackConfig::WithEpsilon(double epsilon) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.step_size = epsilon / 10.0;
  return cfg;
}

void AttackConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    Fail(ErrorCode::kConfig, "epsilon must be positive");
  }
  if (!(step_size > 0.0) || step_size > epsilon) {
    Fail(ErrorCode::kConfig, "step_size must satisfy 0 < step_size <= epsilon");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    Fail(ErrorCode::kConfig, "lambda must lie in [0, 1]");
  }
  if (!std::isfinite(k)) Fail(ErrorCode::kConfig, "k must be finite");
  if ((enabled_terms & kAllTerms) == 0) {
    Fail(ErrorCode::kConfig, "at least one loss term must be enabled");
  }
  if (epochs < 0) Fail(ErrorCode::kConfig, "epochs must be >= 0");
  if (batch_size <= 0) Fail(ErrorCode::kConfig, "batch_size must be positive");
}

std::vector<std::pair<std::string, std::string>> AttackConfig::Snapshot()
    const {
  return {
      {"epsilon", FormatDouble(epsilon)},
      {"step_size", FormatDouble(step_size)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"k", FormatDouble(k)},
      {"lambda", FormatDouble(lambda)},
      {"seed", std::to_string(seed)},
      {"terms", FormatTerms(enabled_terms)},
      {"ignore_label", std::to_string(ignore_label)},
  };
}

Tensor3 Project(const Tensor3& delta, double epsilon) {
  Tensor3 out(delta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(delta[i], -epsilon, epsilon);
  }
  return out;
}

Tensor3 ApplyPerturbation(const Tensor3& x, const Tensor3& delta) {
  RequireSameShape(x.shape(), delta.shape(), "perturbation vs image");
  Tensor3 out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(x[i] + delta[i], 0.0, 1.0);
  }
  return out;
}

ObjectiveResult EvaluateObjective(const Segmenter& model,
                                  const Tensor3& x_adv, const Tensor3& x,
                                  const LabelMap& labels,
                                  const Tensor3& benign_logits,
                                  const AttackConfig& cfg,
                                  const FrequencyTransform& transform,
                                  const SuccessMask* fixed_mask) {
  const unsigned terms = cfg.enabled_terms;
  const ForwardTrace trace = model.ForwardWithTrace(x_adv);
  const PixelCe ce = PixelCeMap(trace.logits, labels, cfg.ignore_label);

  double j_pd = 0.0;
  double j_fd = 0.0;
  double j_ls = 0.0;
  Tensor3 grad_logits(trace.logits.shape());
  bool through_model = false;

  if (terms & kTermPixelDeviation) {
    const SuccessMask mask = fixed_mask != nullptr
                                 ? *fixed_mask
                                 : ComputeSuccessMask(trace.logits, labels,
                                                      cfg.ignore_label);
    j_pd = PixelDeviationLoss(ce, mask, cfg.lambda);
    grad_logits = PixelDeviationGrad(trace.logits, labels, mask, cfg.lambda);
    through_model = true;
  }
  if (terms & kTermFeatureDeviation) {
    j_fd = FeatureDeviationLoss(trace.logits, benign_logits);
    const Tensor3 g = FeatureDeviationGrad(trace.logits, benign_logits);
    for (std::size_t i = 0; i < g.size(); ++i) grad_logits[i] += g[i];
    through_model = true;
  }

  ObjectiveResult out;
  out.grad_x_adv = through_model ? model.BackwardInput(trace, grad_logits)
                                 : Tensor3(x_adv.shape());
  if (terms & kTermLowFrequency) {
    j_ls = LowFrequencyScatteringLoss(x_adv, x, transform);
    const Tensor3 g = LowFrequencyScatteringGrad(x_adv, x, transform);
    for (std::size_t i = 0; i < g.size(); ++i) out.grad_x_adv[i] += cfg.k * g[i];
  }
  out.loss = CombineLosses(j_pd, j_fd, j_ls, cfg.k);
  if (ce.valid_count > 0) {
    double s = 0.0;
    for (double v : ce.ce) s += v;
    out.loss.ce_mean = s / ce.valid_count;
  }
  return out;
}

LossBreakdown EvaluateBatch(const Perturbation& delta,
                            const SegmentationBatch& batch,
                            const Segmenter& model, const AttackConfig& cfg,
                            const AttackHooks* hooks) {
  return BatchObjective(delta, batch, model, cfg, hooks, nullptr);
}

LossBreakdown UapStep(Perturbation& delta, const SegmentationBatch& batch,
                      const Segmenter& model, const AttackConfig& cfg,
                      const AttackHooks* hooks) {
  if (!(cfg.step_size >= 0.0) || cfg.step_size > cfg.epsilon) {
    Fail(ErrorCode::kConfig, "step_size must lie in [0, epsilon]");
  }
  Tensor3 grad;
  const LossBreakdown loss =
      BatchObjective(delta, batch, model, cfg, hooks, &grad);
  // Minimising J_total (all terms <= 0) maximises the deviations.
  for (std::size_t i = 0; i < delta.delta.size(); ++i) {
    const double moved = delta.delta[i] - cfg.step_size * Sign(grad[i]);
    delta.delta[i] =
        ToFloatWithin(std::clamp(moved, -cfg.epsilon, cfg.epsilon), cfg.epsilon);
  }
  ++delta.steps;
  return loss;
}

UapResult TrainUap(const Dataset& data, const Segmenter& model,
                   const AttackConfig& cfg, const AttackHooks* hooks) {
  cfg.Validate();
  if (data.empty()) Fail(ErrorCode::kData, "attack dataset is empty");
  UapResult result;
  result.perturbation = Perturbation::Zeros(data.image_shape(), cfg.epsilon);
  result.perturbation.trained_on = model.model_id();

  const auto schedule =
      MakeBatchSchedule(data, cfg.epochs, cfg.batch_size, cfg.seed);
  int step = 0;
  for (const auto& epoch : schedule) {
    for (const SegmentationBatch& batch : epoch) {
      try {
        result.history.push_back(
            UapStep(result.perturbation, batch, model, cfg, hooks));
      } catch (const Error& e) {
        Fail(e.code(), "step " + std::to_string(step) + ": " + e.what());
      }
      if (hooks != nullptr && hooks->on_step) {
        hooks->on_step(step, result.perturbation, result.history.back());
      }
      ++step;
    }
  }

  result.manifest = cfg.Snapshot();
  result.manifest.emplace_back("model_id", model.model_id());
  result.manifest.emplace_back("dataset_fingerprint", DatasetFingerprint(data));
  result.manifest.emplace_back("dataset_size", std::to_string(data.size()));
  result.manifest.emplace_back("steps", std::to_string(step));
  result.manifest.emplace_back("perturbation_id", result.perturbation.Id());
  result.manifest.emplace_back("delta_max_abs",
                               FormatDouble(result.perturbation.MaxAbs()));
  return result;
}

}  // namespace uapseg
