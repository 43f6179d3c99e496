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

#ifndef UAPSEG_ATTACK_HPP_
#define UAPSEG_ATTACK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uapseg/data.hpp"
#include "uapseg/frequency.hpp"
#include "uapseg/losses.hpp"
#include "uapseg/model.hpp"

namespace uapseg {

// Loss terms that can be toggled for ablations.
enum Term : unsigned {
  kTermPixelDeviation = 1u << 0,    // "pd"
  kTermFeatureDeviation = 1u << 1,  // "fd"
  kTermLowFrequency = 1u << 2,      // "ls"
  kAllTerms = kTermPixelDeviation | kTermFeatureDeviation | kTermLowFrequency,
};

// Parses "pd,fd,ls" style lists; throws kUsage on unknown or empty input.
unsigned ParseTerms(const std::string& csv);
std::string FormatTerms(unsigned terms);

struct AttackConfig {
  double epsilon = 10.0 / 255.0;
  double step_size = 1.0 / 255.0;  // epsilon / 10
  int epochs = 5;
  int batch_size = 5;
  double k = 1.0;
  double lambda = 0.3;
  uint64_t seed = 0;
  unsigned enabled_terms = kAllTerms;
  int ignore_label = kDefaultIgnoreLabel;

  // Defaults with step_size tied to the given epsilon.
  static AttackConfig WithEpsilon(double epsilon);
  // Throws kConfig unless 0 < step_size <= epsilon, 0 <= lambda <= 1,
  // enabled_terms is non-empty and the counts are sane.
  void Validate() const;
  // Key/value snapshot of every field, in a fixed order.
  std::vector<std::pair<std::string, std::string>> Snapshot() const;
};

// Observation points for instrumentation. Every image handed to the model
// passes through on_model_input; on_step sees delta after each update.
struct AttackHooks {
  std::function<void(const Tensor3& model_input)> on_model_input;
  std::function<void(int step, const Perturbation& delta,
                     const LossBreakdown& loss)>
      on_step;
};

// Elementwise clamp to [-epsilon, epsilon].
Tensor3 Project(const Tensor3& delta, double epsilon);
// clamp(x + delta, 0, 1).
Tensor3 ApplyPerturbation(const Tensor3& x, const Tensor3& delta);

// Objective value and its gradient with respect to the adversarial image.
struct ObjectiveResult {
  LossBreakdown loss;
  Tensor3 grad_x_adv;
};

// Evaluates J_total on one adversarial image. benign_logits are treated as a
// constant. When fixed_mask is null the success mask is recomputed from the
// adversarial logits; otherwise the given mask is used as is.
ObjectiveResult EvaluateObjective(const Segmenter& model,
                                  const Tensor3& x_adv, const Tensor3& x,
                                  const LabelMap& labels,
                                  const Tensor3& benign_logits,
                                  const AttackConfig& cfg,
                                  const FrequencyTransform& transform,
                                  const SuccessMask* fixed_mask = nullptr);

// Batch-mean losses at the current delta without updating it.
LossBreakdown EvaluateBatch(const Perturbation& delta,
                            const SegmentationBatch& batch,
                            const Segmenter& model, const AttackConfig& cfg,
                            const AttackHooks* hooks = nullptr);

// One sign-gradient step: delta <- project(delta - step * sign(grad J_total)).
// step_size may be 0 here (losses are still reported). On a numeric error
// delta is left untouched and the error propagates.
LossBreakdown UapStep(Perturbation& delta, const SegmentationBatch& batch,
                      const Segmenter& model, const AttackConfig& cfg,
                      const AttackHooks* hooks = nullptr);

struct UapResult {
  Perturbation perturbation;
  std::vector<LossBreakdown> history;
  std::vector<std::pair<std::string, std::string>> manifest;
};

// epochs x batches of UapStep from delta = 0. Deterministic given cfg.seed.
// Numeric errors are rethrown with the failing step index.
UapResult TrainUap(const Dataset& data, const Segmenter& model,
                   const AttackConfig& cfg, const AttackHooks* hooks = nullptr);

}  // namespace uapseg

#endif  // UAPSEG_ATTACK_HPP_
