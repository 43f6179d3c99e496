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

#ifndef UAPSEG_MODEL_HPP_
#define UAPSEG_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uapseg/tensor.hpp"

namespace uapseg {

struct Dataset;

// Architecture ids are persisted in checkpoints; never renumber.
enum class Architecture : uint32_t {
  kToyA = 1,    // 3x3 / dilated 3x3 / 3x3 / 1x1, width 8
  kToyB = 2,    // 5x5 / 3x3 / 1x1, widths 6 and 12
  kLinear = 3,  // a single 1x1 convolution, no nonlinearity
};

const char* ArchitectureName(Architecture arch);
Architecture ParseArchitecture(const std::string& name);

// Same-padded, stride-1 2-D convolution with optional SiLU activation.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int dilation = 1;
  bool silu = false;
  std::vector<double> weight;  // [out][in][kernel][kernel]
  std::vector<double> bias;    // [out]

  std::size_t ParameterCount() const { return weight.size() + bias.size(); }
};

// Scalar loss of the logits. When `grad` is non-null it receives
// d loss / d logits (same shape as the logits).
using LogitLoss = std::function<double(const Tensor3& logits, Tensor3* grad)>;

// Activations recorded by a forward pass, consumed by the backward passes.
struct ForwardTrace {
  std::vector<Tensor3> activations;  // [0] is the normalised input
  // Per layer, the convolution output before SiLU (empty when linear).
  std::vector<Tensor3> pre_activations;
  Tensor3 logits;
};

// Fully convolutional per-pixel classifier. Inputs are raw images in
// [0, 1]; per-channel mean/std normalisation happens inside Forward so the
// perturbation budget stays in pixel units for every model.
//
// Parameters are held in double but always hold float-representable values,
// which keeps checkpoints bit-exact. Forward and the backward passes are
// const; distinct handles may be used from different threads.
class Segmenter {
 public:
  Segmenter(Architecture arch, int num_classes, uint64_t seed);

  Architecture architecture() const { return arch_; }
  int num_classes() const { return num_classes_; }
  int input_channels() const { return 3; }
  uint64_t seed() const { return seed_; }
  const std::string& model_id() const { return model_id_; }
  double norm_mean() const { return kNormMean; }
  double norm_std() const { return kNormStd; }
  // Half-width of the receptive field in pixels.
  int receptive_radius() const;

  const std::vector<ConvLayer>& layers() const { return layers_; }
  std::size_t ParameterCount() const;
  // Flat parameter vector in declaration order (weight then bias, per layer).
  std::vector<double> Parameters() const;
  // Values are rounded to float precision.
  void SetParameters(const std::vector<double>& params);

  Tensor3 Forward(const Tensor3& x) const;
  ForwardTrace ForwardWithTrace(const Tensor3& x) const;

  // d loss / d x given d loss / d logits for the traced input.
  Tensor3 BackwardInput(const ForwardTrace& trace,
                        const Tensor3& grad_logits) const;
  // Accumulates d loss / d params into `param_grad` (flat, declaration order).
  void BackwardParameters(const ForwardTrace& trace, const Tensor3& grad_logits,
                          std::vector<double>& param_grad) const;

  // d loss(forward(x)) / d x. Throws kNumeric naming the layer when a
  // non-finite gradient appears.
  Tensor3 InputGradient(const LogitLoss& loss, const Tensor3& x,
                        double* loss_value = nullptr) const;

 private:
  static constexpr double kNormMean = 0.5;
  static constexpr double kNormStd = 0.25;

  void RequireInput(const Tensor3& x) const;
  // Shared backward walk; either output may be null.
  void Backward(const ForwardTrace& trace, const Tensor3& grad_logits,
                Tensor3* grad_input, std::vector<double>* param_grad) const;

  Architecture arch_;
  int num_classes_;
  uint64_t seed_;
  std::string model_id_;
  std::vector<ConvLayer> layers_;
};

struct TrainConfig {
  int epochs = 12;
  int batch_size = 8;
  double learning_rate = 0.01;  // Adam, constant schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  int ignore_label = 255;
};

struct TrainResult {
  double final_pixel_accuracy = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

// Minimises mean per-pixel cross entropy with Adam. Deterministic given the
// config seed; throws kTraining if the loss diverges.
TrainResult TrainToy(Segmenter& model, const Dataset& data,
                     const TrainConfig& cfg);

// Flat checkpoint: "UAPSEG01", u32 architecture, u32 num_classes, u64 seed,
// then every parameter as a little-endian float32 in declaration order.
void SaveCheckpoint(const Segmenter& model, const std::string& path);
Segmenter LoadCheckpoint(const std::string& path);

}  // namespace uapseg

#endif  // UAPSEG_MODEL_HPP_
