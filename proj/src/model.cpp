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

#include "uapseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "uapseg/data.hpp"
#include "uapseg/error.hpp"
#include "uapseg/losses.hpp"

namespace uapseg {
namespace {

constexpr char kCheckpointMagic[9] = "UAPSEG01";

ConvLayer MakeLayer(int in, int out, int kernel, int dilation, bool silu) {
  ConvLayer l;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.dilation = dilation;
  l.silu = silu;
  l.weight.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

std::vector<ConvLayer> BuildLayers(Architecture arch, int k) {
  switch (arch) {
    case Architecture::kToyA:
      return {MakeLayer(3, 8, 3, 1, true), MakeLayer(8, 8, 3, 2, true),
              MakeLayer(8, 8, 3, 1, true), MakeLayer(8, k, 1, 1, false)};
    case Architecture::kToyB:
      return {MakeLayer(3, 6, 5, 1, true), MakeLayer(6, 12, 3, 1, true),
              MakeLayer(12, k, 1, 1, false)};
    case Architecture::kLinear:
      return {MakeLayer(3, k, 1, 1, false)};
  }
  Fail(ErrorCode::kConfig, "unknown architecture id " +
                               std::to_string(static_cast<uint32_t>(arch)));
}

double RoundToFloat(double v) { return static_cast<double>(static_cast<float>(v)); }

// out[o] = bias[o] + sum_i w[o,i] (*) in[i], zero padded, same size.
void ConvForward(const ConvLayer& l, const Tensor3& in, Tensor3& out) {
  const int h = in.height();
  const int w = in.width();
  const int r = l.kernel / 2;
  const std::size_t kk = static_cast<std::size_t>(l.kernel) * l.kernel;
  for (int o = 0; o < l.out_channels; ++o) {
    std::span<double> dst_plane = out.channel(o);
    std::fill(dst_plane.begin(), dst_plane.end(), l.bias[o]);
    for (int i = 0; i < l.in_channels; ++i) {
      std::span<const double> src_plane = in.channel(i);
      const double* wk =
          l.weight.data() + (static_cast<std::size_t>(o) * l.in_channels + i) * kk;
      for (int ky = 0; ky < l.kernel; ++ky) {
        const int dy = (ky - r) * l.dilation;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < l.kernel; ++kx) {
          const int dx = (kx - r) * l.dilation;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const double wv = wk[ky * l.kernel + kx];
          if (wv == 0.0) continue;
          for (int y = y0; y < y1; ++y) {
            const double* src = src_plane.data() + (y + dy) * w + dx;
            double* dst = dst_plane.data() + y * w;
            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// x * sigmoid(x). Smooth, so central differences on the network converge.
double Silu(double z) { return z * Sigmoid(z); }

double SiluDerivative(double z) {
  const double s = Sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

// Given d/d(out) (already through the activation), accumulates d/d(in) and the
// parameter gradients. Either destination may be null.
void ConvBackward(const ConvLayer& l, const Tensor3& in, const Tensor3& g_out,
                  Tensor3* g_in, double* g_weight, double* g_bias) {
  const int h = in.height();
  const int w = in.width();
  const int r = l.kernel / 2;
  const std::size_t kk = static_cast<std::size_t>(l.kernel) * l.kernel;
  for (int o = 0; o < l.out_channels; ++o) {
    std::span<const double> go = g_out.channel(o);
    if (g_bias != nullptr) {
      double s = 0.0;
      for (double v : go) s += v;
      g_bias[o] += s;
    }
    for (int i = 0; i < l.in_channels; ++i) {
      std::span<const double> src_plane = in.channel(i);
      const std::size_t base = (static_cast<std::size_t>(o) * l.in_channels + i) * kk;
      const double* wk = l.weight.data() + base;
      for (int ky = 0; ky < l.kernel; ++ky) {
        const int dy = (ky - r) * l.dilation;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < l.kernel; ++kx) {
          const int dx = (kx - r) * l.dilation;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const double wv = wk[ky * l.kernel + kx];
          double gw = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* gr = go.data() + y * w;
            const double* src = src_plane.data() + (y + dy) * w + dx;
            if (g_weight != nullptr) {
              for (int x = x0; x < x1; ++x) gw += gr[x] * src[x];
            }
            if (g_in != nullptr && wv != 0.0) {
              double* gi = g_in->channel(i).data() + (y + dy) * w + dx;
              for (int x = x0; x < x1; ++x) gi[x] += wv * gr[x];
            }
          }
          if (g_weight != nullptr) g_weight[base + ky * l.kernel + kx] += gw;
        }
      }
    }
  }
}

void RequireFinite(const Tensor3& g, std::size_t layer) {
  for (double v : g.values()) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite gradient at layer " << layer
         << " (max |g| = " << MaxAbs(g.values()) << ")";
      Fail(ErrorCode::kNumeric, os.str());
    }
  }
}

}  // namespace

const char* ArchitectureName(Architecture arch) {
  switch (arch) {
    case Architecture::kToyA: return "toyA";
    case Architecture::kToyB: return "toyB";
    case Architecture::kLinear: return "linear";
  }
  return "unknown";
}

Architecture ParseArchitecture(const std::string& name) {
  if (name == "toyA" || name == "A" || name == "a") return Architecture::kToyA;
  if (name == "toyB" || name == "B" || name == "b") return Architecture::kToyB;
  if (name == "linear") return Architecture::kLinear;
  Fail(ErrorCode::kConfig, "unknown architecture: " + name);
}

Segmenter::Segmenter(Architecture arch, int num_classes, uint64_t seed)
    : arch_(arch), num_classes_(num_classes), seed_(seed) {
  if (num_classes < 2) {
    Fail(ErrorCode::kConfig, "num_classes must be >= 2");
  }
  layers_ = BuildLayers(arch, num_classes);
  std::ostringstream id;
  id << ArchitectureName(arch) << "-k" << num_classes << "-s" << seed;
  model_id_ = id.str();

  // He-normal weights, zero biases.
  std::mt19937_64 rng(seed);
  for (ConvLayer& l : layers_) {
    const double fan_in =
        static_cast<double>(l.in_channels) * l.kernel * l.kernel;
    std::normal_distribution<double> dist(
        0.0, std::sqrt((l.silu ? 2.0 : 1.0) / fan_in));
    for (double& v : l.weight) v = RoundToFloat(dist(rng));
  }
}

int Segmenter::receptive_radius() const {
  int r = 0;
  for (const ConvLayer& l : layers_) r += (l.kernel / 2) * l.dilation;
  return r;
}

std::size_t Segmenter::ParameterCount() const {
  std::size_t n = 0;
  for (const ConvLayer& l : layers_) n += l.ParameterCount();
  return n;
}

std::vector<double> Segmenter::Parameters() const {
  std::vector<double> out;
  out.reserve(ParameterCount());
  for (const ConvLayer& l : layers_) {
    out.insert(out.end(), l.weight.begin(), l.weight.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void Segmenter::SetParameters(const std::vector<double>& params) {
  if (params.size() != ParameterCount()) {
    Fail(ErrorCode::kDimension,
         "expected " + std::to_string(ParameterCount()) + " parameters, got " +
             std::to_string(params.size()));
  }
  std::size_t pos = 0;
  for (ConvLayer& l : layers_) {
    for (double& v : l.weight) v = RoundToFloat(params[pos++]);
    for (double& v : l.bias) v = RoundToFloat(params[pos++]);
  }
}

void Segmenter::RequireInput(const Tensor3& x) const {
  if (x.channels() != input_channels() || x.height() <= 0 || x.width() <= 0) {
    Fail(ErrorCode::kDimension, "model " + model_id_ + " expects 3 x H x W " +
                                    "input, got " + x.shape().ToString());
  }
}

ForwardTrace Segmenter::ForwardWithTrace(const Tensor3& x) const {
  RequireInput(x);
  ForwardTrace trace;
  trace.activations.reserve(layers_.size());
  trace.pre_activations.reserve(layers_.size());
  Tensor3 cur(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cur[i] = (x[i] - kNormMean) / kNormStd;
  }
  for (const ConvLayer& l : layers_) {
    Tensor3 next(l.out_channels, x.height(), x.width());
    ConvForward(l, cur, next);
    Tensor3 pre;
    if (l.silu) {
      pre = next;
      for (double& v : next.values()) v = Silu(v);
    }
    trace.pre_activations.push_back(std::move(pre));
    trace.activations.push_back(std::move(cur));
    cur = std::move(next);
  }
  trace.logits = std::move(cur);
  return trace;
}

Tensor3 Segmenter::Forward(const Tensor3& x) const {
  return ForwardWithTrace(x).logits;
}

void Segmenter::Backward(const ForwardTrace& trace, const Tensor3& grad_logits,
                         Tensor3* grad_input,
                         std::vector<double>* param_grad) const {
  RequireSameShape(grad_logits.shape(), trace.logits.shape(), "logit gradient");
  std::vector<std::size_t> offsets(layers_.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets[i] = pos;
    pos += layers_[i].ParameterCount();
  }
  if (param_grad != nullptr && param_grad->size() != pos) {
    param_grad->assign(pos, 0.0);
  }

  Tensor3 g = grad_logits;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const ConvLayer& l = layers_[li];
    if (l.silu) {
      const Tensor3& pre = trace.pre_activations[li];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= SiluDerivative(pre[i]);
    }
    const Tensor3& in = trace.activations[li];
    const bool need_input = li > 0 || grad_input != nullptr;
    Tensor3 g_in(need_input ? in.shape() : Shape3{});
    double* gw = nullptr;
    double* gb = nullptr;
    if (param_grad != nullptr) {
      gw = param_grad->data() + offsets[li];
      gb = gw + l.weight.size();
    }
    ConvBackward(l, in, g, need_input ? &g_in : nullptr, gw, gb);
    if (!need_input) break;
    RequireFinite(g_in, li);
    g = std::move(g_in);
  }
  if (grad_input != nullptr) {
    for (double& v : g.values()) v /= kNormStd;
    *grad_input = std::move(g);
  }
}

Tensor3 Segmenter::BackwardInput(const ForwardTrace& trace,
                                 const Tensor3& grad_logits) const {
  Tensor3 grad;
  Backward(trace, grad_logits, &grad, nullptr);
  return grad;
}

void Segmenter::BackwardParameters(const ForwardTrace& trace,
                                   const Tensor3& grad_logits,
                                   std::vector<double>& param_grad) const {
  Backward(trace, grad_logits, nullptr, &param_grad);
}

Tensor3 Segmenter::InputGradient(const LogitLoss& loss, const Tensor3& x,
                                 double* loss_value) const {
  const ForwardTrace trace = ForwardWithTrace(x);
  Tensor3 grad_logits(trace.logits.shape());
  const double value = loss(trace.logits, &grad_logits);
  if (!std::isfinite(value)) {
    Fail(ErrorCode::kNumeric, "non-finite loss value");
  }
  RequireFinite(grad_logits, layers_.size());
  if (loss_value != nullptr) *loss_value = value;
  return BackwardInput(trace, grad_logits);
}

TrainResult TrainToy(Segmenter& model, const Dataset& data,
                     const TrainConfig& cfg) {
  TrainResult result;
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0)) {
    Fail(ErrorCode::kConfig, "invalid training config");
  }
  if (data.empty()) Fail(ErrorCode::kData, "training dataset is empty");

  std::vector<double> params = model.Parameters();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad(params.size(), 0.0);
  long step = 0;

  const auto schedule =
      MakeBatchSchedule(data, cfg.epochs, cfg.batch_size, cfg.seed);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const SegmentationBatch& batch : schedule[epoch]) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      for (const Example* ex : batch) {
        const ForwardTrace trace = model.ForwardWithTrace(ex->image);
        const PixelCe ce = PixelCeMap(trace.logits, ex->labels, cfg.ignore_label);
        if (ce.valid_count == 0) continue;
        double sum = 0.0;
        for (double c : ce.ce) sum += c;
        batch_loss += sum / ce.valid_count * inv_batch;
        // Mean CE gradient = (softmax - onehot) / valid_count: the pixel
        // deviation gradient with every valid pixel weighted 1, negated.
        SuccessMask all;
        all.valid = ce.valid;
        all.mask = ce.valid;
        Tensor3 g = PixelDeviationGrad(trace.logits, ex->labels, all, 1.0);
        for (double& x : g.values()) x *= -inv_batch;
        try {
          model.BackwardParameters(trace, g, grad);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNumeric) throw;
          Fail(ErrorCode::kTraining, "training diverged at epoch " +
                                         std::to_string(epoch) + ": " +
                                         e.what());
        }
      }
      if (!std::isfinite(batch_loss)) {
        Fail(ErrorCode::kTraining, "training loss diverged at epoch " +
                                       std::to_string(epoch));
      }
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(grad[i])) {
          Fail(ErrorCode::kTraining, "non-finite parameter gradient at epoch " +
                                         std::to_string(epoch));
        }
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        params[i] -= cfg.learning_rate * (m[i] / bc1) /
                     (std::sqrt(v[i] / bc2) + cfg.adam_eps);
      }
      model.SetParameters(params);
      params = model.Parameters();
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(schedule[epoch].size());
    result.epoch_losses.push_back(epoch_loss);
    result.final_loss = epoch_loss;
  }

  long correct = 0;
  long total = 0;
  for (const Example& ex : data.examples) {
    const LabelMap pred = ArgmaxMap(model.Forward(ex.image));
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (ex.labels[p] == cfg.ignore_label) continue;
      ++total;
      correct += pred[p] == ex.labels[p];
    }
  }
  result.final_pixel_accuracy =
      total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                : 0.0;
  return result;
}

void SaveCheckpoint(const Segmenter& model, const std::string& path) {
  binio::Writer w;
  w.Bytes(kCheckpointMagic, 8);
  w.U32(static_cast<uint32_t>(model.architecture()));
  w.U32(static_cast<uint32_t>(model.num_classes()));
  w.U64(model.seed());
  for (double v : model.Parameters()) w.F32(static_cast<float>(v));
  w.WriteFile(path);
}

Segmenter LoadCheckpoint(const std::string& path) {
  binio::Reader r = binio::Reader::FromFile(path);
  r.ExpectMagic(kCheckpointMagic);
  const uint32_t arch = r.U32();
  const uint32_t k = r.U32();
  const uint64_t seed = r.U64();
  if (arch < 1 || arch > 3) {
    Fail(ErrorCode::kFormat, "unknown architecture id " + std::to_string(arch) +
                                 " in " + path);
  }
  if (k < 2 || k > 4096) {
    Fail(ErrorCode::kFormat, "bad class count in " + path);
  }
  Segmenter model(static_cast<Architecture>(arch), static_cast<int>(k), seed);
  const std::size_t n = model.ParameterCount();
  if (r.remaining() != n * 4) {
    Fail(ErrorCode::kFormat, "parameter blob size mismatch in " + path);
  }
  std::vector<double> params(n);
  for (double& v : params) v = r.F32();
  model.SetParameters(params);
  return model;
}

}  // namespace uapseg
