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

#include "uapseg/uapseg.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "uapseg/attack.hpp"
#include "uapseg/data.hpp"
#include "uapseg/error.hpp"
#include "uapseg/eval.hpp"
#include "uapseg/frequency.hpp"
#include "uapseg/losses.hpp"
#include "uapseg/model.hpp"
#include "uapseg/netpbm.hpp"

struct uapseg_dataset {
  uapseg::Dataset data;
  std::vector<std::string> warnings;
};

struct uapseg_model {
  uapseg::Segmenter model;
};

struct uapseg_perturbation {
  uapseg::Perturbation p;
  std::string id;
};

struct uapseg_run {
  std::vector<uapseg::LossBreakdown> history;
  std::vector<std::pair<std::string, std::string>> manifest;
};

struct uapseg_report {
  uapseg::EvalReport report;
  std::string table;
  std::string key_values;
};

namespace {

using uapseg::ErrorCode;

thread_local std::string g_last_error;

uapseg_status SetError(uapseg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
uapseg_status Guard(Fn&& fn) {
  try {
    fn();
    return UAPSEG_OK;
  } catch (const uapseg::Error& e) {
    return SetError(static_cast<uapseg_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return SetError(UAPSEG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return SetError(UAPSEG_ERR_INTERNAL, e.what());
  } catch (...) {
    return SetError(UAPSEG_ERR_INTERNAL, "unknown exception");
  }
}

void RequireArg(bool ok, const char* what) {
  if (!ok) uapseg::Fail(ErrorCode::kUsage, std::string("invalid argument: ") + what);
}

uapseg_loss ToC(const uapseg::LossBreakdown& l) {
  return uapseg_loss{l.j_pd, l.j_fd, l.j_ls, l.j_total, l.ce_mean};
}

uapseg::AttackConfig FromC(const uapseg_attack_config& c) {
  uapseg::AttackConfig cfg;
  cfg.epsilon = c.epsilon;
  cfg.step_size = c.step_size;
  cfg.epochs = c.epochs;
  cfg.batch_size = c.batch_size;
  cfg.k = c.k;
  cfg.lambda = c.lambda;
  cfg.seed = c.seed;
  cfg.enabled_terms = c.terms;
  cfg.ignore_label = c.ignore_label;
  return cfg;
}

uapseg_report* MakeReport(uapseg::EvalReport r) {
  auto* out = new uapseg_report{std::move(r), {}, {}};
  out->table = uapseg::FormatReportTable(out->report);
  out->key_values = uapseg::FormatReportKeyValue(out->report);
  return out;
}

uapseg::Tensor3 ToTensor(const double* data, int c, int h, int w) {
  RequireArg(data != nullptr && c > 0 && h > 0 && w > 0, "image");
  uapseg::Tensor3 t(c, h, w);
  std::copy(data, data + t.size(), t.values().begin());
  return t;
}

}  // namespace

extern "C" {

const char* uapseg_version(void) { return "0.1.0"; }

const char* uapseg_status_name(uapseg_status status) {
  return uapseg::ErrorCodeName(static_cast<ErrorCode>(status));
}

const char* uapseg_last_error(void) { return g_last_error.c_str(); }

/* ---- datasets ---------------------------------------------------------- */

uapseg_status uapseg_dataset_generate(int n, int num_classes, int height,
                                      int width, uint64_t seed,
                                      uapseg_dataset** out) {
  return Guard([&] {
    RequireArg(out != nullptr && n >= 0, "n/out");
    uapseg::ShapesOptions opt;
    opt.num_classes = num_classes;
    opt.height = height;
    opt.width = width;
    opt.seed = seed;
    auto ds = std::make_unique<uapseg_dataset>();
    ds->data = uapseg::GenerateShapesDataset(n, opt);
    if (height % 2 || width % 2) {
      ds->warnings.push_back("padded " + std::to_string(height) + "x" +
                             std::to_string(width) + " to " +
                             std::to_string(height + height % 2) + "x" +
                             std::to_string(width + width % 2));
    }
    *out = ds.release();
  });
}

uapseg_status uapseg_dataset_split(const uapseg_dataset* data,
                                   uapseg_dataset** train,
                                   uapseg_dataset** eval) {
  return Guard([&] {
    RequireArg(data && train && eval, "dataset/outputs");
    uapseg::DatasetSplit split = uapseg::SplitTrainEval(data->data);
    auto t = std::make_unique<uapseg_dataset>();
    auto e = std::make_unique<uapseg_dataset>();
    t->data = std::move(split.train);
    e->data = std::move(split.eval);
    *train = t.release();
    *eval = e.release();
  });
}

uapseg_status uapseg_dataset_load(const char* image_dir, const char* label_dir,
                                  int num_classes, int ignore_label,
                                  uapseg_dataset** out) {
  return Guard([&] {
    RequireArg(image_dir && label_dir && out, "paths/out");
    uapseg::LoadResult r =
        uapseg::LoadCorpus(image_dir, label_dir, num_classes, ignore_label);
    auto ds = std::make_unique<uapseg_dataset>();
    ds->data = std::move(r.data);
    ds->warnings = std::move(r.warnings);
    *out = ds.release();
  });
}

uapseg_status uapseg_dataset_save(const uapseg_dataset* data, const char* dir) {
  return Guard([&] {
    RequireArg(data && dir, "dataset/dir");
    uapseg::SaveCorpus(data->data, dir);
  });
}

size_t uapseg_dataset_size(const uapseg_dataset* data) {
  return data ? data->data.size() : 0;
}

int uapseg_dataset_num_classes(const uapseg_dataset* data) {
  return data ? data->data.num_classes : 0;
}

uapseg_status uapseg_dataset_shape(const uapseg_dataset* data, int* channels,
                                   int* height, int* width) {
  return Guard([&] {
    RequireArg(data && channels && height && width, "dataset/outputs");
    const uapseg::Shape3 s = data->data.image_shape();
    *channels = s.channels;
    *height = s.height;
    *width = s.width;
  });
}

uapseg_status uapseg_dataset_fingerprint(const uapseg_dataset* data, char* buf,
                                         size_t buf_len) {
  return Guard([&] {
    RequireArg(data && buf && buf_len >= 17, "dataset/buffer");
    const std::string fp = uapseg::DatasetFingerprint(data->data);
    std::memcpy(buf, fp.c_str(), fp.size() + 1);
  });
}

uapseg_status uapseg_dataset_example(const uapseg_dataset* data, size_t index,
                                     double* image, size_t image_len,
                                     int32_t* labels, size_t labels_len) {
  return Guard([&] {
    RequireArg(data && index < data->data.size(), "dataset/index");
    const uapseg::Example& ex = data->data.examples[index];
    if (image != nullptr) {
      RequireArg(image_len == ex.image.size(), "image_len");
      std::copy(ex.image.values().begin(), ex.image.values().end(), image);
    }
    if (labels != nullptr) {
      RequireArg(labels_len == ex.labels.size(), "labels_len");
      std::copy(ex.labels.values().begin(), ex.labels.values().end(), labels);
    }
  });
}

const char* uapseg_dataset_example_id(const uapseg_dataset* data,
                                      size_t index) {
  if (!data || index >= data->data.size()) return nullptr;
  return data->data.examples[index].id.c_str();
}

size_t uapseg_dataset_warning_count(const uapseg_dataset* data) {
  return data ? data->warnings.size() : 0;
}

const char* uapseg_dataset_warning(const uapseg_dataset* data, size_t index) {
  if (!data || index >= data->warnings.size()) return nullptr;
  return data->warnings[index].c_str();
}

void uapseg_dataset_free(uapseg_dataset* data) { delete data; }

/* ---- models ------------------------------------------------------------ */

uapseg_status uapseg_model_create(const char* arch, int num_classes,
                                  uint64_t seed, uapseg_model** out) {
  return Guard([&] {
    RequireArg(arch && out, "arch/out");
    *out = new uapseg_model{
        uapseg::Segmenter(uapseg::ParseArchitecture(arch), num_classes, seed)};
  });
}

void uapseg_train_config_default(uapseg_train_config* cfg) {
  if (!cfg) return;
  const uapseg::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->seed = d.seed;
  cfg->ignore_label = d.ignore_label;
}

uapseg_status uapseg_model_train(uapseg_model* model,
                                 const uapseg_dataset* data,
                                 const uapseg_train_config* cfg,
                                 double* final_pixel_accuracy) {
  return Guard([&] {
    RequireArg(model && data && cfg, "model/dataset/config");
    uapseg::TrainConfig tc;
    tc.epochs = cfg->epochs;
    tc.batch_size = cfg->batch_size;
    tc.learning_rate = cfg->learning_rate;
    tc.seed = cfg->seed;
    tc.ignore_label = cfg->ignore_label;
    const uapseg::TrainResult r = uapseg::TrainToy(model->model, data->data, tc);
    if (final_pixel_accuracy) *final_pixel_accuracy = r.final_pixel_accuracy;
  });
}

uapseg_status uapseg_model_save(const uapseg_model* model, const char* path) {
  return Guard([&] {
    RequireArg(model && path, "model/path");
    uapseg::SaveCheckpoint(model->model, path);
  });
}

uapseg_status uapseg_model_load(const char* path, uapseg_model** out) {
  return Guard([&] {
    RequireArg(path && out, "path/out");
    *out = new uapseg_model{uapseg::LoadCheckpoint(path)};
  });
}

uapseg_status uapseg_model_forward(const uapseg_model* model,
                                   const double* image, int channels,
                                   int height, int width, double* logits,
                                   size_t logits_len) {
  return Guard([&] {
    RequireArg(model && logits, "model/logits");
    const uapseg::Tensor3 out =
        model->model.Forward(ToTensor(image, channels, height, width));
    RequireArg(logits_len == out.size(), "logits_len");
    std::copy(out.values().begin(), out.values().end(), logits);
  });
}

const char* uapseg_model_id(const uapseg_model* model) {
  return model ? model->model.model_id().c_str() : nullptr;
}

int uapseg_model_num_classes(const uapseg_model* model) {
  return model ? model->model.num_classes() : 0;
}

size_t uapseg_model_parameter_count(const uapseg_model* model) {
  return model ? model->model.ParameterCount() : 0;
}

void uapseg_model_free(uapseg_model* model) { delete model; }

/* ---- attack ------------------------------------------------------------ */

void uapseg_attack_config_default(uapseg_attack_config* cfg) {
  if (!cfg) return;
  const uapseg::AttackConfig d = uapseg::AttackConfig::WithEpsilon(10.0 / 255.0);
  cfg->epsilon = d.epsilon;
  cfg->step_size = d.step_size;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->k = d.k;
  cfg->lambda = d.lambda;
  cfg->seed = d.seed;
  cfg->terms = d.enabled_terms;
  cfg->ignore_label = d.ignore_label;
}

uapseg_status uapseg_parse_terms(const char* csv, unsigned* terms) {
  return Guard([&] {
    RequireArg(csv && terms, "csv/terms");
    *terms = uapseg::ParseTerms(csv);
  });
}

uapseg_status uapseg_train_uap(const uapseg_model* model,
                               const uapseg_dataset* data,
                               const uapseg_attack_config* cfg,
                               uapseg_step_callback callback, void* user_data,
                               uapseg_perturbation** out, uapseg_run** run) {
  return Guard([&] {
    RequireArg(model && data && cfg && out, "model/dataset/config/out");
    uapseg::AttackHooks hooks;
    if (callback != nullptr) {
      hooks.on_step = [&](int step, const uapseg::Perturbation& p,
                          const uapseg::LossBreakdown& l) {
        const uapseg_loss cl = ToC(l);
        callback(step, p.delta.data(), p.delta.size(), &cl, user_data);
      };
    }
    uapseg::UapResult r =
        uapseg::TrainUap(data->data, model->model, FromC(*cfg), &hooks);
    auto pert = std::make_unique<uapseg_perturbation>();
    pert->p = std::move(r.perturbation);
    pert->id = pert->p.Id();
    if (run != nullptr) {
      *run = new uapseg_run{std::move(r.history), std::move(r.manifest)};
    }
    *out = pert.release();
  });
}

size_t uapseg_run_history_size(const uapseg_run* run) {
  return run ? run->history.size() : 0;
}

uapseg_status uapseg_run_history_get(const uapseg_run* run, size_t step,
                                     uapseg_loss* out) {
  return Guard([&] {
    RequireArg(run && out && step < run->history.size(), "run/step/out");
    *out = ToC(run->history[step]);
  });
}

size_t uapseg_run_manifest_size(const uapseg_run* run) {
  return run ? run->manifest.size() : 0;
}

uapseg_status uapseg_run_manifest_entry(const uapseg_run* run, size_t index,
                                        const char** key, const char** value) {
  return Guard([&] {
    RequireArg(run && key && value && index < run->manifest.size(),
               "run/index/outputs");
    *key = run->manifest[index].first.c_str();
    *value = run->manifest[index].second.c_str();
  });
}

void uapseg_run_free(uapseg_run* run) { delete run; }

/* ---- perturbations ----------------------------------------------------- */

uapseg_status uapseg_perturbation_zeros(int channels, int height, int width,
                                        double epsilon,
                                        uapseg_perturbation** out) {
  return Guard([&] {
    RequireArg(out && channels > 0 && height > 0 && width > 0 && epsilon >= 0,
               "shape/epsilon/out");
    auto p = std::make_unique<uapseg_perturbation>();
    p->p = uapseg::Perturbation::Zeros({channels, height, width}, epsilon);
    p->id = p->p.Id();
    *out = p.release();
  });
}

uapseg_status uapseg_perturbation_save(const uapseg_perturbation* p,
                                       const char* path) {
  return Guard([&] {
    RequireArg(p && path, "perturbation/path");
    uapseg::SavePerturbation(p->p, path);
  });
}

uapseg_status uapseg_perturbation_load(const char* path,
                                       uapseg_perturbation** out) {
  return Guard([&] {
    RequireArg(path && out, "path/out");
    auto p = std::make_unique<uapseg_perturbation>();
    p->p = uapseg::LoadPerturbation(path);
    p->id = p->p.Id();
    *out = p.release();
  });
}

uapseg_status uapseg_perturbation_info(const uapseg_perturbation* p,
                                       int* channels, int* height, int* width,
                                       double* epsilon, double* max_abs) {
  return Guard([&] {
    RequireArg(p != nullptr, "perturbation");
    if (channels) *channels = p->p.shape.channels;
    if (height) *height = p->p.shape.height;
    if (width) *width = p->p.shape.width;
    if (epsilon) *epsilon = p->p.epsilon;
    if (max_abs) *max_abs = p->p.MaxAbs();
  });
}

uapseg_status uapseg_perturbation_data(const uapseg_perturbation* p,
                                       float* out, size_t len) {
  return Guard([&] {
    RequireArg(p && out && len == p->p.delta.size(), "perturbation/buffer");
    std::copy(p->p.delta.begin(), p->p.delta.end(), out);
  });
}

const char* uapseg_perturbation_id(const uapseg_perturbation* p) {
  return p ? p->id.c_str() : nullptr;
}

const char* uapseg_perturbation_trained_on(const uapseg_perturbation* p) {
  return p ? p->p.trained_on.c_str() : nullptr;
}

void uapseg_perturbation_free(uapseg_perturbation* p) { delete p; }

/* ---- evaluation -------------------------------------------------------- */

uapseg_status uapseg_evaluate(const uapseg_model* model,
                              const uapseg_dataset* data,
                              const uapseg_perturbation* p,
                              uapseg_report** out) {
  return Guard([&] {
    RequireArg(model && data && out, "model/dataset/out");
    *out = MakeReport(
        uapseg::Evaluate(model->model, data->data, p ? &p->p : nullptr));
  });
}

double uapseg_report_miou(const uapseg_report* report) {
  return report ? report->report.miou : 0.0;
}

int uapseg_report_num_classes(const uapseg_report* report) {
  return report ? report->report.confusion.num_classes() : 0;
}

uapseg_status uapseg_report_class_iou(const uapseg_report* report, int cls,
                                      double* iou, int* present) {
  return Guard([&] {
    RequireArg(report && iou && present && cls >= 0 &&
                   cls < static_cast<int>(report->report.per_class_iou.size()),
               "report/class/outputs");
    const auto& v = report->report.per_class_iou[cls];
    *present = v.has_value() ? 1 : 0;
    *iou = v.value_or(0.0);
  });
}

int64_t uapseg_report_confusion(const uapseg_report* report, int truth,
                                int pred) {
  if (!report) return -1;
  const int k = report->report.confusion.num_classes();
  if (truth < 0 || truth >= k || pred < 0 || pred >= k) return -1;
  return report->report.confusion.at(truth, pred);
}

const char* uapseg_report_table(const uapseg_report* report) {
  return report ? report->table.c_str() : nullptr;
}

const char* uapseg_report_key_values(const uapseg_report* report) {
  return report ? report->key_values.c_str() : nullptr;
}

uapseg_status uapseg_report_write(const uapseg_report* report,
                                  const char* table_path,
                                  const char* kv_path) {
  return Guard([&] {
    RequireArg(report != nullptr, "report");
    if (table_path) uapseg::WriteTextFile(table_path, report->table);
    if (kv_path) uapseg::WriteTextFile(kv_path, report->key_values);
  });
}

void uapseg_report_free(uapseg_report* report) { delete report; }

uapseg_status uapseg_transfer_matrix(const uapseg_perturbation* const* perts,
                                     size_t num_perts,
                                     const uapseg_model* const* models,
                                     size_t num_models,
                                     const uapseg_dataset* data, double* out) {
  return Guard([&] {
    RequireArg(perts && models && data && out && num_models > 0,
               "perturbations/models/dataset/out");
    std::vector<const uapseg::Perturbation*> ps;
    for (size_t i = 0; i < num_perts; ++i) {
      ps.push_back(perts[i] ? &perts[i]->p : nullptr);
    }
    std::vector<const uapseg::Segmenter*> ms;
    for (size_t j = 0; j < num_models; ++j) {
      RequireArg(models[j] != nullptr, "model entry");
      ms.push_back(&models[j]->model);
    }
    const auto m = uapseg::TransferMatrix(ps, ms, data->data);
    for (size_t i = 0; i < num_perts; ++i) {
      for (size_t j = 0; j < num_models; ++j) out[i * num_models + j] = m[i][j];
    }
  });
}

/* ---- rendering and diagnostics ----------------------------------------- */

uapseg_status uapseg_render_labels(const int32_t* labels, int height,
                                   int width, int num_colors, int ignore_label,
                                   const char* path) {
  return Guard([&] {
    RequireArg(labels && path && height > 0 && width > 0, "labels/path");
    uapseg::LabelMap map(height, width);
    for (size_t p = 0; p < map.size(); ++p) map[p] = labels[p];
    uapseg::RenderMask(map, uapseg::DefaultPalette(num_colors), ignore_label,
                       path);
  });
}

uapseg_status uapseg_render_label_file(const char* in_path,
                                       const char* out_path, int num_colors,
                                       int ignore_label) {
  return Guard([&] {
    RequireArg(in_path && out_path, "paths");
    const uapseg::PnmImage img = uapseg::ReadPnm(in_path);
    if (img.channels != 1) {
      uapseg::Fail(ErrorCode::kData,
                   std::string("label file is not single-channel: ") + in_path);
    }
    uapseg::LabelMap map(img.height, img.width);
    for (size_t p = 0; p < map.size(); ++p) map[p] = img.samples[p];
    uapseg::RenderMask(map, uapseg::DefaultPalette(num_colors), ignore_label,
                       out_path);
  });
}

uapseg_status uapseg_predict_example(const uapseg_model* model,
                                     const uapseg_dataset* data, size_t index,
                                     const uapseg_perturbation* p,
                                     int32_t* labels, size_t labels_len) {
  return Guard([&] {
    RequireArg(model && data && labels && index < data->data.size(),
               "model/dataset/index/labels");
    const uapseg::Example& ex = data->data.examples[index];
    RequireArg(labels_len == ex.labels.size(), "labels_len");
    const uapseg::Tensor3 input =
        p ? uapseg::ApplyPerturbation(ex.image, p->p.AsTensor()) : ex.image;
    const uapseg::LabelMap pred =
        uapseg::ArgmaxMap(model->model.Forward(input));
    std::copy(pred.values().begin(), pred.values().end(), labels);
  });
}

uapseg_status uapseg_inspect_frequency(const char* image_path,
                                       const char* out_path) {
  return Guard([&] {
    RequireArg(image_path && out_path, "paths");
    const uapseg::PnmImage in = uapseg::ReadPnm(image_path);
    uapseg::Tensor3 x(in.channels, in.height, in.width);
    for (int c = 0; c < in.channels; ++c) {
      for (int y = 0; y < in.height; ++y) {
        for (int xx = 0; xx < in.width; ++xx) {
          x.at(c, y, xx) = in.at(y, xx, c) / static_cast<double>(in.maxval);
        }
      }
    }
    x = uapseg::PadToEven(x);
    const uapseg::FrequencyTransform t(x.height(), x.width());
    const uapseg::Tensor3 phi = uapseg::LowpassProject(x, t);
    uapseg::PnmImage out;
    out.width = phi.width();
    out.height = phi.height();
    out.channels = 3;
    out.samples.resize(static_cast<size_t>(out.width) * out.height * 3);
    for (int y = 0; y < out.height; ++y) {
      for (int xx = 0; xx < out.width; ++xx) {
        for (int c = 0; c < 3; ++c) {
          const double v = phi.at(phi.channels() == 3 ? c : 0, y, xx);
          out.samples[(static_cast<size_t>(y) * out.width + xx) * 3 + c] =
              static_cast<uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
      }
    }
    uapseg::WritePnm(out, out_path);
  });
}

uapseg_status uapseg_lowpass_project(const double* image, int channels,
                                     int height, int width, double* out) {
  return Guard([&] {
    RequireArg(out != nullptr, "out");
    const uapseg::Tensor3 x = ToTensor(image, channels, height, width);
    const uapseg::FrequencyTransform t(height, width);
    const uapseg::Tensor3 phi = uapseg::LowpassProject(x, t);
    std::copy(phi.values().begin(), phi.values().end(), out);
  });
}

}  // extern "C"
