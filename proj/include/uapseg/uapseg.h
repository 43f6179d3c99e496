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

/* C interface to the uapseg library.
 *
 * Every object is an opaque handle owned by the caller and released with the
 * matching *_free function. Functions report failure through uapseg_status;
 * uapseg_last_error() returns the message of the most recent failure on the
 * calling thread. Images are channel-major [C x H x W] doubles in [0, 1] and
 * label maps are row-major [H x W] int32 values.
 */

#ifndef UAPSEG_UAPSEG_H_
#define UAPSEG_UAPSEG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(UAPSEG_BUILDING_LIBRARY)
#    define UAPSEG_API __declspec(dllexport)
#  else
#    define UAPSEG_API __declspec(dllimport)
#  endif
#else
#  define UAPSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uapseg_status {
  UAPSEG_OK = 0,
  UAPSEG_ERR_DIMENSION = 1,
  UAPSEG_ERR_DATA = 2,
  UAPSEG_ERR_FORMAT = 3,
  UAPSEG_ERR_INTEGRITY = 4,
  UAPSEG_ERR_NUMERIC = 5,
  UAPSEG_ERR_CONFIG = 6,
  UAPSEG_ERR_IO = 7,
  UAPSEG_ERR_UNDEFINED_METRIC = 8,
  UAPSEG_ERR_TRAINING = 9,
  UAPSEG_ERR_USAGE = 10,
  UAPSEG_ERR_INTERNAL = 99
} uapseg_status;

/* Loss-term bits for uapseg_attack_config.terms. */
#define UAPSEG_TERM_PD 1u
#define UAPSEG_TERM_FD 2u
#define UAPSEG_TERM_LS 4u
#define UAPSEG_TERM_ALL 7u

typedef struct uapseg_dataset uapseg_dataset;
typedef struct uapseg_model uapseg_model;
typedef struct uapseg_perturbation uapseg_perturbation;
typedef struct uapseg_run uapseg_run;
typedef struct uapseg_report uapseg_report;

typedef struct uapseg_attack_config {
  double epsilon;   /* L-infinity bound in pixel units */
  double step_size; /* sign-step size, 0 < step_size <= epsilon */
  int epochs;
  int batch_size;
  double k;      /* weight of the low-frequency term */
  double lambda; /* weight of correctly classified pixels */
  uint64_t seed;
  unsigned terms; /* UAPSEG_TERM_* bits */
  int ignore_label;
} uapseg_attack_config;

typedef struct uapseg_train_config {
  int epochs;
  int batch_size;
  double learning_rate;
  uint64_t seed;
  int ignore_label;
} uapseg_train_config;

typedef struct uapseg_loss {
  double j_pd;
  double j_fd;
  double j_ls;
  double j_total;
  double ce_mean;
} uapseg_loss;

/* Called after every attack step with the current perturbation. */
typedef void (*uapseg_step_callback)(int step, const float* delta,
                                     size_t delta_len, const uapseg_loss* loss,
                                     void* user_data);

UAPSEG_API const char* uapseg_version(void);
UAPSEG_API const char* uapseg_status_name(uapseg_status status);
UAPSEG_API const char* uapseg_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* Synthetic shapes corpus; odd sizes are padded to even. */
UAPSEG_API uapseg_status uapseg_dataset_generate(int n, int num_classes,
                                                 int height, int width,
                                                 uint64_t seed,
                                                 uapseg_dataset** out);
/* Every fifth example (index % 5 == 4) goes to the eval split. */
UAPSEG_API uapseg_status uapseg_dataset_split(const uapseg_dataset* data,
                                              uapseg_dataset** train,
                                              uapseg_dataset** eval);
/* Paired <stem>.ppm / <stem>.pgm files. Warnings (empty corpus, padding)
 * are available through uapseg_dataset_warning. */
UAPSEG_API uapseg_status uapseg_dataset_load(const char* image_dir,
                                             const char* label_dir,
                                             int num_classes, int ignore_label,
                                             uapseg_dataset** out);
/* Writes <dir>/images/<id>.ppm and <dir>/labels/<id>.pgm. */
UAPSEG_API uapseg_status uapseg_dataset_save(const uapseg_dataset* data,
                                             const char* dir);
UAPSEG_API size_t uapseg_dataset_size(const uapseg_dataset* data);
UAPSEG_API int uapseg_dataset_num_classes(const uapseg_dataset* data);
UAPSEG_API uapseg_status uapseg_dataset_shape(const uapseg_dataset* data,
                                              int* channels, int* height,
                                              int* width);
/* Writes 16 hex digits plus a terminator; buf_len must be >= 17. */
UAPSEG_API uapseg_status uapseg_dataset_fingerprint(
    const uapseg_dataset* data, char* buf, size_t buf_len);
/* Copies one example. Either output may be NULL. */
UAPSEG_API uapseg_status uapseg_dataset_example(const uapseg_dataset* data,
                                                size_t index, double* image,
                                                size_t image_len,
                                                int32_t* labels,
                                                size_t labels_len);
UAPSEG_API const char* uapseg_dataset_example_id(const uapseg_dataset* data,
                                                 size_t index);
UAPSEG_API size_t uapseg_dataset_warning_count(const uapseg_dataset* data);
UAPSEG_API const char* uapseg_dataset_warning(const uapseg_dataset* data,
                                              size_t index);
UAPSEG_API void uapseg_dataset_free(uapseg_dataset* data);

/* ---- models ------------------------------------------------------------ */

/* arch is "toyA", "toyB" or "linear". */
UAPSEG_API uapseg_status uapseg_model_create(const char* arch,
                                             int num_classes, uint64_t seed,
                                             uapseg_model** out);
UAPSEG_API void uapseg_train_config_default(uapseg_train_config* cfg);
UAPSEG_API uapseg_status uapseg_model_train(uapseg_model* model,
                                            const uapseg_dataset* data,
                                            const uapseg_train_config* cfg,
                                            double* final_pixel_accuracy);
/* Checkpoint: "UAPSEG01", u32 arch, u32 classes, u64 seed, f32 params. */
UAPSEG_API uapseg_status uapseg_model_save(const uapseg_model* model,
                                           const char* path);
UAPSEG_API uapseg_status uapseg_model_load(const char* path,
                                           uapseg_model** out);
/* logits_len must be num_classes * height * width. */
UAPSEG_API uapseg_status uapseg_model_forward(const uapseg_model* model,
                                              const double* image,
                                              int channels, int height,
                                              int width, double* logits,
                                              size_t logits_len);
UAPSEG_API const char* uapseg_model_id(const uapseg_model* model);
UAPSEG_API int uapseg_model_num_classes(const uapseg_model* model);
UAPSEG_API size_t uapseg_model_parameter_count(const uapseg_model* model);
UAPSEG_API void uapseg_model_free(uapseg_model* model);

/* ---- attack ------------------------------------------------------------ */

/* epsilon 10/255, step epsilon/10, 5 epochs, batch 5, k 1, lambda 0.3,
 * all terms, ignore label 255. */
UAPSEG_API void uapseg_attack_config_default(uapseg_attack_config* cfg);
/* "pd,fd,ls" -> UAPSEG_TERM_* bits. */
UAPSEG_API uapseg_status uapseg_parse_terms(const char* csv, unsigned* terms);
/* callback may be NULL. The run handle (history + manifest) may be NULL
 * if not wanted. */
UAPSEG_API uapseg_status uapseg_train_uap(const uapseg_model* model,
                                          const uapseg_dataset* data,
                                          const uapseg_attack_config* cfg,
                                          uapseg_step_callback callback,
                                          void* user_data,
                                          uapseg_perturbation** out,
                                          uapseg_run** run);
UAPSEG_API size_t uapseg_run_history_size(const uapseg_run* run);
UAPSEG_API uapseg_status uapseg_run_history_get(const uapseg_run* run,
                                                size_t step, uapseg_loss* out);
UAPSEG_API size_t uapseg_run_manifest_size(const uapseg_run* run);
UAPSEG_API uapseg_status uapseg_run_manifest_entry(const uapseg_run* run,
                                                   size_t index,
                                                   const char** key,
                                                   const char** value);
UAPSEG_API void uapseg_run_free(uapseg_run* run);

/* ---- perturbations ----------------------------------------------------- */

UAPSEG_API uapseg_status uapseg_perturbation_zeros(int channels, int height,
                                                   int width, double epsilon,
                                                   uapseg_perturbation** out);
/* "UAPPERT1", i32 C/H/W, f32 epsilon, u32-prefixed model id, f32 data. */
UAPSEG_API uapseg_status uapseg_perturbation_save(
    const uapseg_perturbation* p, const char* path);
UAPSEG_API uapseg_status uapseg_perturbation_load(const char* path,
                                                  uapseg_perturbation** out);
UAPSEG_API uapseg_status uapseg_perturbation_info(
    const uapseg_perturbation* p, int* channels, int* height, int* width,
    double* epsilon, double* max_abs);
UAPSEG_API uapseg_status uapseg_perturbation_data(
    const uapseg_perturbation* p, float* out, size_t len);
UAPSEG_API const char* uapseg_perturbation_id(const uapseg_perturbation* p);
UAPSEG_API const char* uapseg_perturbation_trained_on(
    const uapseg_perturbation* p);
UAPSEG_API void uapseg_perturbation_free(uapseg_perturbation* p);

/* ---- evaluation -------------------------------------------------------- */

/* perturbation may be NULL for the benign report. */
UAPSEG_API uapseg_status uapseg_evaluate(const uapseg_model* model,
                                         const uapseg_dataset* data,
                                         const uapseg_perturbation* p,
                                         uapseg_report** out);
UAPSEG_API double uapseg_report_miou(const uapseg_report* report);
UAPSEG_API int uapseg_report_num_classes(const uapseg_report* report);
/* *present is 0 for classes excluded from the mean. */
UAPSEG_API uapseg_status uapseg_report_class_iou(const uapseg_report* report,
                                                 int cls, double* iou,
                                                 int* present);
UAPSEG_API int64_t uapseg_report_confusion(const uapseg_report* report,
                                           int truth, int pred);
UAPSEG_API const char* uapseg_report_table(const uapseg_report* report);
UAPSEG_API const char* uapseg_report_key_values(const uapseg_report* report);
/* Either path may be NULL. */
UAPSEG_API uapseg_status uapseg_report_write(const uapseg_report* report,
                                             const char* table_path,
                                             const char* kv_path);
UAPSEG_API void uapseg_report_free(uapseg_report* report);

/* out is row-major [num_perts x num_models]; a NULL perturbation entry
 * produces the benign row. */
UAPSEG_API uapseg_status uapseg_transfer_matrix(
    const uapseg_perturbation* const* perts, size_t num_perts,
    const uapseg_model* const* models, size_t num_models,
    const uapseg_dataset* data, double* out);

/* ---- rendering and diagnostics ----------------------------------------- */

UAPSEG_API uapseg_status uapseg_render_labels(const int32_t* labels,
                                              int height, int width,
                                              int num_colors, int ignore_label,
                                              const char* path);
/* Colors a single-channel PGM label/prediction file into a PPM. */
UAPSEG_API uapseg_status uapseg_render_label_file(const char* in_path,
                                                  const char* out_path,
                                                  int num_colors,
                                                  int ignore_label);
/* Argmax prediction of the model on one dataset example, optionally under a
 * perturbation (p may be NULL). labels_len must be height * width. */
UAPSEG_API uapseg_status uapseg_predict_example(const uapseg_model* model,
                                                const uapseg_dataset* data,
                                                size_t index,
                                                const uapseg_perturbation* p,
                                                int32_t* labels,
                                                size_t labels_len);
/* Reads a PPM/PGM, pads to even size and writes its low-pass
 * reconstruction phi(x) as a PPM. */
UAPSEG_API uapseg_status uapseg_inspect_frequency(const char* image_path,
                                                  const char* out_path);
/* phi(x) for a raw [C x H x W] buffer; H and W must be even. */
UAPSEG_API uapseg_status uapseg_lowpass_project(const double* image,
                                                int channels, int height,
                                                int width, double* out);

#ifdef __cplusplus
}
#endif

#endif /* UAPSEG_UAPSEG_H_ */
