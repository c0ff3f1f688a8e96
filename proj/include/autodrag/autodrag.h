/* Copyright 2026 The AutoDrag Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the drag editor. Every call returns an ad_status; on failure
 * ad_last_error() holds a message for the calling thread. Strings handed out
 * through char** must be released with ad_free. */

#ifndef AUTODRAG_AUTODRAG_H_
#define AUTODRAG_AUTODRAG_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define AD_API __attribute__((visibility("default")))
#else
#define AD_API
#endif

typedef enum ad_status {
  AD_OK = 0,
  AD_ERR_PARAMETER = 1,
  AD_ERR_SHAPE = 2,
  AD_ERR_NO_CORRESPONDENCE = 3,
  AD_ERR_STATE = 4,
  AD_ERR_IO = 5,
  AD_ERR_FORMAT = 6,
  AD_ERR_TRAINING = 7,
  AD_ERR_UNDEFINED_RATIO = 8,
  AD_ERR_PARSE = 9,
  AD_ERR_USAGE = 10,
  AD_ERR_INTERNAL = 100
} ad_status;

typedef struct ad_model ad_model;
typedef struct ad_result ad_result;

/* Progress hook for training: stage is 1 or 2; loss is the epoch mean. */
typedef void (*ad_progress_fn)(void* user, int stage, int epoch, double loss, const char* detail);

AD_API const char* ad_version(void);
AD_API const char* ad_last_error(void);
AD_API const char* ad_status_name(ad_status status);
AD_API void ad_free(void* p);

/* Default run configuration as JSON. */
AD_API ad_status ad_default_config(char** json_out);
/* Parses, fills defaults, applies seed (when nonzero) and validates. */
AD_API ad_status ad_normalise_config(const char* json_in, uint64_t seed, char** json_out);

/* Stage 1: trains the regularizer; writes a checkpoint and curve CSV. */
AD_API ad_status ad_train_regularizer(const char* config_json, const char* checkpoint_out, const char* curve_csv,
                                      ad_progress_fn progress, void* user);
/* Stage 2: starts from a stage-1 checkpoint; the run config comes from config_json. */
AD_API ad_status ad_train_predictor(const char* config_json, const char* stage1_checkpoint,
                                    const char* checkpoint_out, const char* curve_csv, ad_progress_fn progress,
                                    void* user);

AD_API ad_status ad_model_load(const char* path, ad_model** out);
AD_API void ad_model_free(ad_model* model);
/* sha256 of the checkpoint file; owned by the model. */
AD_API const char* ad_model_hash(const ad_model* model);
AD_API ad_status ad_model_config(const ad_model* model, char** json_out);
AD_API int ad_model_resolution(const ad_model* model);
/* Latent shape (rows = layers, cols = channels). */
AD_API void ad_model_latent_shape(const ad_model* model, int* layers, int* dim);
/* Samples the latent for a seed into `out` (layers * dim doubles, row-major). */
AD_API ad_status ad_model_sample_latent(const ad_model* model, uint64_t seed, double* out, size_t count);

/* Renders a latent to a PNG file. */
AD_API ad_status ad_model_render_png(const ad_model* model, const double* w, size_t count, const char* path);
/* Writes `n` object keypoints of a latent as (x, y) pairs into out (2 * n doubles); n <= 12. */
AD_API ad_status ad_model_keypoints(const ad_model* model, const double* w, size_t count, int n, double* out);

/* pairs: n_pairs rows of (hx, hy, tx, ty). n_steps/rounds <= 0 use the checkpoint's defaults. */
AD_API ad_status ad_edit(const ad_model* model, const double* w0, size_t w0_count, const double* pairs,
                         size_t n_pairs, int n_steps, int rounds, ad_result** out);
/* Reads "hx hy tx ty" lines from a file into a malloc'd array (release with ad_free). */
AD_API ad_status ad_read_points(const char* path, double** pairs_out, size_t* n_pairs_out);

AD_API void ad_result_free(ad_result* result);
AD_API size_t ad_result_steps(const ad_result* result);
/* Writes up to `capacity` MDD values; returns the curve length. */
AD_API size_t ad_result_mdd(const ad_result* result, double* out, size_t capacity);
AD_API double ad_result_wall_time(const ad_result* result);
AD_API uint64_t ad_result_synthesis_calls(const ad_result* result);
AD_API uint64_t ad_result_gradient_evaluations(const ad_result* result);
AD_API ad_status ad_result_final_latent(const ad_result* result, double* out, size_t count);
AD_API ad_status ad_result_save(const ad_result* result, const char* dir);

/* protocol: "landmark", "paired", "mdd" or "ablation-n". Writes CSVs and
 * summary.json into out_dir; the summary is also returned when json_out is set. */
AD_API ad_status ad_evaluate(const ad_model* model, const char* protocol, const char* out_dir, uint64_t seed,
                             ad_progress_fn progress, void* user, char** json_out);

/* Blocks serving HTTP until the process is stopped. */
AD_API ad_status ad_serve(const ad_model* model, const char* host, int port);

#ifdef __cplusplus
}
#endif

#endif /* AUTODRAG_AUTODRAG_H_ */
