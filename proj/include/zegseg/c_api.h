// Copyright 2026 The ZegSeg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZEGSEG_C_API_H_
#define ZEGSEG_C_API_H_

/* C interface to the segmentation engine.
 *
 * Every function returning int returns a status: 0 on success, otherwise
 * 2 (I/O or parse error), 3 (configuration or contract violation) or
 * 4 (numeric failure). The message of the last failure on the calling
 * thread is available from zs_last_error(). Strings handed out through
 * char** parameters are owned by the caller and released with
 * zs_string_free(). */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define ZS_API __attribute__((visibility("default")))
#else
#define ZS_API
#endif

enum {
  ZS_OK = 0,
  ZS_ERR_IO = 2,
  ZS_ERR_CONFIG = 3,
  ZS_ERR_NUMERIC = 4
};

typedef struct zs_config zs_config;
typedef struct zs_model zs_model;

ZS_API const char* zs_version(void);
ZS_API const char* zs_last_error(void);
ZS_API void zs_string_free(char* s);

/* Run configuration. `json` may be NULL for all defaults. */
ZS_API int zs_config_create(const char* json, zs_config** out);
ZS_API int zs_config_load(const char* path, zs_config** out);
/* Sets one existing key, addressed with dots ("train.optimizer.steps"),
 * to a JSON value ("2000", "\"zs3\"", "[1,2]"). */
ZS_API int zs_config_set(zs_config* cfg, const char* key,
                         const char* json_value);
ZS_API int zs_config_to_json(const zs_config* cfg, char** out);
ZS_API void zs_config_free(zs_config* cfg);

/* Commands. Summaries and reports are returned as JSON text in `*out`
 * (which may be NULL when not wanted). */
ZS_API int zs_gen_data(const zs_config* cfg, const char* out_dir, char** out);
ZS_API int zs_train(const zs_config* cfg, const char* manifest,
                    const char* checkpoint, const char* loss_csv,
                    const char* embeddings, char** out);
ZS_API int zs_infer(const zs_config* cfg, const char* checkpoint,
                    const char* input, const char* out_dir,
                    const char* embeddings, char** out);
ZS_API int zs_eval(const zs_config* cfg, const char* pred_dir,
                   const char* manifest, const char* report, char** out);
ZS_API int zs_eval_boundary(const zs_config* cfg, const char* pred_dir,
                            const char* manifest, const char* report,
                            char** out);
/* CSV "k,t_segment,t_pixel". */
ZS_API int zs_bench_head(const zs_config* cfg, const char* csv_path,
                         char** out);

/* Models. */
ZS_API int zs_model_load(const char* path, zs_model** out);
ZS_API int zs_model_save(const zs_model* model, const char* path);
ZS_API void zs_model_free(zs_model* model);
ZS_API int zs_model_num_queries(const zs_model* model);
ZS_API int zs_model_semantic_dim(const zs_model* model);
/* Forward pass on a row-major, channel-interleaved image in [0,1].
 * masks: num_queries * height * width values; semantic: num_queries *
 * semantic_dim values. The segment model only. */
ZS_API int zs_model_predict(const zs_model* model, int height, int width,
                            int channels, const double* pixels,
                            double* masks, double* semantic);

#ifdef __cplusplus
}
#endif

#endif /* ZEGSEG_C_API_H_ */
