#ifndef CURVETOMO_CURVETOMO_H
#define CURVETOMO_CURVETOMO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CT_API __attribute__((visibility("default")))
#else
#define CT_API
#endif

/* Status codes. The values of the first four double as process exit codes. */
typedef enum ct_status {
    CT_OK = 0,
    CT_ERR_CONFIG = 2,
    CT_ERR_NUMERIC = 3,
    CT_ERR_COVERAGE = 4,
    CT_ERR_DOMAIN = 5,
    CT_ERR_BRANCH = 6,
    CT_ERR_SEED_PROJECTION = 7,
    CT_ERR_STALL = 8,
    CT_ERR_DEGENERATE_SYMBOL = 9,
    CT_ERR_DIVERGENCE = 10,
    CT_ERR_OUT_OF_RANGE = 11,
    CT_ERR_IO = 12,
    CT_ERR_INVALID_ARGUMENT = 20,
    CT_ERR_INTERNAL = 21
} ct_status;

typedef struct ct_config ct_config;
typedef struct ct_image ct_image;
typedef struct ct_sinogram ct_sinogram;

CT_API const char* ct_version(void);

/* Message of the last failing call on this thread ("" if none). */
CT_API const char* ct_last_error(void);

/* Exit code (0, 2, 3 or 4) for a status. */
CT_API int ct_exit_code(ct_status status);

/* Geometry configuration. */
CT_API ct_status ct_config_from_json(const char* json_text, ct_config** out);
CT_API ct_status ct_config_load(const char* path, ct_config** out);
CT_API ct_status ct_config_to_json(const ct_config* cfg, char** out_json);
CT_API void ct_config_free(ct_config* cfg);

/* Images: nx*ny float64 values, row-major with x fastest. */
CT_API ct_status ct_image_read(const char* stem, ct_image** out);
CT_API ct_status ct_image_write(const ct_image* img, const char* stem);
CT_API ct_status ct_image_phantom(const ct_config* cfg, ct_image** out);
CT_API size_t ct_image_nx(const ct_image* img);
CT_API size_t ct_image_ny(const ct_image* img);
CT_API double* ct_image_data(ct_image* img);
CT_API void ct_image_free(ct_image* img);

/* Sinograms: nt rows of ns samples. */
CT_API ct_status ct_sinogram_read(const char* stem, ct_sinogram** out);
CT_API ct_status ct_sinogram_write(const ct_sinogram* g, const char* stem);
CT_API size_t ct_sinogram_ns(const ct_sinogram* g);
CT_API size_t ct_sinogram_nt(const ct_sinogram* g);
CT_API double* ct_sinogram_data(ct_sinogram* g);
CT_API void ct_sinogram_free(ct_sinogram* g);

/* Operators for the configured geometry. */
CT_API ct_status ct_forward(const ct_config* cfg, const ct_image* f, ct_sinogram** out);
CT_API ct_status ct_adjoint(const ct_config* cfg, const ct_sinogram* g, ct_image** out);
/* Worst relative duality discrepancy over `pairs` seeded random pairs. */
CT_API ct_status ct_adjoint_test(const ct_config* cfg, size_t pairs, uint64_t seed, double* discrepancy);
CT_API ct_status ct_reconstruct(const ct_config* cfg, const ct_sinogram* g, size_t iters, double tol,
                                double tikhonov, ct_image** out, double* final_residual);

/* Runs a CLI command; options and the returned manifest are JSON text.
   Free *result_json with ct_string_free. */
CT_API ct_status ct_run_pipeline(const char* command, const char* options_json, char** result_json);
CT_API void ct_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
