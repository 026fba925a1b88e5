/* Plain C client of the shared library. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "curvetomo/curvetomo.h"

static int failures = 0;
#define EXPECT(cond)                                               \
    do {                                                           \
        if (!(cond)) {                                             \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                            \
        }                                                          \
    } while (0)

int main(void) {
    ct_config* cfg = NULL;
    ct_image* img = NULL;
    ct_image* back = NULL;
    ct_sinogram* g = NULL;
    char* text = NULL;
    double d = 1.0;

    EXPECT(strlen(ct_version()) > 0);
    EXPECT(ct_config_from_json("{\"grid\": {\"n\": 64}, \"sinogram\": {\"ns\": 96, \"nt\": 120}}", &cfg) == CT_OK);
    EXPECT(ct_config_to_json(cfg, &text) == CT_OK && strstr(text, "\"static\"") != NULL);
    ct_string_free(text);

    EXPECT(ct_image_phantom(cfg, &img) == CT_OK);
    EXPECT(ct_image_nx(img) == 64 && ct_image_ny(img) == 64);
    EXPECT(ct_forward(cfg, img, &g) == CT_OK);
    EXPECT(ct_sinogram_ns(g) == 96 && ct_sinogram_nt(g) == 120);
    EXPECT(ct_adjoint(cfg, g, &back) == CT_OK && ct_image_nx(back) == 64);
    EXPECT(ct_adjoint_test(cfg, 3, 7, &d) == CT_OK && d < 1e-3);

    /* error path: status, exit code and message */
    ct_config* bad = NULL;
    ct_status st = ct_config_from_json("{\"grid\": {\"n\": 32,}}", &bad);
    EXPECT(st == CT_ERR_CONFIG && ct_exit_code(st) == 2);
    EXPECT(strstr(ct_last_error(), ":1:") != NULL);
    EXPECT(bad == NULL);
    EXPECT(ct_forward(NULL, img, &g) == CT_ERR_INVALID_ARGUMENT);
    EXPECT(ct_run_pipeline("nonsense", "{}", &text) == CT_ERR_CONFIG);
    EXPECT(ct_exit_code(CT_ERR_COVERAGE) == 4 && ct_exit_code(CT_ERR_DIVERGENCE) == 3);

    ct_image_free(back);
    ct_sinogram_free(g);
    ct_image_free(img);
    ct_config_free(cfg);
    if (failures == 0) printf("capi_test: all checks passed\n");
    return failures == 0 ? 0 : 1;
}
