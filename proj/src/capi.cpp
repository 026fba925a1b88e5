#include "curvetomo/curvetomo.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "io.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "pipeline.hpp"
#include "recon.hpp"
#include "spectral.hpp"

using namespace curvetomo;

struct ct_config {
    GeometryConfig cfg;
};
struct ct_image {
    ImageGrid img;
};
struct ct_sinogram {
    Sinogram g;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ct_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return CT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<ct_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CT_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CT_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

ct_status invalid(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return CT_ERR_INVALID_ARGUMENT;
}

}  // namespace

#define CT_NEED(p)              \
    do {                        \
        if (!(p)) return invalid(#p); \
    } while (0)

extern "C" {

const char* ct_version(void) { return kToolVersion; }

const char* ct_last_error(void) { return g_last_error.c_str(); }

int ct_exit_code(ct_status status) {
    if (status == CT_OK) return 0;
    if (status == CT_ERR_INVALID_ARGUMENT) return 2;
    if (status == CT_ERR_INTERNAL) return 3;
    return exit_status_for(static_cast<ErrorCode>(static_cast<int>(status)));
}

ct_status ct_config_from_json(const char* json_text, ct_config** out) {
    CT_NEED(json_text);
    CT_NEED(out);
    return guarded([&] { *out = new ct_config{parse_config(json_text, "<config>")}; });
}

ct_status ct_config_load(const char* path, ct_config** out) {
    CT_NEED(path);
    CT_NEED(out);
    return guarded([&] { *out = new ct_config{load_config(path)}; });
}

ct_status ct_config_to_json(const ct_config* cfg, char** out_json) {
    CT_NEED(cfg);
    CT_NEED(out_json);
    return guarded([&] { *out_json = dup_string(config_to_json(cfg->cfg).dump(2)); });
}

void ct_config_free(ct_config* cfg) { delete cfg; }

ct_status ct_image_read(const char* stem, ct_image** out) {
    CT_NEED(stem);
    CT_NEED(out);
    return guarded([&] { *out = new ct_image{read_image(stem)}; });
}

ct_status ct_image_write(const ct_image* img, const char* stem) {
    CT_NEED(img);
    CT_NEED(stem);
    return guarded([&] { write_image(stem, img->img, ""); });
}

ct_status ct_image_phantom(const ct_config* cfg, ct_image** out) {
    CT_NEED(cfg);
    CT_NEED(out);
    return guarded([&] { *out = new ct_image{render_phantom(default_phantom(), cfg->cfg.grid)}; });
}

size_t ct_image_nx(const ct_image* img) { return img ? img->img.nx : 0; }
size_t ct_image_ny(const ct_image* img) { return img ? img->img.ny : 0; }
double* ct_image_data(ct_image* img) { return img ? img->img.values.data() : nullptr; }
void ct_image_free(ct_image* img) { delete img; }

ct_status ct_sinogram_read(const char* stem, ct_sinogram** out) {
    CT_NEED(stem);
    CT_NEED(out);
    return guarded([&] { *out = new ct_sinogram{read_sinogram(stem)}; });
}

ct_status ct_sinogram_write(const ct_sinogram* g, const char* stem) {
    CT_NEED(g);
    CT_NEED(stem);
    return guarded([&] { write_sinogram(stem, g->g, ""); });
}

size_t ct_sinogram_ns(const ct_sinogram* g) { return g ? g->g.ns : 0; }
size_t ct_sinogram_nt(const ct_sinogram* g) { return g ? g->g.nt : 0; }
double* ct_sinogram_data(ct_sinogram* g) { return g ? g->g.values.data() : nullptr; }
void ct_sinogram_free(ct_sinogram* g) { delete g; }

ct_status ct_forward(const ct_config* cfg, const ct_image* f, ct_sinogram** out) {
    CT_NEED(cfg);
    CT_NEED(f);
    CT_NEED(out);
    return guarded([&] {
        const GeometryConfig& c = cfg->cfg;
        if (f->img.nx != c.grid.n) throw ConfigError("image size does not match the config grid");
        execution_config().chunk_size = c.chunk_size;
        PhasePtr pf = build_phase(c);
        *out = new ct_sinogram{forward_levelset(pf, build_weight(c), f->img, build_sinogram_spec(c, *pf))};
    });
}

ct_status ct_adjoint(const ct_config* cfg, const ct_sinogram* g, ct_image** out) {
    CT_NEED(cfg);
    CT_NEED(g);
    CT_NEED(out);
    return guarded([&] {
        const GeometryConfig& c = cfg->cfg;
        execution_config().chunk_size = c.chunk_size;
        PhasePtr pf = build_phase(c);
        *out = new ct_image{adjoint(pf, build_weight(c), g->g, c.grid)};
    });
}

ct_status ct_adjoint_test(const ct_config* cfg, size_t pairs, uint64_t seed, double* discrepancy) {
    CT_NEED(cfg);
    CT_NEED(discrepancy);
    return guarded([&] {
        nlohmann::ordered_json opts{{"config_json", config_to_json(cfg->cfg)}, {"pairs", pairs}, {"seed", seed}};
        *discrepancy = run_pipeline("adjoint-test", opts)["results"]["discrepancy"].get<double>();
    });
}

ct_status ct_reconstruct(const ct_config* cfg, const ct_sinogram* g, size_t iters, double tol, double tikhonov,
                         ct_image** out, double* final_residual) {
    CT_NEED(cfg);
    CT_NEED(g);
    CT_NEED(out);
    return guarded([&] {
        const GeometryConfig& c = cfg->cfg;
        execution_config().chunk_size = c.chunk_size;
        PhasePtr pf = build_phase(c);
        SolveOptions so;
        so.max_iter = iters;
        so.tol = tol;
        so.tikhonov = tikhonov;
        auto [f, rep] = cg_normal_solve(pf, build_weight(c), build_atlas(c, *pf), g->g, c.grid, so);
        if (final_residual) *final_residual = rep.residual_history.back();
        *out = new ct_image{std::move(f)};
    });
}

ct_status ct_run_pipeline(const char* command, const char* options_json, char** result_json) {
    CT_NEED(command);
    return guarded([&] {
        const Json opts = options_json && *options_json ? parse_json_text(options_json, "<options>") : Json::object();
        const Json m = run_pipeline(command, opts);
        if (result_json) *result_json = dup_string(m.dump(2));
    });
}

void ct_string_free(char* s) { std::free(s); }

}  // extern "C"
