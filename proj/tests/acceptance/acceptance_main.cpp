// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero if any fails.
// Usage: acceptance [criterion numbers...]  (all ten when none are given)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "config.hpp"
#include "microlocal.hpp"
#include "operators.hpp"
#include "phantom.hpp"
#include "pipeline.hpp"
#include "recon.hpp"
#include "spectral.hpp"

using namespace curvetomo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const GridSpec kGrid{128, 1.0, 0.9};
constexpr std::size_t kNs = 192;
constexpr std::size_t kNt = 360;

GeometryConfig geometry(const std::string& phase, const std::string& motion = "identity", double rate = 0.0,
                        double amplitude = 0.0) {
    GeometryConfig c;
    c.phase = phase;
    c.motion.kind = motion;
    c.motion.rate = rate;
    c.motion.amplitude = amplitude;
    c.grid = kGrid;
    c.ns = kNs;
    c.nt = kNt;
    return c;
}

// Same curve family with every derivative taken by central differences.
class FiniteDifferencePhase final : public PhaseFunction {
public:
    explicit FiniteDifferencePhase(PhasePtr inner) : PhaseFunction(inner->domain(), inner->t_range()), inner_(inner) {}
    std::string name() const override { return inner_->name() + "+fd"; }
    double value(double t, Vec2 x) const override { return inner_->value(t, x); }

private:
    PhasePtr inner_;
};

PhasePtr sync_phase() { return make_dynamic_phase(make_rotation_motion(-1.0)); }

// ---------------------------------------------------------------------------

Outcome adjoint_duality() {
    const std::vector<std::pair<std::string, GeometryConfig>> cases{
        {"static", geometry("static")},
        {"breathing", geometry("dynamic", "breathing", 0.0, 0.05)},
        {"rotation", geometry("dynamic", "rotation", 0.3)},
        {"fanbeam", geometry("fanbeam")},
    };
    bool ok = true;
    std::string d;
    for (const auto& [name, cfg] : cases) {
        const Json m = run_pipeline("adjoint-test", Json{{"config_json", config_to_json(cfg)}, {"pairs", 10}});
        const double worst = m["results"]["discrepancy"].get<double>();
        ok = ok && worst < 1e-3;
        d += name + " " + fmt("%.2e", worst) + "; ";
    }
    return {ok, "worst of 10 pairs: " + d + "threshold 1e-3"};
}

Outcome bolker_exactness() {
    const auto st = make_static_phase();
    double static_err = 0.0;
    for (const auto& s : random_phase_samples(*st, 1000, 11, 0.9))
        static_err = std::max(static_err, std::abs(bolker_determinant(*st, s.t, s.x) - 1.0));

    const FiniteDifferencePhase sync_fd(sync_phase());
    double sync_h = 0.0;
    for (const auto& s : random_phase_samples(sync_fd, 1000, 12, 0.9))
        sync_h = std::max(sync_h, std::abs(bolker_determinant(sync_fd, s.t, s.x)));

    // dPi_Y determinant against sigma h on nondegenerate families
    double det_err = 0.0;
    std::size_t checked = 0;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> us(0.5, 2.0);
    const std::vector<PhasePtr> fams{st, make_dynamic_phase(make_breathing_motion(0.05)),
                                     make_dynamic_phase(make_rotation_motion(0.3)), make_fanbeam_phase(3.0)};
    for (const auto& pf : fams) {
        for (const auto& s : random_phase_samples(*pf, 1000, 14, 0.6)) {
            const double sigma = (rng() & 1 ? 1.0 : -1.0) * us(rng);
            const double ref = std::abs(sigma * bolker_determinant(*pf, s.t, s.x));
            const double det = dPiY_rank(*pf, s.t, s.x, sigma).det;
            det_err = std::max(det_err, std::abs(std::abs(det) - ref) / ref);
            ++checked;
        }
    }
    const bool ok = static_err < 1e-10 && sync_h < 1e-6 && det_err < 1e-8;
    return {ok, "static max|h-1| " + fmt("%.1e", static_err) + " (< 1e-10); sync FD max|h| " + fmt("%.1e", sync_h) +
                    " (< 1e-6); |det dPi_Y| vs |sigma h| max rel " + fmt("%.1e", det_err) + " over " +
                    std::to_string(checked) + " samples (< 1e-8)"};
}

Outcome prop31() {
    const std::vector<PhasePtr> fams{make_static_phase(),
                                     make_dynamic_phase(make_rotation_motion(0.3)),
                                     make_dynamic_phase(make_breathing_motion(0.05)),
                                     make_dynamic_phase(make_affine_motion(0.1)),
                                     sync_phase(),
                                     make_fanbeam_phase(3.0)};
    bool ok = true;
    std::string d;
    std::uint64_t seed = 31;
    for (const auto& pf : fams) {
        const auto rep = prop31_equivalence_check(*pf, random_phase_samples(*pf, 10000, seed++, 0.9));
        ok = ok && rep.agreements == rep.samples && rep.samples == 10000;
        d += pf->name() + " " + std::to_string(rep.agreements) + "/" + std::to_string(rep.samples) + "; ";
    }
    return {ok, "zero/nonzero agreement " + d};
}

Outcome symbol_order() {
    const auto rep = symbol_order_probe(128, 720, 0.03);
    const auto pf = make_static_phase();
    const auto mu = make_constant_weight();
    const CutoffAtlas atlas = CutoffAtlas::trivial(pf->t_range());
    double hom = 0.0;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 x{0.6 * u(rng), 0.6 * u(rng)};
        const Vec2 xi{20 * u(rng), 20 * u(rng)};
        const double lambda = std::pow(10.0, 2 * u(rng));
        const double p1 = principal_symbol(*pf, *mu, atlas, x, xi).p;
        const double p2 = principal_symbol(*pf, *mu, atlas, x, lambda * xi).p;
        hom = std::max(hom, std::abs(lambda * p2 - p1) / std::abs(p1));
    }
    const bool ok = std::abs(rep.slope + 1.0) <= 0.05 && hom <= 1e-12;
    return {ok, "log-log slope " + fmt("%.4f", rep.slope) + " on [4, 32] (target -1 +- 0.05); homogeneity max rel " +
                    fmt("%.1e", hom) + " (<= 1e-12)"};
}

Outcome forward_forms() {
    auto motion = make_breathing_motion(0.05);
    auto pf = make_dynamic_phase(motion);
    auto mu0 = make_constant_weight();
    auto mu = std::make_shared<LagrangianWeight>(motion, mu0);
    const SinogramSpec spec = default_sinogram_spec(*pf, kGrid, kNs, kNt, pf->t_range());
    const ImageGrid f = render_phantom(default_phantom(), kGrid);
    const Sinogram a = forward_levelset(pf, mu, f, spec);
    const Sinogram b = forward_lagrangian(*motion, *mu0, f, spec, 1.1);
    const double e = relative_l2_error(a, b);
    return {e < 0.02, "breathing a=0.05 level-set vs Lagrangian rel L2 " + fmt("%.4f", e) + " (< 0.02)"};
}

// Regression baselines frozen from the first run on this configuration; later
// runs may not drift above them by more than half a percentage point.
constexpr double kReconBaselineStatic = 0.0021;
constexpr double kReconBaselineBreathing = 0.0016;

// Data for both families come from the ray-marching (Lagrangian) forward of the
// rendered phantom, a discretization independent of the level-set projector.
// Exact ellipse line integrals are also solved and reported: they carry the
// pixel-model mismatch, which 50 unregularized iterations amplify.
Outcome reconstruction() {
    const auto specs = default_phantom();
    const ImageGrid truth = render_phantom(specs, kGrid);
    const auto mu0 = make_constant_weight();
    SolveOptions so;
    so.max_iter = 50;
    so.truth = &truth;
    so.truth_radius = 0.9 * kGrid.support_radius;

    auto solve = [&](MotionPtr motion, bool lagrangian_weight) {
        const PhasePtr pf = motion ? make_dynamic_phase(motion) : make_static_phase();
        const SinogramSpec spec = default_sinogram_spec(*pf, kGrid, kNs, kNt, pf->t_range());
        const Sinogram g = forward_lagrangian(motion ? *motion : *make_identity_motion(), *mu0, truth, spec, 1.1);
        WeightPtr mu = lagrangian_weight ? WeightPtr(std::make_shared<LagrangianWeight>(motion, mu0)) : mu0;
        return cg_normal_solve(pf, mu, CutoffAtlas::trivial(pf->t_range()), g, kGrid, so).second.rel_error_vs_truth;
    };
    const double es = solve(nullptr, false);
    const double eb = solve(make_breathing_motion(0.05), true);

    const auto ps = make_static_phase();
    Sinogram ga = Sinogram::zeros(default_sinogram_spec(*ps, kGrid, kNs, kNt, ps->t_range()));
    for (std::size_t jt = 0; jt < ga.nt; ++jt)
        for (std::size_t is = 0; is < ga.ns; ++is)
            for (const auto& e : specs) ga.at(is, jt) += e.line_integral(ga.s_at(is), ga.t_at(jt));
    const double ea = cg_normal_solve(ps, mu0, CutoffAtlas::trivial(ps->t_range()), ga, kGrid, so).second.rel_error_vs_truth;

    const bool ok = es < 0.05 && eb < 0.10 && es <= kReconBaselineStatic + 0.005 && eb <= kReconBaselineBreathing + 0.005;
    return {ok, "50 CG iterations, error inside r=0.81: static " + fmt("%.4f", es) + " (< 0.05, baseline " +
                    fmt("%.4f", kReconBaselineStatic) + "); breathing " + fmt("%.4f", eb) + " (< 0.10, baseline " +
                    fmt("%.4f", kReconBaselineBreathing) + "); info: static from exact line integrals " +
                    fmt("%.4f", ea)};
}

Outcome invisible_singularities() {
    const auto pf = sync_phase();
    // visibility at a handful of points
    bool only_horizontal = true;
    for (const Vec2 x : {Vec2{0.3, 0.2}, Vec2{-0.4, 0.1}, Vec2{0.0, -0.5}, Vec2{0.6, 0.6}}) {
        const auto vm = visibility_map(*pf, x, 72, pf->t_range());
        for (std::size_t i = 0; i < vm.directions.size(); ++i) {
            const bool horizontal = std::abs(vm.directions[i].y) < 1e-12;
            if ((vm.count[i] > 0) != horizontal) only_horizontal = false;
        }
    }

    // edge responses of a reconstruction from sync data
    const auto specs = default_phantom();
    const ImageGrid truth = render_phantom(specs, kGrid);
    const auto mu = make_constant_weight();
    const SinogramSpec spec = default_sinogram_spec(*pf, kGrid, kNs, kNt, pf->t_range());
    const Sinogram g = forward_levelset(pf, mu, truth, spec);
    SolveOptions so;
    so.max_iter = 50;
    const auto [rec, rep] = cg_normal_solve(pf, mu, CutoffAtlas::trivial(pf->t_range()), g, kGrid, so);
    // big disk centered (-0.1, 0) radius 0.55: right edge has normal (1,0), top edge (0,1)
    const double e10 = edge_response(rec, truth, make_covector({0.45, 0.0}, {1.0, 0.0}));
    const double e01 = edge_response(rec, truth, make_covector({-0.1, 0.55}, {0.0, 1.0}));

    StabilityOptions st;
    st.family = "rotation";
    st.amplitudes = {0.0, -1.0};
    const auto sr = stability_probe(st);
    const double blow = std::max(sr.max_ratio[1], sr.worst_case_ratio[1]) / sr.static_median;

    const bool ok = only_horizontal && e01 < 0.2 * e10 && sr.flagged[1] && blow >= 1e3;
    return {ok, std::string("visible set only +-(1,0): ") + (only_horizontal ? "yes" : "no") + "; edge response (0,1) " +
                    fmt("%.3f", e01) + " vs (1,0) " + fmt("%.3f", e10) + " (ratio " + fmt("%.3f", e01 / e10) +
                    " < 0.2); stability blow-up " + fmt("%.3g", blow) + " x static median, flag " +
                    (sr.flagged[1] ? "raised" : "not raised")};
}

Outcome perturbation() {
    PerturbationOptions po;
    po.deltas = {1e-3, 3e-3, 1e-2, 3e-2};
    const ImageGrid f = band_limited_field(po.grid, 1.0, po.grid.n / 8.0, 0.8, kDefaultSeed);
    const auto r = perturbation_sweep(po, f);
    return {std::abs(r.slope - 1.0) <= 0.2,
            "breathing family, slope of ||(N - N~)f||_H1/||f|| vs delta " + fmt("%.4f", r.slope) + " (1 +- 0.2)"};
}

Outcome fan_consistency() {
    const ImageGrid f = render_phantom(default_phantom(), kGrid);
    FanSpec fsp;
    fsp.source_radius = 3.0;
    fsp.n_gamma = 256;
    fsp.nt = 720;
    fsp.gamma_max = 0.35;
    const Sinogram fan = forward_fan_rays(f, fsp);
    const auto ps = make_static_phase();
    const SinogramSpec par_spec{kNs, kNt, -0.95, 0.95, TimeRange::full()};
    RebinReport rep;
    const Sinogram reb = fanbeam_convert(fan, fsp.source_radius, par_spec, &rep);
    const Sinogram par = LevelSetProjector(ps, make_constant_weight(), kGrid, par_spec).apply(f);
    const double e = relative_l2_error(reb, par);
    return {e < 0.03 && rep.out_of_range == 0, "rebinned fan vs parallel forward rel L2 " + fmt("%.4f", e) +
                                                    " (< 0.03); uncovered cells " + std::to_string(rep.out_of_range)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / ("curvetomo_repro_" + std::to_string(::getpid()));
    const std::string cli = CURVETOMO_CLI_PATH;
    const std::string cfg = std::string(CURVETOMO_SOURCE_DIR) + "/config/default.json";
    const std::string phantom = std::string(CURVETOMO_SOURCE_DIR) + "/config/default_phantom.json";
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        // second run on a different thread count; results may depend on chunk size only
        const std::string env = std::string(run) == "a" ? "CURVETOMO_THREADS=1 " : "CURVETOMO_THREADS=3 ";
        const std::string pre = "cd '" + dir.string() + "' && " + env + "'" + cli + "' ";
        const std::vector<std::string> steps{
            "phantom --geometry " + cfg + " --phantom " + phantom + " --out phantom",
            "forward --geometry " + cfg + " --image phantom --out data",
            "adjoint-test --geometry " + cfg + " --out adjoint",
            "reconstruct --geometry " + cfg + " --data data --truth phantom --iters 10 --out recon",
        };
        for (const auto& s : steps)
            if (std::system((pre + s + " > /dev/null").c_str()) != 0)
                return {false, "CLI step failed: " + s};
    }
    std::size_t files = 0, differing = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        const fs::path other = root / "b" / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
    }
    std::size_t files_b = std::distance(fs::directory_iterator(root / "b"), fs::directory_iterator{});
    fs::remove_all(root);
    const bool ok = files > 0 && differing == 0 && files == files_b;
    return {ok, std::to_string(files) + " output files from phantom, forward, adjoint-test, reconstruct; " +
                    std::to_string(differing) + " differ between runs on 1 and 3 threads"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"adjoint duality", adjoint_duality},
        {"Bolker checker exactness", bolker_exactness},
        {"Bolker vs mixed-Hessian determinant equivalence", prop31},
        {"symbol order and homogeneity", symbol_order},
        {"forward-form equivalence", forward_forms},
        {"reconstruction accuracy", reconstruction},
        {"invisible singularities (sync rotation)", invisible_singularities},
        {"perturbation scaling", perturbation},
        {"fan-beam two-path consistency", fan_consistency},
        {"reproducibility", reproducibility},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s: %s | %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
