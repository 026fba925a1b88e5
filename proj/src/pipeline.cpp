#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "config.hpp"
#include "microlocal.hpp"
#include "parallel.hpp"
#include "recon.hpp"
#include "spectral.hpp"

namespace curvetomo {

namespace {

namespace fs = std::filesystem;

const std::set<std::string>& commands() {
    static const std::set<std::string> c{"phantom",  "forward",     "adjoint-test", "check-bolker",
                                         "visibility", "symbol",    "normal",       "reconstruct",
                                         "stability", "perturb-sweep", "fanbeam-convert"};
    return c;
}

template <class T>
T opt_or(const Json& o, const char* key, T fallback) {
    if (!o.contains(key) || o.at(key).is_null()) return fallback;
    try {
        return o.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("bad value for option '") + key + "'");
    }
}

std::string require_str(const Json& o, const char* key) {
    const auto v = opt_or<std::string>(o, key, "");
    if (v.empty()) throw ConfigError(std::string("missing required option '") + key + "'");
    return v;
}

std::vector<double> opt_list(const Json& o, const char* key, std::vector<double> fallback) {
    if (!o.contains(key) || o.at(key).is_null()) return fallback;
    const Json& v = o.at(key);
    if (!v.is_array()) throw ConfigError(std::string("option '") + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(std::string("option '") + key + "' must be a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

/// Collects the files a command writes and produces the manifest.
class Run {
public:
    Run(std::string command, const Json& options) : command_(std::move(command)), options_(options) {
        seed_ = opt_or<std::uint64_t>(options, "seed", kDefaultSeed);
        out_ = opt_or<std::string>(options, "out", "");
        if (!out_.empty()) {
            const fs::path dir = fs::path(out_).parent_path();
            if (!dir.empty()) fs::create_directories(dir);
        }
    }

    bool has_config() const { return options_.contains("config") || options_.contains("config_json"); }

    const GeometryConfig& config() {
        if (!cfg_loaded_) {
            if (options_.contains("config_json")) {
                cfg_ = config_from_json(options_.at("config_json"));
            } else {
                const std::string path = require_str(options_, "config");
                cfg_ = load_config(path);
                inputs_[fs::path(path).filename().string()] = hex64(crc64_of_file(path));
            }
            execution_config().chunk_size = cfg_.chunk_size;
            cfg_loaded_ = true;
        }
        return cfg_;
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& out() const { return out_; }
    bool writes() const { return !out_.empty(); }

    ImageGrid input_image(const char* key) {
        const std::string stem = require_str(options_, key);
        GridFileInfo info;
        ImageGrid img = read_image(stem, &info);
        inputs_[fs::path(stem).filename().string() + ".bin"] = hex64(info.checksum);
        return img;
    }
    Sinogram input_sinogram(const char* key, GridFileInfo* info_out = nullptr) {
        const std::string stem = require_str(options_, key);
        GridFileInfo info;
        Sinogram g = read_sinogram(stem, &info);
        inputs_[fs::path(stem).filename().string() + ".bin"] = hex64(info.checksum);
        if (info_out) *info_out = info;
        return g;
    }
    void note_input_file(const std::string& path) { inputs_[fs::path(path).filename().string()] = hex64(crc64_of_file(path)); }

    std::string hash() { return has_config() ? config_hash(config()) : std::string(); }

    void image(const std::string& suffix, const ImageGrid& img, const Json& meta = Json::object()) {
        if (!writes()) return;
        const std::string stem = out_ + suffix;
        write_image(stem, img, hash(), meta);
        record(stem + ".bin");
        record(stem + ".json");
    }
    void sinogram(const std::string& suffix, const Sinogram& g, const Json& meta = Json::object()) {
        if (!writes()) return;
        const std::string stem = out_ + suffix;
        write_sinogram(stem, g, hash(), meta);
        record(stem + ".bin");
        record(stem + ".json");
    }
    void pgm(const std::string& suffix, const std::vector<double>& v, std::size_t nx, std::size_t ny) {
        if (!writes()) return;
        write_pgm16(out_ + suffix, v, nx, ny);
        record(out_ + suffix);
    }
    void text(const std::string& suffix, const std::string& body) {
        if (!writes()) return;
        write_text(out_ + suffix, body);
        record(out_ + suffix);
    }
    void json(const std::string& suffix, const Json& j) {
        if (!writes()) return;
        write_json(out_ + suffix, j);
        record(out_ + suffix);
    }

    Json finish(const Json& results) {
        Json m;
        m["tool"] = "curvetomo";
        m["version"] = kToolVersion;
        m["command"] = command_;
        m["config_hash"] = has_config() ? Json(hash()) : Json(nullptr);
        m["chunk_size"] = execution_config().chunk_size;
        m["seed"] = seed_;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["results"] = results;
        if (writes()) write_json(out_ + ".manifest.json", m);
        return m;
    }

private:
    void record(const std::string& path) { outputs_[fs::path(path).filename().string()] = hex64(crc64_of_file(path)); }

    std::string command_;
    Json options_;
    std::uint64_t seed_ = kDefaultSeed;
    std::string out_;
    GeometryConfig cfg_;
    bool cfg_loaded_ = false;
    Json inputs_ = Json::object();
    Json outputs_ = Json::object();
};

std::vector<EllipseSpec> phantom_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("ellipses") || !j["ellipses"].is_array())
        throw ConfigError("phantom spec must be {\"ellipses\": [...]}");
    std::vector<EllipseSpec> out;
    for (const auto& e : j["ellipses"]) {
        for (const auto& [k, v] : e.items())
            if (k != "center" && k != "a" && k != "b" && k != "angle" && k != "density")
                throw ConfigError("unknown key '" + k + "' in phantom ellipse");
        EllipseSpec s;
        try {
            s.center = {e.at("center").at(0).get<double>(), e.at("center").at(1).get<double>()};
            s.a = e.at("a").get<double>();
            s.b = e.at("b").get<double>();
            s.angle = e.value("angle", 0.0);
            s.density = e.value("density", 1.0);
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("phantom ellipse needs center [x, y], a, b");
        }
        if (!(s.a > 0 && s.b > 0)) throw ConfigError("phantom semi-axes must be positive");
        out.push_back(s);
    }
    return out;
}

Json phantom_to_json(const std::vector<EllipseSpec>& specs) {
    Json arr = Json::array();
    for (const auto& s : specs)
        arr.push_back({{"center", {s.center.x, s.center.y}}, {"a", s.a}, {"b", s.b}, {"angle", s.angle},
                       {"density", s.density}});
    return Json{{"ellipses", arr}};
}

std::vector<EllipseSpec> load_phantom(const Json& options, Run& run) {
    const auto path = opt_or<std::string>(options, "phantom", "");
    if (path.empty()) return default_phantom();
    run.note_input_file(path);
    return phantom_from_json(parse_json_text(read_text(path), path));
}

Json forward_report_json(const ForwardReport& r) {
    return {{"rows", r.rows}, {"nan_rows", r.nan_rows}, {"curves", r.curves}, {"closed_curves", r.closed_curves},
            {"vertices", r.vertices}};
}

Json coverage_json(const CoverageReport& r) {
    Json dirs = Json::array();
    for (double a : r.invisible_directions) dirs.push_back(a);
    return {{"points_checked", r.points_checked}, {"directions_checked", r.directions_checked},
            {"min_sum_chi", r.min_sum_chi}, {"max_sum_chi", r.max_sum_chi},
            {"invisible_directions", dirs}, {"uncovered_points", r.uncovered_points.size()}};
}

// ---------------------------------------------------------------------------

Json cmd_phantom(const Json& o, Run& run) {
    const auto& cfg = run.config();
    const auto specs = load_phantom(o, run);
    const ImageGrid img = render_phantom(specs, cfg.grid);
    const auto n_per = opt_or<std::size_t>(o, "wavefront_samples", 64);
    const auto wfs = boundary_wavefront(specs, n_per);
    run.image("", img, Json{{"phantom", phantom_to_json(specs)}});
    run.pgm(".pgm", img.values, img.nx, img.ny);
    std::ostringstream csv;
    csv << "ellipse,x1,x2,n1,n2\n";
    for (const auto& w : wfs)
        csv << w.ellipse << "," << fmt_num(w.cov.x.x) << "," << fmt_num(w.cov.x.y) << "," << fmt_num(w.cov.unit_dir.x)
            << "," << fmt_num(w.cov.unit_dir.y) << "\n";
    run.text("_wavefront.csv", csv.str());
    double mass = 0.0, mx = 0.0;
    for (double v : img.values) {
        mass += v * img.spacing * img.spacing;
        mx = std::max(mx, v);
    }
    return {{"ellipses", specs.size()}, {"mass", mass}, {"max", mx}, {"wavefront_samples", wfs.size()}};
}

Json cmd_forward(const Json& o, Run& run) {
    const auto& cfg = run.config();
    const ImageGrid f = run.input_image("image");
    if (f.nx != cfg.grid.n) throw ConfigError("image size does not match the config grid");
    const auto form = opt_or<std::string>(o, "form", "levelset");
    PhasePtr pf = build_phase(cfg);
    Json res;
    Sinogram g;
    if (form == "levelset") {
        const SinogramSpec spec = build_sinogram_spec(cfg, *pf);
        ForwardReport rep;
        g = forward_levelset(pf, build_weight(cfg), f, spec, &rep);
        res["trace"] = forward_report_json(rep);
    } else if (form == "lagrangian") {
        if (cfg.phase != "dynamic") throw ConfigError("the lagrangian form needs the dynamic phase");
        GeometryConfig c2 = cfg;
        c2.weight.lagrangian = false;
        const SinogramSpec spec = build_sinogram_spec(cfg, *pf);
        g = forward_lagrangian(*build_motion(cfg), *build_weight(c2), f, spec, phase_domain(cfg).xmax);
    } else if (form == "rays") {
        if (cfg.phase != "fanbeam") throw ConfigError("the rays form needs the fanbeam phase");
        const SinogramSpec spec = build_sinogram_spec(cfg, *pf);
        FanSpec fs;
        fs.source_radius = cfg.fan_radius;
        fs.n_gamma = cfg.ns;
        fs.nt = cfg.nt;
        fs.gamma_max = std::max(std::abs(spec.s_min), std::abs(spec.s_max));
        fs.t_range = cfg.t_range;
        g = forward_fan_rays(f, fs);
    } else {
        throw ConfigError("form must be levelset, lagrangian or rays");
    }
    Json meta{{"phase", cfg.phase}, {"form", form}};
    if (cfg.phase == "fanbeam") meta["fan_radius"] = cfg.fan_radius;
    run.sinogram("", g, meta);
    run.pgm(".pgm", g.values, g.ns, g.nt);
    res["form"] = form;
    res["ns"] = g.ns;
    res["nt"] = g.nt;
    res["s_window"] = {g.s_min, g.s_max};
    res["data_norm"] = sino_norm(g);
    return res;
}

Json cmd_adjoint_test(const Json& o, Run& run) {
    const auto& cfg = run.config();
    const auto pairs = opt_or<std::size_t>(o, "pairs", 10);
    PhasePtr pf = build_phase(cfg);
    WeightPtr mu = build_weight(cfg);
    const SinogramSpec spec = build_sinogram_spec(cfg, *pf);
    LevelSetProjector P(pf, mu, cfg.grid, spec);
    Backprojector B(pf, mu, cfg.grid, spec);
    Json list = Json::array();
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const ImageGrid f = band_limited_field(cfg.grid, 1.0, cfg.grid.n / 8.0, 0.95 * cfg.grid.support_radius,
                                               run.seed() + 2 * i);
        const Sinogram g = random_smooth_sinogram(spec, run.seed() + 2 * i + 1);
        const double d = duality_discrepancy(P, B, f, g);
        list.push_back(d);
        worst = std::max(worst, d);
    }
    return {{"pairs", pairs}, {"discrepancies", list}, {"discrepancy", worst}, {"threshold", 1e-3},
            {"pass", worst < 1e-3}, {"trace", forward_report_json(P.report())}};
}

Json cmd_check_bolker(const Json& o, Run& run) {
    const auto& cfg = run.config();
    PhasePtr pf = build_phase(cfg);
    const auto n = opt_or<std::size_t>(o, "samples", 1000);
    const double half = 0.9 * cfg.grid.support_radius / std::sqrt(2.0);
    const auto samples = random_phase_samples(*pf, n, run.seed(), half);
    std::mt19937_64 rng(run.seed() ^ 0x5157);
    std::uniform_real_distribution<double> us(0.5, 2.0);
    std::ostringstream csv;
    csv << "t,x1,x2,h,sigma,rank,det\n";
    double hmin = kInf, hmax = -kInf, det_err = 0.0;
    std::size_t rank4 = 0;
    for (const auto& s : samples) {
        const double h = bolker_determinant(*pf, s.t, s.x);
        const double sigma = (rng() & 1 ? 1.0 : -1.0) * us(rng);
        const auto r = dPiY_rank(*pf, s.t, s.x, sigma);
        hmin = std::min(hmin, h);
        hmax = std::max(hmax, h);
        const double ref = std::abs(sigma * h);
        if (ref > 1e-12) det_err = std::max(det_err, std::abs(std::abs(r.det) - ref) / ref);
        rank4 += r.rank == 4;
        csv << fmt_num(s.t) << "," << fmt_num(s.x.x) << "," << fmt_num(s.x.y) << "," << fmt_num(h) << ","
            << fmt_num(sigma) << "," << r.rank << "," << fmt_num(r.det) << "\n";
    }
    const auto p31 = prop31_equivalence_check(*pf, samples);
    // semi-global check at a few points
    Json sg = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(8, samples.size()); ++i) {
        const auto rep = semiglobal_bolker_check(*pf, samples[i].t, samples[i].x);
        sg.push_back({{"t", samples[i].t}, {"x", {samples[i].x.x, samples[i].x.y}}, {"witnesses", rep.witnesses.size()},
                      {"samples_used", rep.samples_used}});
    }
    // |h| heatmap at the first time sample
    const ImageGrid ref = ImageGrid::zeros(cfg.grid);
    std::vector<double> heat(ref.size(), 0.0);
    const double t0 = cfg.t_range.lo;
    for (std::size_t k = 0; k < ref.size(); ++k)
        if (pf->domain().contains_interior(ref.center(k), 2 * pf->fd_step_x()))
            heat[k] = std::abs(bolker_determinant(*pf, t0, ref.center(k)));
    run.text(".csv", csv.str());
    run.pgm("_h.pgm", heat, ref.nx, ref.ny);
    return {{"samples", n},
            {"h_min", hmin},
            {"h_max", hmax},
            {"rank4_fraction", static_cast<double>(rank4) / static_cast<double>(n)},
            {"det_vs_sigma_h_max_rel_err", det_err},
            {"prop31", {{"agreement_fraction", p31.agreement_fraction}, {"both_zero", p31.both_zero},
                        {"both_nonzero", p31.both_nonzero}, {"worst_discrepancy", p31.worst_discrepancy}}},
            {"semiglobal", sg}};
}

Json cmd_visibility(const Json& o, Run& run) {
    const auto& cfg = run.config();
    PhasePtr pf = build_phase(cfg);
    const Vec2 x{opt_or<double>(o, "x", 0.3), opt_or<double>(o, "y", 0.2)};
    const auto n_dirs = opt_or<std::size_t>(o, "dirs", 64);
    const auto vm = visibility_map(*pf, x, n_dirs, cfg.t_range);
    std::ostringstream csv;
    csv << "angle,d1,d2,count,t_witness\n";
    Json visible = Json::array();
    for (std::size_t i = 0; i < vm.directions.size(); ++i) {
        csv << fmt_num(kTwoPi * static_cast<double>(i) / static_cast<double>(n_dirs)) << ","
            << fmt_num(vm.directions[i].x) << "," << fmt_num(vm.directions[i].y) << "," << vm.count[i] << ",";
        for (std::size_t k = 0; k < vm.t_witness[i].size(); ++k) csv << (k ? ";" : "") << fmt_num(vm.t_witness[i][k]);
        csv << "\n";
        if (vm.count[i] > 0) visible.push_back({vm.directions[i].x, vm.directions[i].y});
    }
    run.text(".csv", csv.str());
    // wavefront audit of the default phantom
    const auto wfs = boundary_wavefront(default_phantom(), 64);
    const auto audit = visibility_audit(*pf, wfs, cfg.t_range);
    // number of visible directions (of 16) per pixel on a coarse lattice
    const std::size_t m = 32;
    std::vector<double> heat(m * m, 0.0);
    const double r = cfg.grid.support_radius * 0.95;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 p{-r + 2 * r * (i + 0.5) / m, -r + 2 * r * (j + 0.5) / m};
            const auto v = visibility_map(*pf, p, 16, cfg.t_range);
            for (auto c : v.count) heat[j * m + i] += c > 0;
        }
    run.pgm("_counts.pgm", heat, m, m);
    return {{"x", {x.x, x.y}},
            {"directions", n_dirs},
            {"visible_directions", visible},
            {"visible_count", visible.size()},
            {"phantom_visible_fraction", audit.visible_fraction}};
}

Json symbol_json(const SymbolValue& s) {
    return {{"x", {s.x.x, s.x.y}}, {"xi", {s.xi.x, s.xi.y}},   {"t_used", s.t_used}, {"W_plus", s.W_plus},
            {"W_minus", s.W_minus}, {"h_tilde", s.h_tilde}, {"chi_x", s.chi_x},   {"p", s.p},
            {"visible", s.visible}};
}

Json cmd_symbol(const Json& o, Run& run) {
    const auto& cfg = run.config();
    PhasePtr pf = build_phase(cfg);
    WeightPtr mu = build_weight(cfg);
    CoverageReport cov;
    const CutoffAtlas atlas = build_atlas(cfg, *pf, &cov);
    const Vec2 x{opt_or<double>(o, "x", 0.1), opt_or<double>(o, "y", 0.2)};
    const Vec2 xi{opt_or<double>(o, "xi1", 3.0), opt_or<double>(o, "xi2", 4.0)};
    const SymbolValue p1 = principal_symbol(*pf, *mu, atlas, x, xi);
    const SymbolValue p2 = principal_symbol(*pf, *mu, atlas, x, 2.0 * xi);
    const double hom = p1.p != 0 ? std::abs(2.0 * p2.p - p1.p) / std::abs(p1.p) : 0.0;
    Json res{{"symbol", symbol_json(p1)}, {"homogeneity_rel_err", hom}, {"coverage", coverage_json(cov)}};
    if (opt_or<bool>(o, "order_probe", false)) {
        const auto rep = symbol_order_probe(cfg.grid.n, std::min<std::size_t>(cfg.nt, 720), 0.03);
        std::ostringstream csv;
        csv << "k,ratio\n";
        for (std::size_t i = 0; i < rep.k.size(); ++i) csv << fmt_num(rep.k[i]) << "," << fmt_num(rep.ratio[i]) << "\n";
        run.text("_order.csv", csv.str());
        res["order_slope"] = rep.slope;
    }
    run.json(".json", res);
    return res;
}

Json cmd_normal(const Json& o, Run& run) {
    const auto& cfg = run.config();
    const ImageGrid f = run.input_image("image");
    PhasePtr pf = build_phase(cfg);
    CoverageReport cov;
    const CutoffAtlas atlas = build_atlas(cfg, *pf, &cov);
    const bool symmetric = opt_or<bool>(o, "symmetric", true);
    NormalOperator N(pf, build_weight(cfg), cfg.grid, build_sinogram_spec(cfg, *pf), atlas, symmetric);
    const ImageGrid nf = N.apply(f);
    run.image("", nf);
    run.pgm(".pgm", nf.values, nf.nx, nf.ny);
    return {{"symmetric", symmetric}, {"charts", atlas.size()}, {"input_norm", image_norm(f)},
            {"output_norm", image_norm(nf)}, {"output_h1", h1_norm(nf)}, {"coverage", coverage_json(cov)},
            {"trace", forward_report_json(N.projector().report())}};
}

Json cmd_reconstruct(const Json& o, Run& run) {
    const auto& cfg = run.config();
    const Sinogram g = run.input_sinogram("data");
    PhasePtr pf = build_phase(cfg);
    CoverageReport cov;
    const CutoffAtlas atlas = build_atlas(cfg, *pf, &cov);
    const SinogramSpec want = build_sinogram_spec(cfg, *pf);
    if (g.ns != want.ns || g.nt != want.nt || std::abs(g.s_min - want.s_min) > 1e-12 ||
        std::abs(g.s_max - want.s_max) > 1e-12)
        throw ConfigError("data grid does not match the geometry's sinogram grid");
    NormalOperator N(pf, build_weight(cfg), cfg.grid, g.spec(), atlas, true);
    SolveOptions so;
    so.max_iter = opt_or<std::size_t>(o, "iters", 50);
    so.tol = opt_or<double>(o, "tol", 1e-6);
    so.tikhonov = opt_or<double>(o, "tikhonov", 0.0);
    ImageGrid truth;
    if (o.contains("truth") && !o.at("truth").is_null()) {
        truth = run.input_image("truth");
        so.truth = &truth;
        so.truth_radius = opt_or<double>(o, "truth_radius", 0.9 * cfg.grid.support_radius);
    }
    const auto method = opt_or<std::string>(o, "method", "cg");
    std::pair<ImageGrid, SolveReport> out;
    if (method == "cg")
        out = cg_normal_solve(N, g, so);
    else if (method == "landweber")
        out = landweber_solve(N, g, so);
    else
        throw ConfigError("method must be cg or landweber");
    const auto& [f, rep] = out;
    run.image("", f);
    run.pgm(".pgm", f.values, f.nx, f.ny);
    std::ostringstream csv;
    csv << "iteration,relative_residual\n";
    for (std::size_t k = 0; k < rep.residual_history.size(); ++k) csv << k << "," << fmt_num(rep.residual_history[k]) << "\n";
    run.text("_residuals.csv", csv.str());
    Json res{{"method", rep.method},
             {"iterations", rep.iterations},
             {"converged", rep.converged},
             {"final_residual", rep.residual_history.back()},
             {"data_residual", rep.data_residual},
             {"charts", atlas.size()},
             {"trace", forward_report_json(N.projector().report())}};
    if (so.truth) res["rel_error_vs_truth"] = rep.rel_error_vs_truth;
    return res;
}

Json cmd_stability(const Json& o, Run& run) {
    StabilityOptions so;
    so.family = opt_or<std::string>(o, "family", "breathing");
    so.amplitudes = opt_list(o, "amplitudes", {0.0, 0.02, 0.05});
    so.n_samples = opt_or<std::size_t>(o, "samples", 50);
    so.grid.n = opt_or<std::size_t>(o, "n", 64);
    so.ns = opt_or<std::size_t>(o, "ns", 96);
    so.nt = opt_or<std::size_t>(o, "nt", 180);
    so.seed = run.seed();
    const auto r = stability_probe(so);
    Json per = Json::array();
    std::ostringstream csv;
    csv << "amplitude,sample,ratio\n";
    for (std::size_t i = 0; i < r.amplitudes.size(); ++i) {
        per.push_back({{"amplitude", r.amplitudes[i]}, {"min_ratio", r.min_ratio[i]}, {"max_ratio", r.max_ratio[i]},
                       {"median_ratio", r.median_ratio[i]}, {"worst_case_ratio", r.worst_case_ratio[i]},
                       {"flagged", static_cast<bool>(r.flagged[i])}});
        for (std::size_t k = 0; k < r.ratios[i].size(); ++k)
            csv << fmt_num(r.amplitudes[i]) << "," << k << "," << fmt_num(r.ratios[i][k]) << "\n";
    }
    Json res{{"family", r.family}, {"seed", r.seed}, {"static_median", r.static_median}, {"amplitudes", per}};
    run.text(".csv", csv.str());
    run.json(".json", res);
    return res;
}

Json cmd_perturb(const Json& o, Run& run) {
    PerturbationOptions po;
    po.family = opt_or<std::string>(o, "family", "breathing");
    po.base_amplitude = opt_or<double>(o, "base", 0.0);
    po.deltas = opt_list(o, "deltas", {1e-3, 3e-3, 1e-2, 3e-2});
    po.grid.n = opt_or<std::size_t>(o, "n", 64);
    po.ns = opt_or<std::size_t>(o, "ns", 96);
    po.nt = opt_or<std::size_t>(o, "nt", 180);
    const ImageGrid f = band_limited_field(po.grid, 1.0, po.grid.n / 8.0, 0.8, run.seed());
    const auto r = perturbation_sweep(po, f);
    std::ostringstream csv;
    csv << "delta,ratio\n";
    for (std::size_t i = 0; i < r.deltas.size(); ++i) csv << fmt_num(r.deltas[i]) << "," << fmt_num(r.ratios[i]) << "\n";
    Json res{{"family", po.family}, {"base", po.base_amplitude}, {"deltas", r.deltas},
             {"ratios", r.ratios},  {"slope", r.slope},           {"monotone", r.monotone}};
    run.text(".csv", csv.str());
    run.json(".json", res);
    return res;
}

Json cmd_fanbeam_convert(const Json& o, Run& run) {
    GridFileInfo info;
    const Sinogram fan = run.input_sinogram("data", &info);
    double R = opt_or<double>(o, "radius", 0.0);
    if (!(R > 0)) R = info.extra.value("fan_radius", 0.0);
    if (!(R > 0)) throw ConfigError("fan source radius unknown: pass radius or use data written for a fanbeam geometry");
    SinogramSpec ps;
    ps.ns = opt_or<std::size_t>(o, "ns", fan.ns);
    ps.nt = opt_or<std::size_t>(o, "nt", fan.nt);
    const double s_max = opt_or<double>(o, "s_max", R * std::sin(std::min(std::abs(fan.s_min), std::abs(fan.s_max))));
    ps.s_min = -s_max;
    ps.s_max = s_max;
    ps.t_range = fan.t_range;
    RebinReport rep;
    const Sinogram par = fanbeam_convert(fan, R, ps, &rep);
    run.sinogram("", par, Json{{"rebinned_from_fan_radius", R}});
    run.pgm(".pgm", par.values, par.ns, par.nt);
    return {{"source_radius", R},        {"ns", ps.ns},
            {"nt", ps.nt},               {"s_window", {ps.s_min, ps.s_max}},
            {"out_of_range", rep.out_of_range}, {"jacobian_min", rep.jacobian_min},
            {"jacobian_max", rep.jacobian_max}, {"jacobian", "R cos(gamma), recorded only; samples are not reweighted"}};
}

}  // namespace

int exit_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::Io:
            return 2;
        case ErrorCode::Coverage:
        case ErrorCode::OutOfRange:
            return 4;
        default:
            return 3;
    }
}

Json run_pipeline(const std::string& command, const Json& options) {
    if (!commands().count(command)) throw ConfigError("unknown command '" + command + "'");
    if (!options.is_object()) throw ConfigError("options must be a JSON object");
    Run run(command, options);
    Json results;
    if (command == "phantom") results = cmd_phantom(options, run);
    else if (command == "forward") results = cmd_forward(options, run);
    else if (command == "adjoint-test") results = cmd_adjoint_test(options, run);
    else if (command == "check-bolker") results = cmd_check_bolker(options, run);
    else if (command == "visibility") results = cmd_visibility(options, run);
    else if (command == "symbol") results = cmd_symbol(options, run);
    else if (command == "normal") results = cmd_normal(options, run);
    else if (command == "reconstruct") results = cmd_reconstruct(options, run);
    else if (command == "stability") results = cmd_stability(options, run);
    else if (command == "perturb-sweep") results = cmd_perturb(options, run);
    else results = cmd_fanbeam_convert(options, run);
    return run.finish(results);
}

}  // namespace curvetomo
