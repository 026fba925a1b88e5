#include "recon.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "parallel.hpp"
#include "spectral.hpp"

namespace curvetomo {

namespace {

void axpy(double a, const ImageGrid& x, ImageGrid& y) {
    for (std::size_t k = 0; k < y.size(); ++k) y.values[k] += a * x.values[k];
}

ImageGrid apply_shifted(const NormalOperator& N, const ImageGrid& f, double lambda) {
    ImageGrid out = N.apply(f);
    if (lambda != 0.0) axpy(lambda, f, out);
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void finish_report(const NormalOperator& N, const Sinogram& g, const ImageGrid& f, const SolveOptions& opt,
                   SolveReport& rep, std::chrono::steady_clock::time_point t0) {
    if (opt.truth) rep.rel_error_vs_truth = relative_l2_error(f, *opt.truth, opt.truth_radius);
    const double gn = sino_norm(g);
    if (gn > 0) {
        Sinogram r = N.forward(f);
        for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] -= g.values[k];
        rep.data_residual = sino_norm(r) / gn;
    } else {
        rep.data_residual = 0.0;
    }
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::pair<ImageGrid, SolveReport> cg_normal_solve(const NormalOperator& N, const Sinogram& g, const SolveOptions& opt) {
    if (!N.symmetric() && !N.atlas().is_trivial())
        throw ConfigError("conjugate-gradient solve needs the symmetric localization");
    if (opt.tikhonov < 0) throw ConfigError("tikhonov weight must be non-negative");
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.method = "cg";
    const ImageGrid b = N.rhs(g);
    ImageGrid x = b.zeros_like();
    const double bn = image_norm(b);
    rep.residual_history.push_back(bn > 0 ? 1.0 : 0.0);
    if (!(bn > 0)) {
        rep.converged = true;
        finish_report(N, g, x, opt, rep, t0);
        return {x, rep};
    }
    ImageGrid r = b;
    ImageGrid Ar = apply_shifted(N, r, opt.tikhonov);
    ImageGrid p = r, Ap = Ar;
    double rAr = image_dot(r, Ar);
    int increases = 0;
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        const double ApAp = image_dot(Ap, Ap);
        if (!(ApAp > 0) || !std::isfinite(rAr)) break;
        const double alpha = rAr / ApAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        const double rel = image_norm(r) / bn;
        if (!std::isfinite(rel)) throw NumericError("non-finite residual in the normal-equation solve");
        if (rel > rep.residual_history.back()) {
            if (++increases >= 5) throw DivergenceError("residual increased for 5 consecutive iterations");
        } else {
            increases = 0;
        }
        rep.residual_history.push_back(rel);
        rep.iterations = it + 1;
        if (rel < opt.tol) {
            rep.converged = true;
            break;
        }
        Ar = apply_shifted(N, r, opt.tikhonov);
        const double rAr_new = image_dot(r, Ar);
        const double beta = rAr_new / rAr;
        rAr = rAr_new;
        for (std::size_t k = 0; k < p.size(); ++k) {
            p.values[k] = r.values[k] + beta * p.values[k];
            Ap.values[k] = Ar.values[k] + beta * Ap.values[k];
        }
    }
    finish_report(N, g, x, opt, rep, t0);
    return {x, rep};
}

std::pair<ImageGrid, SolveReport> cg_normal_solve(PhasePtr pf, WeightPtr mu, const CutoffAtlas& atlas,
                                                  const Sinogram& g, const GridSpec& grid, const SolveOptions& opt) {
    NormalOperator N(std::move(pf), std::move(mu), grid, g.spec(), atlas, true);
    return cg_normal_solve(N, g, opt);
}

std::pair<ImageGrid, SolveReport> landweber_solve(const NormalOperator& N, const Sinogram& g, const SolveOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.method = "landweber";
    const ImageGrid b = N.rhs(g);
    ImageGrid x = b.zeros_like();
    const double bn = image_norm(b);
    rep.residual_history.push_back(bn > 0 ? 1.0 : 0.0);
    if (!(bn > 0)) {
        rep.converged = true;
        finish_report(N, g, x, opt, rep, t0);
        return {x, rep};
    }
    // spectral bound by a short power iteration
    ImageGrid v = b;
    double lmax = 0.0;
    for (int k = 0; k < 12; ++k) {
        const double vn = image_norm(v);
        for (auto& e : v.values) e /= vn;
        ImageGrid w = apply_shifted(N, v, opt.tikhonov);
        lmax = image_norm(w);
        v = std::move(w);
    }
    const double omega = 1.0 / (1.1 * lmax);
    ImageGrid r = b;
    int increases = 0;
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        axpy(omega, r, x);
        r = apply_shifted(N, x, opt.tikhonov);
        for (std::size_t k = 0; k < r.size(); ++k) r.values[k] = b.values[k] - r.values[k];
        const double rel = image_norm(r) / bn;
        if (rel > rep.residual_history.back()) {
            if (++increases >= 5) throw DivergenceError("residual increased for 5 consecutive iterations");
        } else {
            increases = 0;
        }
        rep.residual_history.push_back(rel);
        rep.iterations = it + 1;
        if (rel < opt.tol) {
            rep.converged = true;
            break;
        }
    }
    finish_report(N, g, x, opt, rep, t0);
    return {x, rep};
}

double h1_norm(const ImageGrid& img) {
    const std::size_t nx = img.nx, ny = img.ny;
    const double h = img.spacing;
    const double grad2 = chunked_sum(img.size(), [&](std::size_t k) {
        const std::size_t ix = k % nx, iy = k / nx;
        const double v = img.values[k];
        const double right = ix + 1 < nx ? img.values[k + 1] : 0.0;
        const double up = iy + 1 < ny ? img.values[k + nx] : 0.0;
        const double dx = (right - v) / h, dy = (up - v) / h;
        return dx * dx + dy * dy;
    });
    const double l2 = image_norm(img);
    return std::sqrt(l2 * l2 + h * h * grad2);
}

PhasePtr family_phase(const std::string& family, double amplitude, TimeRange t_range) {
    const Rect dom = Rect::centered_square(1.1);
    if (family == "static" || amplitude == 0.0) return make_static_phase(dom, t_range);
    if (family == "rotation") return make_dynamic_phase(make_rotation_motion(amplitude), dom, t_range);
    if (family == "breathing") return make_dynamic_phase(make_breathing_motion(amplitude), dom, t_range);
    if (family == "affine") return make_dynamic_phase(make_affine_motion(amplitude), dom, t_range);
    throw ConfigError("unknown motion family '" + family + "'");
}

namespace {

double h1_dot(const ImageGrid& a, const ImageGrid& b) {
    const std::size_t nx = a.nx, ny = a.ny;
    const double g = chunked_sum(a.size(), [&](std::size_t k) {
        const std::size_t ix = k % nx, iy = k / nx;
        const double ax = (ix + 1 < nx ? a.values[k + 1] : 0.0) - a.values[k];
        const double bx = (ix + 1 < nx ? b.values[k + 1] : 0.0) - b.values[k];
        const double ay = (iy + 1 < ny ? a.values[k + nx] : 0.0) - a.values[k];
        const double by = (iy + 1 < ny ? b.values[k + nx] : 0.0) - b.values[k];
        return ax * bx + ay * by;
    });
    return image_dot(a, b) + g;  // h^2 * (1/h^2) cancels in the gradient term
}

double k_dot(const ImageGrid& a, const ImageGrid& b, double radius) {
    const double r2 = radius * radius;
    return a.spacing * a.spacing * chunked_sum(a.size(), [&](std::size_t k) {
        const Vec2 c = a.center(k);
        return dot(c, c) <= r2 ? a.values[k] * b.values[k] : 0.0;
    });
}

/// Worst case of ||f||_{L2(K)} / ||N f||_{H1} over the Krylov space spanned by
/// f0, (P M N) f0, (P M N)^2 f0, ... where M tapers to K and P keeps the band.
/// Rayleigh-Ritz on the pencil (<N f_i, N f_j>_{H1}, <f_i, f_j>_{L2(K)}).
double krylov_worst_ratio(const NormalOperator& N, const ImageGrid& f0, const ImageGrid& mask, double k_lo,
                          double k_hi, double radius, std::size_t iters) {
    std::vector<ImageGrid> F, NF;
    ImageGrid f = f0;
    for (std::size_t j = 0; j < iters; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : F) axpy(-image_dot(f, q), q, f);
        const double fn = image_norm(f);
        if (!(fn > 1e-12)) break;
        for (auto& e : f.values) e /= fn;
        F.push_back(f);
        NF.push_back(N.apply(f));
        ImageGrid next = NF.back();
        for (std::size_t k = 0; k < next.size(); ++k) next.values[k] *= mask.values[k];
        f = band_project(next, k_lo, k_hi);
        for (std::size_t k = 0; k < f.size(); ++k) f.values[k] *= mask.values[k];
    }
    const auto m = static_cast<Eigen::Index>(F.size());
    Eigen::MatrixXd G(m, m), B(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            G(i, j) = G(j, i) = h1_dot(NF[static_cast<std::size_t>(i)], NF[static_cast<std::size_t>(j)]);
            B(i, j) = B(j, i) = k_dot(F[static_cast<std::size_t>(i)], F[static_cast<std::size_t>(j)], radius);
        }
    // drop the near-null directions of the K-restricted Gram matrix before solving the pencil
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(B);
    const double bmax = eb.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i)
        if (eb.eigenvalues()(i) > 1e-8 * bmax) keep.push_back(i);
    Eigen::MatrixXd W(m, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        W.col(static_cast<Eigen::Index>(c)) = eb.eigenvectors().col(keep[c]) / std::sqrt(eb.eigenvalues()(keep[c]));
    const Eigen::MatrixXd Gr = W.transpose() * G * W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(Gr);
    const double lmin = eg.eigenvalues()(0);
    return lmin > 0 ? 1.0 / std::sqrt(lmin) : std::numeric_limits<double>::infinity();
}

double k_norm(const ImageGrid& f, double radius) {
    ImageGrid g = f;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (norm(g.center(k)) > radius) g.values[k] = 0.0;
    return image_norm(g);
}

}  // namespace

StabilityReport stability_probe(const StabilityOptions& opt) {
    if (std::find(opt.amplitudes.begin(), opt.amplitudes.end(), 0.0) == opt.amplitudes.end())
        throw ConfigError("stability probe amplitudes must include 0 (static reference)");
    if (opt.n_samples == 0) throw ConfigError("stability probe needs at least one sample");
    StabilityReport rep;
    rep.family = opt.family;
    rep.seed = opt.seed;
    rep.amplitudes = opt.amplitudes;
    const double k_lo = 1.0, k_hi = static_cast<double>(opt.grid.n) / 8.0;
    std::vector<ImageGrid> fields;
    for (std::size_t i = 0; i < opt.n_samples; ++i)
        fields.push_back(band_limited_field(opt.grid, k_lo, k_hi, opt.k_radius, opt.seed + i));
    ImageGrid mask = ImageGrid::zeros(opt.grid);
    for (std::size_t k = 0; k < mask.size(); ++k) mask.values[k] = cutoff_taper(norm(mask.center(k)) / opt.k_radius);

    for (double a : opt.amplitudes) {
        PhasePtr pf = family_phase(opt.family, a);
        const SinogramSpec spec = default_sinogram_spec(*pf, opt.grid, opt.ns, opt.nt, pf->t_range());
        NormalOperator N(pf, make_constant_weight(), opt.grid, spec, CutoffAtlas::trivial(pf->t_range()), true);
        std::vector<double> r;
        for (const auto& f : fields) r.push_back(k_norm(f, opt.k_radius) / h1_norm(N.apply(f)));
        rep.worst_case_ratio.push_back(
            krylov_worst_ratio(N, fields.front(), mask, k_lo, k_hi, opt.k_radius, opt.krylov_dim));
        rep.min_ratio.push_back(*std::min_element(r.begin(), r.end()));
        rep.max_ratio.push_back(*std::max_element(r.begin(), r.end()));
        rep.median_ratio.push_back(median(r));
        rep.ratios.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < opt.amplitudes.size(); ++i)
        if (opt.amplitudes[i] == 0.0) rep.static_median = rep.median_ratio[i];
    for (std::size_t i = 0; i < opt.amplitudes.size(); ++i) {
        const double worst = std::max(rep.max_ratio[i], rep.worst_case_ratio[i]);
        rep.flagged.push_back(!std::isfinite(worst) || worst >= opt.blowup_factor * rep.static_median);
    }
    return rep;
}

PerturbationReport perturbation_sweep(const PerturbationOptions& opt, const ImageGrid& probe_f) {
    PerturbationReport rep;
    rep.deltas = opt.deltas;
    PhasePtr base = family_phase(opt.family, opt.base_amplitude);
    WeightPtr mu0 = make_constant_weight();
    const SinogramSpec spec = default_sinogram_spec(*base, opt.grid, opt.ns, opt.nt, base->t_range());
    const CutoffAtlas atlas = CutoffAtlas::trivial(base->t_range());
    const NormalOperator N0(base, mu0, opt.grid, spec, atlas, true);
    const ImageGrid n0 = N0.apply(probe_f);
    const double fn = image_norm(probe_f);
    for (double d : opt.deltas) {
        PhasePtr pf = family_phase(opt.family, opt.base_amplitude + opt.motion_scale * d);
        WeightPtr mu = std::make_shared<BumpWeight>(mu0, opt.weight_scale * d, Vec2{0.2, -0.1}, 0.3);
        const NormalOperator N1(pf, mu, opt.grid, spec, atlas, true);
        ImageGrid diff = N1.apply(probe_f);
        for (std::size_t k = 0; k < diff.size(); ++k) diff.values[k] -= n0.values[k];
        rep.ratios.push_back(h1_norm(diff) / fn);
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
        if (i > 0 && rep.ratios[i] < rep.ratios[i - 1]) rep.monotone = false;
        if (rep.deltas[i] > 0 && rep.ratios[i] > 0) {
            xs.push_back(rep.deltas[i]);
            ys.push_back(rep.ratios[i]);
        }
    }
    rep.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

double edge_response(const ImageGrid& recon, const ImageGrid& truth, const CovectorSample& cov) {
    const double h = recon.spacing;
    const Vec2 n = cov.unit_dir;
    const double lim = recon.origin.x + h * static_cast<double>(recon.nx - 1);
    auto grad = [&](const ImageGrid& f, Vec2 p) { return (f.bilinear(p + h * n) - f.bilinear(p - h * n)) / (2 * h); };
    double num = 0.0, den = 0.0;
    for (int k = -2; k <= 2; ++k) {
        const Vec2 p = cov.x + (h * k) * n;
        for (const Vec2 q : {p + h * n, p - h * n})
            if (q.x < recon.origin.x || q.y < recon.origin.y || q.x > lim || q.y > lim)
                throw DomainError("edge-response window leaves the grid");
        num += std::abs(grad(recon, p));
        den += std::abs(grad(truth, p));
    }
    if (!(den > 0)) throw NumericError("truth has no edge at the requested covector");
    return num / den;
}

SymbolOrderReport symbol_order_probe(std::size_t n, std::size_t nt, double sigma) {
    if (n < 32) throw ConfigError("symbol probe needs n >= 32");
    SymbolOrderReport rep;
    // curves only where the Gaussian lives; backprojection over the whole square
    const double reach = std::min(1.0, 8.0 * sigma);
    const GridSpec trace_grid{n, 1.0, reach};
    const GridSpec image_grid{n, 1.0, std::sqrt(2.0)};
    PhasePtr pf = make_static_phase(Rect::centered_square(1.1 * std::sqrt(2.0) + 0.05));
    WeightPtr mu = make_constant_weight();
    const double s_max = std::sqrt(2.0) + 0.05;
    const SinogramSpec spec{4 * n, nt, -s_max, s_max, TimeRange::full()};
    LevelSetProjector P(pf, mu, trace_grid, spec);
    Backprojector B(pf, mu, image_grid, spec);
    const auto gauss = [sigma](Vec2 p) { return std::exp(-dot(p, p) / (2 * sigma * sigma)); };
    const ImageGrid Nf = B.apply(P.apply(gauss));
    const ImageGrid f = gaussian_image(image_grid, sigma);
    const auto sn = radial_spectrum(Nf), sf = radial_spectrum(f);
    for (std::size_t k = 4; k <= n / 4; ++k) {
        rep.k.push_back(static_cast<double>(k));
        rep.ratio.push_back(sn[k] / sf[k]);
    }
    rep.slope = loglog_slope(rep.k, rep.ratio);
    return rep;
}

}  // namespace curvetomo
