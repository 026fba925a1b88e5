#include "microlocal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "parallel.hpp"

namespace curvetomo {

double bolker_determinant(const PhaseFunction& pf, double t, Vec2 x) { return frame_at(pf, t, x).h; }

std::vector<PhaseSamplePoint> random_phase_samples(const PhaseFunction& pf, std::size_t n, std::uint64_t seed,
                                                   double half_width) {
    std::mt19937_64 rng(seed);
    const TimeRange& tr = pf.t_range();
    std::uniform_real_distribution<double> ut(tr.lo, tr.hi);
    std::uniform_real_distribution<double> ux(-half_width, half_width);
    std::vector<PhaseSamplePoint> out(n);
    for (auto& p : out) {
        p.t = ut(rng);
        p.x.x = ux(rng);
        p.x.y = ux(rng);
    }
    return out;
}

bool normalized_det_is_zero(Vec2 c1, Vec2 c2, double* normalized) {
    const double scale = std::max(dot(c1, c1), dot(c2, c2));
    const double v = scale > 0 ? std::abs(cross(c1, c2)) / scale : 0.0;
    if (normalized) *normalized = v;
    return v < 1e-8;
}

Prop31Report prop31_equivalence_check(const PhaseFunction& pf, const std::vector<PhaseSamplePoint>& samples) {
    Prop31Report rep;
    rep.samples = samples.size();
    for (const auto& sp : samples) {
        const LevelCurveFrame f = frame_at(pf, sp.t, sp.x);
        const HomogeneousExtension e = homogeneous_extension(pf, unit_from_angle(sp.t), sp.x, sp.t);
        double nh = 0, ne = 0;
        const bool zh = normalized_det_is_zero(f.g, f.m, &nh);
        // columns of the mixed Hessian (index j of x)
        const Vec2 c1{e.mixed_hessian.a11, e.mixed_hessian.a21};
        const Vec2 c2{e.mixed_hessian.a12, e.mixed_hessian.a22};
        const bool ze = normalized_det_is_zero(c1, c2, &ne);
        if (zh == ze) {
            ++rep.agreements;
            if (zh) ++rep.both_zero; else ++rep.both_nonzero;
        }
        rep.worst_discrepancy = std::max(rep.worst_discrepancy, std::abs(nh - ne));
    }
    rep.agreement_fraction = rep.samples ? static_cast<double>(rep.agreements) / static_cast<double>(rep.samples) : 1.0;
    return rep;
}

namespace {

constexpr double kNearZero = 1e-10;

struct Residual {
    const PhaseFunction& pf;
    Vec2 x;
    Vec2 u;
    Vec2 u_perp;

    double operator()(double t) const {
        const Vec2 g = pf.grad_x(t, x);
        return dot(g, u_perp) / norm(g);
    }
    double derivative(double t) const {
        const Vec2 g = pf.grad_x(t, x);
        const Vec2 m = pf.dt_grad_x(t, x);
        const double J = norm(g);
        const Vec2 nu = g / J;
        const Vec2 dnu = (m - nu * dot(nu, m)) / J;
        return dot(dnu, u_perp);
    }
    int orientation(double t) const { return dot(pf.grad_x(t, x), u) >= 0 ? 1 : -1; }
};

double refine_root(const Residual& r, double a, double b, double ra) {
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double rm = r(m);
        if (rm == 0.0) return m;
        if ((rm > 0) == (ra > 0)) {
            a = m;
            ra = rm;
        } else {
            b = m;
        }
    }
    double t = 0.5 * (a + b);
    for (int it = 0; it < 5; ++it) {
        const double v = r(t);
        if (std::abs(v) < kNearZero) break;
        const double d = r.derivative(t);
        if (d == 0.0) break;
        const double tn = t - v / d;
        if (tn < a || tn > b) break;
        t = tn;
    }
    return t;
}

}  // namespace

std::vector<DirectionRoot> solve_time_for_direction(const PhaseFunction& pf, Vec2 x, Vec2 xi,
                                                    const TimeRange& t_range, std::size_t n_scan) {
    const double xn = norm(xi);
    if (!(xn > 0)) throw ConfigError("direction solve needs xi != 0");
    if (n_scan < 8) n_scan = 8;
    const Vec2 u = xi / xn;
    Residual res{pf, x, u, perp(u)};
    const double L = t_range.length();
    const double dt = L / static_cast<double>(n_scan);
    const bool periodic = t_range.periodic;
    const std::size_t n_pts = periodic ? n_scan : n_scan + 1;
    std::vector<double> ts(n_pts), rs(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) {
        ts[k] = t_range.lo + dt * static_cast<double>(k);
        rs[k] = res(ts[k]);
    }
    std::vector<bool> zero(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) zero[k] = std::abs(rs[k]) < kNearZero;

    std::vector<DirectionRoot> roots;
    // near-zero runs
    std::vector<std::pair<std::size_t, std::size_t>> runs;  // [first, last], indices may wrap
    for (std::size_t k = 0; k < n_pts;) {
        if (!zero[k]) { ++k; continue; }
        std::size_t e = k;
        while (e + 1 < n_pts && zero[e + 1]) ++e;
        runs.push_back({k, e});
        k = e + 1;
    }
    if (periodic && runs.size() > 1 && runs.front().first == 0 && runs.back().second == n_pts - 1) {
        runs.front().first = runs.back().first;
        runs.pop_back();
    }
    for (const auto& [a, b] : runs) {
        const std::size_t len = b >= a ? b - a + 1 : (n_pts - a) + b + 1;
        double t;
        if (len == n_pts) {
            t = t_range.lo + 0.5 * L;
        } else {
            const double ta = ts[a];
            double tb = ts[b];
            if (b < a) tb += L;
            t = 0.5 * (ta + tb);
            if (periodic && t >= t_range.hi) t -= L;
        }
        roots.push_back({t, res.orientation(t), len > 1});
    }
    // sign changes between clean samples
    const std::size_t n_int = periodic ? n_pts : n_pts - 1;
    for (std::size_t k = 0; k < n_int; ++k) {
        const std::size_t k2 = (k + 1) % n_pts;
        if (zero[k] || zero[k2]) continue;
        if ((rs[k] > 0) == (rs[k2] > 0)) continue;
        const double a = ts[k];
        const double b = (k2 == 0) ? t_range.hi : ts[k2];
        double t = refine_root(res, a, b, rs[k]);
        if (periodic && t >= t_range.hi) t -= L;
        roots.push_back({t, res.orientation(t), false});
    }
    std::sort(roots.begin(), roots.end(), [](const DirectionRoot& p, const DirectionRoot& q) { return p.t < q.t; });
    return roots;
}

VisibilityMap visibility_map(const PhaseFunction& pf, Vec2 x, std::size_t n_dirs, const TimeRange& t_range) {
    if (n_dirs < 8) throw ConfigError("visibility map needs at least 8 directions");
    VisibilityMap vm;
    vm.x = x;
    vm.directions.resize(n_dirs);
    vm.count.resize(n_dirs);
    vm.t_witness.resize(n_dirs);
    parallel_for(n_dirs, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Vec2 d = unit_from_angle(kTwoPi * static_cast<double>(k) / static_cast<double>(n_dirs));
            vm.directions[k] = d;
            const auto roots = solve_time_for_direction(pf, x, d, t_range);
            vm.count[k] = roots.size();
            for (const auto& r : roots) vm.t_witness[k].push_back(r.t);
        }
    });
    return vm;
}

SemiGlobalReport semiglobal_bolker_check(const PhaseFunction& pf, double t, Vec2 x, std::size_t n_curve_samples) {
    if (n_curve_samples < 8) n_curve_samples = 8;
    const Rect d = pf.domain();
    const double step = d.diameter() / 2048.0;
    const double margin = std::max(2 * step, 2 * pf.fd_step_x());
    TraceRegion region;
    region.rect = {d.xmin + margin, d.xmax - margin, d.ymin + margin, d.ymax - margin};
    const double s = pf.value(t, x);
    const LevelCurve c = trace_level_curve(pf, s, t, x, step, region);
    const double total = c.arc_lengths.back() + (c.closed ? norm(c.points.front() - c.points.back()) : 0.0);

    auto point_at = [&](double a) {
        auto it = std::upper_bound(c.arc_lengths.begin(), c.arc_lengths.end(), a);
        if (it == c.arc_lengths.end()) {
            if (!c.closed) return c.points.back();
            const double seg = total - c.arc_lengths.back();
            const double w = seg > 0 ? (a - c.arc_lengths.back()) / seg : 0.0;
            return c.points.back() + w * (c.points.front() - c.points.back());
        }
        const std::size_t i = static_cast<std::size_t>(it - c.arc_lengths.begin());
        if (i == 0) return c.points.front();
        const double w = (a - c.arc_lengths[i - 1]) / (c.arc_lengths[i] - c.arc_lengths[i - 1]);
        return c.points[i - 1] + w * (c.points[i] - c.points[i - 1]);
    };

    const double dtx = pf.dt(t, x);
    const double base_scale = norm(pf.grad_x(t, x)) * d.diameter();
    SemiGlobalReport rep;
    std::size_t n = n_curve_samples;
    const std::size_t n_cap = 8 * n_curve_samples;
    for (;;) {
        std::vector<Vec2> ys(n);
        std::vector<double> dts(n);
        double max_dt = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = c.closed ? total * static_cast<double>(k) / static_cast<double>(n)
                                      : total * static_cast<double>(k) / static_cast<double>(n - 1);
            ys[k] = point_at(a);
            dts[k] = pf.dt(t, ys[k]);
            max_dt = std::max(max_dt, std::abs(dts[k]));
        }
        rep.sg_tol = 1e-6 * std::max(max_dt, base_scale);
        double min_delta = kInf;
        for (std::size_t k = 1; k < n; ++k) min_delta = std::min(min_delta, std::abs(dts[k] - dts[k - 1]));
        const double spacing = total / static_cast<double>(n);
        rep.witnesses.clear();
        for (std::size_t k = 0; k < n; ++k) {
            if (norm(ys[k] - x) < 2.0 * spacing) continue;
            if (std::abs(dtx - dts[k]) < rep.sg_tol) rep.witnesses.push_back(ys[k]);
        }
        rep.samples_used = n;
        if (min_delta < 10 * rep.sg_tol && 2 * n <= n_cap && rep.witnesses.size() < n / 2) {
            n *= 2;
            continue;
        }
        break;
    }
    return rep;
}

CanonicalPoint canonical_point(const PhaseFunction& pf, double t, Vec2 x, double sigma) {
    if (sigma == 0.0) throw ConfigError("canonical point needs sigma != 0");
    const LevelCurveFrame f = frame_at(pf, t, x);
    return {f.s, t, sigma, -sigma * f.dt_phi, x, sigma * f.g};
}

PiYRank dPiY_rank(const PhaseFunction& pf, double t, Vec2 x, double sigma) {
    if (sigma == 0.0) throw ConfigError("dPiY needs sigma != 0");
    const LevelCurveFrame f = frame_at(pf, t, x);
    const double ptt = pf.dtt(t, x);
    Eigen::Matrix4d M;
    M << f.dt_phi, f.g.x, f.g.y, 0.0,
         1.0, 0.0, 0.0, 0.0,
         0.0, 0.0, 0.0, 1.0,
         -sigma * ptt, -sigma * f.m.x, -sigma * f.m.y, f.dt_phi;
    PiYRank out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out.matrix[static_cast<std::size_t>(4 * i + j)] = M(i, j);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(M);
    const auto sv = svd.singularValues();
    const double cut = 1e-10 * sv(0);
    for (int i = 0; i < 4; ++i)
        if (sv(i) > cut) ++out.rank;
    out.det = M.determinant();
    return out;
}

SymbolValue principal_symbol(const PhaseFunction& pf, const Weight& mu, const CutoffAtlas& atlas, Vec2 x,
                             Vec2 xi) {
    SymbolValue out;
    out.x = x;
    out.xi = xi;
    const double xin = norm(xi);
    if (!(xin > 0)) throw ConfigError("symbol needs xi != 0");
    const auto roots = solve_time_for_direction(pf, x, xi, pf.t_range());
    out.chi_x = atlas.sum_chi_x(x);
    if (roots.empty()) return out;
    out.visible = true;

    struct Term {
        double weight;  // sum over charts of chi_iX chi_iY mu^2 J^2
        double abs_h_tilde;
        int orientation;
    };
    std::vector<Term> terms;
    for (const auto& r : roots) {
        const LevelCurveFrame f = frame_at(pf, r.t, x);
        const double sigma = xin / f.J;
        const double h_tilde = sigma * f.h;
        if (std::abs(h_tilde) < 1e-12 * xin)
            throw DegenerateSymbolError("local Bolker condition fails at t=" + std::to_string(r.t) +
                                        " for this covector (h_tilde=" + std::to_string(h_tilde) + ")");
        const double m = mu(r.t, x);
        const double base = m * m * f.J * f.J;
        const double s = f.s - pf.level_offset(r.t);
        double w = 0.0;
        for (std::size_t i = 0; i < atlas.size(); ++i) w += atlas.chi_x(i, x) * atlas.chi_y(i, s, r.t);
        terms.push_back({w * base, std::abs(h_tilde), r.orientation});
        out.t_used.push_back(r.t);
        if (out.h_tilde == 0.0) out.h_tilde = h_tilde;
    }
    double total = 0.0;
    for (const auto& tm : terms) total += tm.weight / tm.abs_h_tilde;
    out.p = total / kTwoPi;
    if (out.chi_x > 0) {
        const double ref = std::abs(out.h_tilde);
        for (const auto& tm : terms) {
            const double w = tm.weight * ref / tm.abs_h_tilde / out.chi_x;
            if (tm.orientation > 0) out.W_plus += w; else out.W_minus += w;
        }
    }
    return out;
}

VisibilityAudit visibility_audit(const PhaseFunction& pf, const std::vector<WavefrontSample>& wfs,
                                 const TimeRange& t_range) {
    VisibilityAudit a;
    a.visible.resize(wfs.size());
    a.witness_times.resize(wfs.size());
    std::vector<std::uint8_t> flags(wfs.size(), 0);
    parallel_for(wfs.size(), 16, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const auto roots = solve_time_for_direction(pf, wfs[k].cov.x, wfs[k].cov.xi, t_range);
            flags[k] = roots.empty() ? 0 : 1;
            for (const auto& r : roots) a.witness_times[k].push_back(r.t);
        }
    });
    std::size_t n_vis = 0;
    for (std::size_t k = 0; k < wfs.size(); ++k) {
        a.visible[k] = flags[k] != 0;
        n_vis += flags[k];
    }
    a.visible_fraction = wfs.empty() ? 0.0 : static_cast<double>(n_vis) / static_cast<double>(wfs.size());
    return a;
}

}  // namespace curvetomo
