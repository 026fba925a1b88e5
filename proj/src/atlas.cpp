#include "atlas.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "microlocal.hpp"

namespace curvetomo {

double cutoff_taper(double u) {
    if (u <= 0.5) return 1.0;
    if (u >= 1.0) return 0.0;
    const double v = (u - 0.5) / 0.5;
    return 1.0 - (v - std::sin(kTwoPi * v) / kTwoPi);
}

CutoffAtlas CutoffAtlas::trivial(TimeRange t_range) { return CutoffAtlas({Chart{}}, t_range); }

bool CutoffAtlas::is_trivial() const {
    return charts_.size() == 1 && charts_[0].x_radius == kInf && charts_[0].s_radius == kInf &&
           charts_[0].t_radius == kInf;
}

double CutoffAtlas::chi_x(std::size_t i, Vec2 x) const {
    const Chart& c = charts_.at(i);
    if (c.x_radius == kInf) return 1.0;
    return cutoff_taper(norm(x - c.x_center) / c.x_radius);
}

double CutoffAtlas::chi_y(std::size_t i, double s, double t) const {
    const Chart& c = charts_.at(i);
    double v = 1.0;
    if (c.s_radius != kInf) v *= cutoff_taper(std::abs(s - c.s_center) / c.s_radius);
    if (c.t_radius != kInf) {
        double d = t - c.t_center;
        if (t_range_.periodic) d = std::remainder(d, t_range_.length());
        v *= cutoff_taper(std::abs(d) / c.t_radius);
    }
    return v;
}

double CutoffAtlas::sum_chi_x(Vec2 x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < charts_.size(); ++i) acc += chi_x(i, x);
    return acc;
}

std::string CoverageReport::describe() const {
    std::ostringstream os;
    os << "coverage check on " << points_checked << " points x " << directions_checked << " directions";
    if (!invisible_directions.empty()) {
        os << "; invisible directions (deg):";
        for (double a : invisible_directions) os << " " << a * 180.0 / kPi;
    }
    if (!uncovered_points.empty()) {
        os << "; uncovered points:";
        for (const auto& p : uncovered_points) os << " (" << p.x << "," << p.y << ")";
    }
    return os.str();
}

CutoffAtlas build_default_atlas(const PhaseFunction& pf, const CompactSet& K, std::size_t n_charts,
                                bool require_coverage, CoverageReport* report) {
    if (n_charts < 1) throw ConfigError("atlas needs at least one chart");
    const TimeRange tr = pf.t_range();
    CutoffAtlas atlas;
    if (n_charts == 1) {
        atlas = CutoffAtlas::trivial(tr);
    } else {
        const double d = 2.0 * K.radius / static_cast<double>(n_charts - 1);
        std::vector<Chart> charts;
        for (std::size_t j = 0; j < n_charts; ++j)
            for (std::size_t i = 0; i < n_charts; ++i) {
                Chart c;
                c.x_center = K.center + Vec2{-K.radius + d * static_cast<double>(i), -K.radius + d * static_cast<double>(j)};
                c.x_radius = d;
                // s window: range of phi over the chart support for all t, radius doubled so
                // that chi_Y = 1 wherever the chart's curves can land
                double lo = kInf, hi = -kInf;
                const int nt = 64, nr = 6, na = 16;
                for (int it = 0; it < nt; ++it) {
                    const double t = tr.lo + tr.length() * it / (tr.periodic ? nt : nt - 1);
                    for (int ir = 0; ir <= nr; ++ir)
                        for (int ia = 0; ia < na; ++ia) {
                            const Vec2 p = c.x_center + (d * ir / nr) * unit_from_angle(kTwoPi * ia / na);
                            if (!pf.domain().contains(p)) continue;
                            const double s = pf.value(t, p) - pf.level_offset(t);
                            lo = std::min(lo, s);
                            hi = std::max(hi, s);
                        }
                }
                c.s_center = 0.5 * (lo + hi);
                c.s_radius = std::max(hi - lo, 1e-12);
                charts.push_back(c);
            }
        atlas = CutoffAtlas(std::move(charts), tr);
    }

    CoverageReport rep;
    rep.min_sum_chi = kInf;
    rep.max_sum_chi = 0.0;
    std::set<long> invisible_idx;
    const int n_lat = 7, n_dirs = 16;
    rep.directions_checked = n_dirs;
    for (int j = 0; j < n_lat; ++j)
        for (int i = 0; i < n_lat; ++i) {
            const Vec2 x = K.center + K.radius * Vec2{-1.0 + 2.0 * i / (n_lat - 1), -1.0 + 2.0 * j / (n_lat - 1)};
            if (norm(x - K.center) > K.radius * (1 + 1e-12)) continue;
            ++rep.points_checked;
            const double sc = atlas.sum_chi_x(x);
            rep.min_sum_chi = std::min(rep.min_sum_chi, sc);
            rep.max_sum_chi = std::max(rep.max_sum_chi, sc);
            if (sc < 0.5) rep.uncovered_points.push_back(x);
            for (int k = 0; k < n_dirs; ++k) {
                const Vec2 dir = unit_from_angle(kTwoPi * k / n_dirs);
                const auto roots = solve_time_for_direction(pf, x, dir, tr);
                bool seen = false;
                for (const auto& r : roots) {
                    const double s = pf.value(r.t, x) - pf.level_offset(r.t);
                    for (std::size_t c = 0; c < atlas.size() && !seen; ++c)
                        if (atlas.chi_x(c, x) > 0 && atlas.chi_y(c, s, r.t) > 0) seen = true;
                    if (seen) break;
                }
                if (!seen) invisible_idx.insert(k);
            }
        }
    for (long k : invisible_idx) rep.invisible_directions.push_back(kTwoPi * static_cast<double>(k) / n_dirs);
    if (report) *report = rep;
    if (require_coverage && !rep.covered()) throw CoverageError("atlas does not cover K: " + rep.describe());
    return atlas;
}

}  // namespace curvetomo
