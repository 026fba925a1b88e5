#include "operators.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace curvetomo {

SinogramSpec default_sinogram_spec(const PhaseFunction& pf, const GridSpec& grid, std::size_t ns, std::size_t nt,
                                   TimeRange t_range) {
    const double rho = grid.support_radius;
    double lo = kInf, hi = -kInf;
    const int n_t = 96, n_rings = 4, n_ang = 64;
    for (int it = 0; it < n_t; ++it) {
        const double t = t_range.lo + t_range.length() * it / (t_range.periodic ? n_t : n_t - 1);
        const double off = pf.level_offset(t);
        for (int r = 0; r <= n_rings; ++r)
            for (int a = 0; a < n_ang; ++a) {
                const Vec2 p = (rho * r / n_rings) * unit_from_angle(kTwoPi * a / n_ang);
                if (!pf.domain().contains(p)) continue;
                const double s = pf.value(t, p) - off;
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
    }
    if (!(hi > lo)) throw ConfigError("phase is constant over the support; no sinogram window");
    const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * 1.05;
    SinogramSpec spec;
    spec.ns = ns;
    spec.nt = nt;
    spec.s_min = c - half;
    spec.s_max = c + half;
    spec.t_range = t_range;
    return spec;
}

// ---------------------------------------------------------------------------
// LevelSetProjector
// ---------------------------------------------------------------------------

namespace {

/// Vertex buckets for the curve-membership test used to deduplicate seeds.
class SegmentIndex {
public:
    SegmentIndex(Rect box, double cell) : box_(box), cell_(cell) {
        nx_ = static_cast<long>(std::ceil((box.xmax - box.xmin) / cell)) + 1;
        ny_ = static_cast<long>(std::ceil((box.ymax - box.ymin) / cell)) + 1;
        head_.assign(static_cast<std::size_t>(nx_ * ny_), -1);
    }

    void reset() {
        for (long c : touched_) head_[static_cast<std::size_t>(c)] = -1;
        touched_.clear();
        pts_.clear();
        next_.clear();
        poly_first_.clear();
        poly_last_.clear();
        poly_closed_.clear();
        vertex_poly_.clear();
    }

    void add_polyline(const std::vector<Vec2>& pts, bool closed) {
        const int id = static_cast<int>(poly_first_.size());
        poly_first_.push_back(static_cast<int>(pts_.size()));
        poly_last_.push_back(static_cast<int>(pts_.size() + pts.size()) - 1);
        poly_closed_.push_back(closed);
        for (const Vec2& p : pts) {
            const int k = static_cast<int>(pts_.size());
            pts_.push_back(p);
            vertex_poly_.push_back(id);
            const long c = cell_of(p);
            next_.push_back(c >= 0 ? head_[static_cast<std::size_t>(c)] : -1);
            if (c >= 0) {
                if (head_[static_cast<std::size_t>(c)] == -1) touched_.push_back(c);
                head_[static_cast<std::size_t>(c)] = k;
            }
        }
    }

    bool near(Vec2 p, double radius) const {
        if (pts_.empty()) return false;
        const long cx = static_cast<long>(std::floor((p.x - box_.xmin) / cell_));
        const long cy = static_cast<long>(std::floor((p.y - box_.ymin) / cell_));
        const double r2 = radius * radius;
        for (long j = cy - 1; j <= cy + 1; ++j) {
            if (j < 0 || j >= ny_) continue;
            for (long i = cx - 1; i <= cx + 1; ++i) {
                if (i < 0 || i >= nx_) continue;
                for (int k = head_[static_cast<std::size_t>(j * nx_ + i)]; k != -1; k = next_[static_cast<std::size_t>(k)]) {
                    const Vec2 a = pts_[static_cast<std::size_t>(k)];
                    const Vec2 d = p - a;
                    if (dot(d, d) < r2) return true;
                    const int poly = vertex_poly_[static_cast<std::size_t>(k)];
                    int nb = k + 1;
                    if (nb > poly_last_[static_cast<std::size_t>(poly)])
                        nb = poly_closed_[static_cast<std::size_t>(poly)] ? poly_first_[static_cast<std::size_t>(poly)] : -1;
                    if (nb >= 0 && nb != k && seg_dist2(p, a, pts_[static_cast<std::size_t>(nb)]) < r2) return true;
                }
            }
        }
        return false;
    }

private:
    static double seg_dist2(Vec2 p, Vec2 a, Vec2 b) {
        const Vec2 ab = b - a;
        const double l2 = dot(ab, ab);
        double w = l2 > 0 ? dot(p - a, ab) / l2 : 0.0;
        w = std::clamp(w, 0.0, 1.0);
        const Vec2 d = p - (a + w * ab);
        return dot(d, d);
    }
    long cell_of(Vec2 p) const {
        const long i = static_cast<long>(std::floor((p.x - box_.xmin) / cell_));
        const long j = static_cast<long>(std::floor((p.y - box_.ymin) / cell_));
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
        return j * nx_ + i;
    }

    Rect box_;
    double cell_;
    long nx_ = 0, ny_ = 0;
    std::vector<int> head_;
    std::vector<long> touched_;
    std::vector<Vec2> pts_;
    std::vector<int> next_;
    std::vector<int> poly_first_, poly_last_;
    std::vector<bool> poly_closed_;
    std::vector<int> vertex_poly_;
};

struct TimeSlice {
    std::vector<std::uint32_t> row_count;
    std::vector<float> x, y, w;
    std::vector<std::uint8_t> nan;
    std::size_t curves = 0, closed = 0;
};

}  // namespace

LevelSetProjector::LevelSetProjector(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino,
                                     const TraceOptions& opt)
    : pf_(std::move(pf)), mu_(std::move(mu)), grid_(grid), sino_(sino) {
    if (!pf_ || !mu_) throw ConfigError("projector needs a phase function and a weight");
    (void)Sinogram::zeros({sino.ns, 2, sino.s_min, sino.s_max, sino.t_range});  // validates the spec
    if (sino.nt < 2) throw ConfigError("sinogram needs nt >= 2");
    build(opt);
}

void LevelSetProjector::build(const TraceOptions& opt) {
    const ImageGrid ref = ImageGrid::zeros(grid_);
    const double h = ref.spacing;
    step_ = opt.step_factor * h;
    const double rho = grid_.support_radius;
    const double r_acc = rho + 1.5 * h;
    const double r_trace = rho + 2.0 * h + step_;
    const Rect dom = pf_->domain();
    const Rect rect_trace{dom.xmin + step_, dom.xmax - step_, dom.ymin + step_, dom.ymax - step_};
    const Rect rect_acc{dom.xmin + 3 * step_, dom.xmax - 3 * step_, dom.ymin + 3 * step_, dom.ymax - 3 * step_};
    TraceRegion region;
    region.rect = rect_trace;
    region.disk_radius = r_trace;
    TraceRegion accept;
    accept.rect = rect_acc;
    accept.disk_radius = r_acc;

    const Rect box{std::max(-r_acc, rect_acc.xmin), std::min(r_acc, rect_acc.xmax), std::max(-r_acc, rect_acc.ymin),
                   std::min(r_acc, rect_acc.ymax)};
    const Rect bucket_box{std::max(-r_trace, rect_trace.xmin), std::min(r_trace, rect_trace.xmax),
                          std::max(-r_trace, rect_trace.ymin), std::min(r_trace, rect_trace.ymax)};
    const std::size_t G = std::max<std::size_t>(3, opt.seed_grid);
    const double cx = (box.xmax - box.xmin) / static_cast<double>(G - 1);
    const double cy = (box.ymax - box.ymin) / static_cast<double>(G - 1);

    const Sinogram layout = Sinogram::zeros(sino_);
    const std::size_t ns = sino_.ns, nt = sino_.nt;
    const double ds = layout.ds();
    std::vector<TimeSlice> slices(nt);

    parallel_for(nt, 1, [&](std::size_t jb, std::size_t je) {
        SegmentIndex index(bucket_box, 4.0 * step_);
        std::vector<double> vals(G * G);
        std::vector<Vec2> poly;
        for (std::size_t jt = jb; jt < je; ++jt) {
            TimeSlice& sl = slices[jt];
            sl.row_count.assign(ns, 0);
            sl.nan.assign(ns, 0);
            const double t = layout.t_at(jt);
            const double off = pf_->level_offset(t);
            auto node = [&](std::size_t i, std::size_t j) {
                return Vec2{box.xmin + cx * static_cast<double>(i), box.ymin + cy * static_cast<double>(j)};
            };
            for (std::size_t j = 0; j < G; ++j)
                for (std::size_t i = 0; i < G; ++i) {
                    double v;
                    try {
                        v = pf_->value(t, node(i, j)) - off;
                    } catch (const Error&) {
                        v = std::numeric_limits<double>::quiet_NaN();
                    }
                    vals[j * G + i] = v;
                }
            // candidate seeds from sign changes along lattice edges, in scan order
            struct Cand {
                std::uint32_t row;
                Vec2 p;
            };
            std::vector<Cand> cands;
            auto edge = [&](std::size_t ia, std::size_t ja, std::size_t ib, std::size_t jb2) {
                const double va = vals[ja * G + ia], vb = vals[jb2 * G + ib];
                if (!std::isfinite(va) || !std::isfinite(vb) || va == vb) return;
                const double lo = std::min(va, vb), hi = std::max(va, vb);
                long i0 = static_cast<long>(std::ceil((lo - sino_.s_min) / ds));
                long i1 = static_cast<long>(std::floor((hi - sino_.s_min) / ds));
                i0 = std::max(i0, 0L);
                i1 = std::min(i1, static_cast<long>(ns) - 1);
                const Vec2 a = node(ia, ja), b = node(ib, jb2);
                for (long i = i0; i <= i1; ++i) {
                    const double s = sino_.s_min + ds * static_cast<double>(i);
                    const double w = (s - va) / (vb - va);
                    const Vec2 p = a + w * (b - a);
                    if (accept.contains(p)) cands.push_back({static_cast<std::uint32_t>(i), p});
                }
            };
            for (std::size_t j = 0; j < G; ++j)
                for (std::size_t i = 0; i + 1 < G; ++i) edge(i, j, i + 1, j);
            for (std::size_t j = 0; j + 1 < G; ++j)
                for (std::size_t i = 0; i < G; ++i) edge(i, j, i, j + 1);
            std::stable_sort(cands.begin(), cands.end(), [](const Cand& p, const Cand& q) { return p.row < q.row; });

            std::size_t c0 = 0;
            while (c0 < cands.size()) {
                const std::uint32_t row = cands[c0].row;
                std::size_t c1 = c0;
                while (c1 < cands.size() && cands[c1].row == row) ++c1;
                const double s = sino_.s_min + ds * static_cast<double>(row) + off;
                index.reset();
                std::uint32_t count = 0;
                for (std::size_t c = c0; c < c1; ++c) {
                    if (index.near(cands[c].p, 0.25 * step_)) continue;
                    Vec2 x = cands[c].p;
                    if (!project_to_level(*pf_, s, t, x, 20)) continue;
                    if (!accept.contains(x) || index.near(x, 0.25 * step_)) continue;
                    bool closed = false;
                    if (!trace_polyline(*pf_, s, t, x, step_, region, poly, closed)) {
                        sl.nan[row] = 1;
                        break;
                    }
                    index.add_polyline(poly, closed);
                    ++sl.curves;
                    if (closed) ++sl.closed;
                    const std::size_t n = poly.size();
                    for (std::size_t k = 0; k < n; ++k) {
                        double left = k > 0 ? norm(poly[k] - poly[k - 1]) : 0.0;
                        double right = k + 1 < n ? norm(poly[k + 1] - poly[k]) : 0.0;
                        if (closed && n > 1) {
                            if (k == 0) left = norm(poly[0] - poly[n - 1]);
                            if (k + 1 == n) right = norm(poly[0] - poly[n - 1]);
                        }
                        const double w = (*mu_)(t, poly[k]) * 0.5 * (left + right);
                        sl.x.push_back(static_cast<float>(poly[k].x));
                        sl.y.push_back(static_cast<float>(poly[k].y));
                        sl.w.push_back(static_cast<float>(w));
                        ++count;
                    }
                }
                if (sl.nan[row]) {
                    // drop this row's partial vertices
                    sl.x.resize(sl.x.size() - count);
                    sl.y.resize(sl.y.size() - count);
                    sl.w.resize(sl.w.size() - count);
                    count = 0;
                }
                sl.row_count[row] = count;
                c0 = c1;
            }
        }
    });

    std::size_t total = 0;
    for (const auto& sl : slices) total += sl.x.size();
    row_offsets_.assign(ns * nt + 1, 0);
    px_.reserve(total);
    py_.reserve(total);
    w_.reserve(total);
    nan_row_.assign(ns * nt, 0);
    report_ = {};
    report_.rows = ns * nt;
    std::size_t r = 0;
    for (std::size_t jt = 0; jt < nt; ++jt) {
        TimeSlice& sl = slices[jt];
        std::size_t pos = 0;
        for (std::size_t is = 0; is < ns; ++is, ++r) {
            row_offsets_[r + 1] = row_offsets_[r] + sl.row_count[is];
            nan_row_[r] = sl.nan[is];
            report_.nan_rows += sl.nan[is];
            pos += sl.row_count[is];
        }
        (void)pos;
        px_.insert(px_.end(), sl.x.begin(), sl.x.end());
        py_.insert(py_.end(), sl.y.begin(), sl.y.end());
        w_.insert(w_.end(), sl.w.begin(), sl.w.end());
        report_.curves += sl.curves;
        report_.closed_curves += sl.closed;
        sl = TimeSlice{};
    }
    report_.vertices = total;
    if (static_cast<double>(report_.nan_rows) > opt.nan_budget * static_cast<double>(report_.rows))
        throw NumericError("level-curve tracing failed on " + std::to_string(report_.nan_rows) + " of " +
                           std::to_string(report_.rows) + " sinogram rows (budget " +
                           std::to_string(opt.nan_budget * 100) + "%)");
}

Sinogram LevelSetProjector::apply(const ImageGrid& f) const {
    if (f.nx != grid_.n || f.ny != grid_.n) throw ConfigError("image does not match the projector grid");
    Sinogram g = Sinogram::zeros(sino_);
    parallel_for(g.values.size(), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            if (nan_row_[r]) {
                g.values[r] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double acc = 0.0;
            for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
                acc += static_cast<double>(w_[k]) * f.bilinear({px_[k], py_[k]});
            g.values[r] = acc;
        }
    });
    return g;
}

Sinogram LevelSetProjector::apply(const std::function<double(Vec2)>& density) const {
    Sinogram g = Sinogram::zeros(sino_);
    parallel_for(g.values.size(), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            if (nan_row_[r]) {
                g.values[r] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double acc = 0.0;
            for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
                acc += static_cast<double>(w_[k]) * density({px_[k], py_[k]});
            g.values[r] = acc;
        }
    });
    return g;
}

// ---------------------------------------------------------------------------
// Backprojector
// ---------------------------------------------------------------------------

Backprojector::Backprojector(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino)
    : pf_(std::move(pf)), mu_(std::move(mu)), grid_(grid), sino_(sino) {
    if (!pf_ || !mu_) throw ConfigError("backprojector needs a phase function and a weight");
    const ImageGrid ref = ImageGrid::zeros(grid_);
    const Sinogram layout = Sinogram::zeros(sino_);
    if (static_cast<double>(sino_.ns) * static_cast<double>(sino_.nt) > 4.0e9)
        throw ConfigError("sinogram too large for 32-bit indexing");
    for (std::size_t k = 0; k < ref.size(); ++k)
        if (ref.in_support(ref.center(k))) pixels_.push_back(static_cast<std::uint32_t>(k));
    const std::size_t nt = sino_.nt, ns = sino_.ns;
    const double ds = layout.ds();
    entries_.assign(pixels_.size() * nt, Entry{0, 0.0f, 0.0f});
    std::vector<double> tw(nt), tv(nt), toff(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        tw[j] = layout.t_weight(j);
        tv[j] = layout.t_at(j);
        toff[j] = pf_->level_offset(tv[j]);
    }
    parallel_for(pixels_.size(), 64, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            const Vec2 x = ref.center(pixels_[p]);
            for (std::size_t j = 0; j < nt; ++j) {
                const PhaseSample ps = pf_->sample(tv[j], x);
                const double f = (ps.value - toff[j] - sino_.s_min) / ds;
                if (!(f >= 0.0 && f <= static_cast<double>(ns - 1))) continue;
                std::size_t i = static_cast<std::size_t>(f);
                if (i >= ns - 1) i = ns - 2;
                const double w = tw[j] * (*mu_)(tv[j], x) * norm(ps.grad);
                entries_[p * nt + j] = {static_cast<std::uint32_t>(j * ns + i), static_cast<float>(f - static_cast<double>(i)),
                                        static_cast<float>(w)};
            }
        }
    });
}

ImageGrid Backprojector::apply(const Sinogram& g) const {
    if (g.ns != sino_.ns || g.nt != sino_.nt) throw ConfigError("sinogram does not match the backprojector");
    ImageGrid img = ImageGrid::zeros(grid_);
    const std::size_t nt = sino_.nt;
    parallel_for(pixels_.size(), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            double acc = 0.0;
            const Entry* en = entries_.data() + p * nt;
            for (std::size_t j = 0; j < nt; ++j) {
                if (en[j].weight == 0.0f) continue;
                const double a = en[j].frac;
                acc += static_cast<double>(en[j].weight) *
                       ((1.0 - a) * g.values[en[j].index] + a * g.values[en[j].index + 1]);
            }
            img.values[pixels_[p]] = acc;
        }
    });
    return img;
}

Sinogram forward_levelset(PhasePtr pf, WeightPtr mu, const ImageGrid& f, const SinogramSpec& sino,
                          ForwardReport* report) {
    LevelSetProjector P(std::move(pf), std::move(mu), f.spec(), sino);
    if (report) *report = P.report();
    return P.apply(f);
}

ImageGrid adjoint(PhasePtr pf, WeightPtr mu, const Sinogram& g, const GridSpec& grid) {
    Backprojector B(std::move(pf), std::move(mu), grid, g.spec());
    return B.apply(g);
}

// ---------------------------------------------------------------------------
// Lagrangian and fan-beam forwards
// ---------------------------------------------------------------------------

Sinogram forward_lagrangian(const MotionModel& motion, const Weight& mu_material, const ImageGrid& f,
                            const SinogramSpec& sino, double domain_half_width) {
    Sinogram g = Sinogram::zeros(sino);
    const double h = f.spacing;
    const double delta = 0.5 * h;
    const double rho = std::min(f.support_radius, domain_half_width) + 2.0 * h;
    const Rect padded = Rect::centered_square(domain_half_width);
    // radius of the material disk that maps onto the support at each t
    std::vector<double> rz(sino.nt);
    for (std::size_t j = 0; j < sino.nt; ++j) {
        const double t = g.t_at(j);
        double r = 0.0;
        for (int a = 0; a < 256; ++a) r = std::max(r, norm(motion.inverse(t, rho * unit_from_angle(kTwoPi * a / 256.0))));
        rz[j] = 1.02 * r + h;
    }
    parallel_for(g.values.size(), 64, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            const std::size_t jt = r / g.ns, is = r % g.ns;
            const double t = g.t_at(jt), s = g.s_at(is);
            const Vec2 w = unit_from_angle(t), wp = perp(w);
            const double R = rz[jt];
            if (std::abs(s) >= R) {
                g.values[r] = 0.0;
                continue;
            }
            const double U = std::sqrt(R * R - s * s);
            const long n = static_cast<long>(std::ceil(U / delta));
            double acc = 0.0;
            for (long k = -n; k <= n; ++k) {
                const Vec2 z = s * w + (delta * static_cast<double>(k)) * wp;
                const Vec2 x = motion.forward(t, z);
                if (!padded.contains(x))
                    throw DomainError("motion maps a line sample outside the padded grid");
                acc += mu_material(t, z) * f.bilinear(x);
            }
            g.values[r] = acc * delta;
        }
    });
    return g;
}

Sinogram forward_fan_rays(const ImageGrid& f, const FanSpec& spec) {
    if (!(spec.gamma_max > 0 && spec.gamma_max < kPi / 2)) throw ConfigError("fan gamma_max must lie in (0, pi/2)");
    Sinogram g = Sinogram::zeros({spec.n_gamma, spec.nt, -spec.gamma_max, spec.gamma_max, spec.t_range});
    const double delta = 0.5 * f.spacing;
    const double rho = f.support_radius + 2.0 * f.spacing;
    parallel_for(g.values.size(), 64, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            const std::size_t jt = r / g.ns, ig = r % g.ns;
            const double t = g.t_at(jt), gamma = g.s_at(ig);
            const Vec2 S = spec.source_radius * unit_from_angle(t);
            const Vec2 d = unit_from_angle(t + kPi + gamma);
            // |S + lambda d|^2 = rho^2
            const double bq = dot(S, d), cq = dot(S, S) - rho * rho;
            const double disc = bq * bq - cq;
            if (disc <= 0) {
                g.values[r] = 0.0;
                continue;
            }
            const double sq = std::sqrt(disc);
            const double l0 = -bq - sq, l1 = -bq + sq;
            const long n = static_cast<long>(std::ceil((l1 - l0) / delta));
            const double dl = (l1 - l0) / static_cast<double>(n);
            double acc = 0.0;
            for (long k = 0; k < n; ++k) acc += f.bilinear(S + (l0 + dl * (static_cast<double>(k) + 0.5)) * d);
            g.values[r] = acc * dl;
        }
    });
    return g;
}

Sinogram fanbeam_convert(const Sinogram& fan, double source_radius, const SinogramSpec& parallel, RebinReport* report) {
    Sinogram out = Sinogram::zeros(parallel);
    const double L = fan.t_range.length();
    const double dtf = fan.t_range.periodic ? L / static_cast<double>(fan.nt) : L / static_cast<double>(fan.nt - 1);
    std::vector<std::uint8_t> miss(out.values.size(), 0);
    double jmin = kInf, jmax = 0.0;
    for (std::size_t i = 0; i < out.ns; ++i) {
        const double s = out.s_at(i);
        if (std::abs(s) < source_radius) {
            const double jac = source_radius * std::cos(std::asin(s / source_radius));
            jmin = std::min(jmin, jac);
            jmax = std::max(jmax, jac);
        }
    }
    parallel_for(out.values.size(), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            const std::size_t jb = r / out.ns, is = r % out.ns;
            const double s = out.s_at(is), beta = out.t_at(jb);
            auto fail = [&] {
                out.values[r] = std::numeric_limits<double>::quiet_NaN();
                miss[r] = 1;
            };
            if (!(std::abs(s) < source_radius)) { fail(); continue; }
            const double gamma = std::asin(s / source_radius);
            double t = beta - gamma + kPi / 2;
            const double fg = (gamma - fan.s_min) / fan.ds();
            if (!(fg >= 0.0 && fg <= static_cast<double>(fan.ns - 1))) { fail(); continue; }
            double ft;
            if (fan.t_range.periodic) {
                t = fan.t_range.lo + std::fmod(std::fmod(t - fan.t_range.lo, L) + L, L);
                ft = (t - fan.t_range.lo) / dtf;
            } else {
                ft = (t - fan.t_range.lo) / dtf;
                if (!(ft >= 0.0 && ft <= static_cast<double>(fan.nt - 1))) { fail(); continue; }
            }
            std::size_t ig = static_cast<std::size_t>(fg);
            if (ig >= fan.ns - 1) ig = fan.ns - 2;
            const double ag = fg - static_cast<double>(ig);
            std::size_t it0 = static_cast<std::size_t>(ft);
            double at = ft - static_cast<double>(it0);
            std::size_t it1;
            if (fan.t_range.periodic) {
                it0 %= fan.nt;
                it1 = (it0 + 1) % fan.nt;
            } else {
                if (it0 >= fan.nt - 1) { it0 = fan.nt - 2; at = ft - static_cast<double>(it0); }
                it1 = it0 + 1;
            }
            auto v = [&](std::size_t ti, std::size_t gi) { return fan.values[ti * fan.ns + gi]; };
            out.values[r] = (1 - at) * ((1 - ag) * v(it0, ig) + ag * v(it0, ig + 1)) +
                            at * ((1 - ag) * v(it1, ig) + ag * v(it1, ig + 1));
        }
    });
    if (report) {
        report->out_of_range = 0;
        for (auto m : miss) report->out_of_range += m;
        report->jacobian_min = jmin;
        report->jacobian_max = jmax;
    }
    return out;
}

// ---------------------------------------------------------------------------
// NormalOperator
// ---------------------------------------------------------------------------

NormalOperator::NormalOperator(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino,
                               CutoffAtlas atlas, bool symmetric, const TraceOptions& opt)
    : proj_(pf, mu, grid, sino, opt), back_(pf, mu, grid, sino), atlas_(std::move(atlas)), symmetric_(symmetric),
      grid_(grid) {
    if (atlas_.size() == 0) throw ConfigError("normal operator needs a non-empty atlas");
}

ImageGrid NormalOperator::chi_x(std::size_t i, bool root) const {
    ImageGrid c = ImageGrid::zeros(grid_);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double v = atlas_.chi_x(i, c.center(k));
        c.values[k] = root ? std::sqrt(v) : v;
    }
    return c;
}

Sinogram NormalOperator::chi_y(std::size_t i) const {
    Sinogram c = Sinogram::zeros(proj_.sinogram_spec());
    for (std::size_t j = 0; j < c.nt; ++j) {
        const double t = c.t_at(j);
        for (std::size_t is = 0; is < c.ns; ++is) c.at(is, j) = atlas_.chi_y(i, c.s_at(is), t);
    }
    return c;
}

namespace {
void scale_in_place(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
}
void add_in_place(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
}
}  // namespace

ImageGrid NormalOperator::apply(const ImageGrid& f) const {
    if (atlas_.is_trivial()) return back_.apply(proj_.apply(f));
    ImageGrid out = ImageGrid::zeros(grid_);
    Sinogram shared;
    if (!symmetric_) shared = proj_.apply(f);
    for (std::size_t i = 0; i < atlas_.size(); ++i) {
        Sinogram g;
        if (symmetric_) {
            ImageGrid fi = f;
            scale_in_place(fi.values, chi_x(i, true).values);
            g = proj_.apply(fi);
        } else {
            g = shared;
        }
        scale_in_place(g.values, chi_y(i).values);
        ImageGrid bi = back_.apply(g);
        scale_in_place(bi.values, chi_x(i, symmetric_).values);
        add_in_place(out.values, bi.values);
    }
    return out;
}

ImageGrid NormalOperator::rhs(const Sinogram& g) const {
    if (atlas_.is_trivial()) return back_.apply(g);
    ImageGrid out = ImageGrid::zeros(grid_);
    for (std::size_t i = 0; i < atlas_.size(); ++i) {
        Sinogram gi = g;
        scale_in_place(gi.values, chi_y(i).values);
        ImageGrid bi = back_.apply(gi);
        scale_in_place(bi.values, chi_x(i, symmetric_).values);
        add_in_place(out.values, bi.values);
    }
    return out;
}

}  // namespace curvetomo

namespace curvetomo {

double duality_discrepancy(const LevelSetProjector& P, const Backprojector& B, const ImageGrid& f, const Sinogram& g) {
    const Sinogram af = P.apply(f);
    const double lhs = sino_dot(af, g);
    const double rhs = image_dot(f, B.apply(g));
    const double denom = sino_norm(af) * sino_norm(g);
    if (!(denom > 0)) throw NumericError("duality test with a vanishing operand");
    return std::abs(lhs - rhs) / denom;
}

}  // namespace curvetomo
