#include "geometry.hpp"

#include <algorithm>
#include <sstream>

namespace curvetomo {

namespace {

double wrap_pi(double a) {
    a = std::remainder(a, kTwoPi);
    return a;
}

std::string point_str(Vec2 p) {
    std::ostringstream os;
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// MotionModel defaults
// ---------------------------------------------------------------------------

Mat2 MotionModel::jacobian(double t, Vec2 z) const {
    const double h = kFdStepX;
    const Vec2 dx = (forward(t, z + Vec2{h, 0}) - forward(t, z - Vec2{h, 0})) / (2 * h);
    const Vec2 dy = (forward(t, z + Vec2{0, h}) - forward(t, z - Vec2{0, h})) / (2 * h);
    return {dx.x, dy.x, dx.y, dy.y};
}

Mat2 MotionModel::inverse_jacobian(double t, Vec2 x) const {
    return jacobian(t, inverse(t, x)).inverse();
}

Vec2 MotionModel::dt_forward(double t, Vec2 z) const {
    return (forward(t + kFdStepT, z) - forward(t - kFdStepT, z)) / (2 * kFdStepT);
}

Vec2 MotionModel::dt_inverse(double t, Vec2 x) const {
    // differentiate psi_t(psi_t^{-1}(x)) = x in t
    const Vec2 z = inverse(t, x);
    return -(inverse_jacobian(t, x) * dt_forward(t, z));
}

Mat2 MotionModel::dt_inverse_jacobian(double t, Vec2 x) const {
    const Mat2 p = inverse_jacobian(t + kFdStepT, x);
    const Mat2 m = inverse_jacobian(t - kFdStepT, x);
    return (p - m) * (1.0 / (2 * kFdStepT));
}

// rotation

Vec2 RotationMotion::forward(double t, Vec2 z) const { return Mat2::rotation(rate_ * t) * z; }
Vec2 RotationMotion::inverse(double t, Vec2 x) const { return Mat2::rotation(-rate_ * t) * x; }
Vec2 RotationMotion::dt_forward(double t, Vec2 z) const { return rate_ * perp(forward(t, z)); }
Vec2 RotationMotion::dt_inverse(double t, Vec2 x) const { return -rate_ * perp(inverse(t, x)); }
Mat2 RotationMotion::dt_inverse_jacobian(double t, Vec2) const {
    return Mat2::rotation(kPi / 2) * Mat2::rotation(-rate_ * t) * (-rate_);
}

// affine

Mat2 AffineMotion::matrix(double t) const {
    return {1 + a_ * std::sin(t), 0.5 * a_ * std::sin(2 * t), 0.0, 1 - 0.5 * a_ * std::sin(t)};
}
Mat2 AffineMotion::matrix_dt(double t) const {
    return {a_ * std::cos(t), a_ * std::cos(2 * t), 0.0, -0.5 * a_ * std::cos(t)};
}
Vec2 AffineMotion::shift(double t) const { return 0.1 * a_ * Vec2{std::cos(t) - 1, std::sin(t)}; }
Vec2 AffineMotion::shift_dt(double t) const { return 0.1 * a_ * Vec2{-std::sin(t), std::cos(t)}; }

Vec2 AffineMotion::forward(double t, Vec2 z) const { return matrix(t) * z + shift(t); }
Vec2 AffineMotion::inverse(double t, Vec2 x) const { return matrix(t).inverse() * (x - shift(t)); }
Vec2 AffineMotion::dt_forward(double t, Vec2 z) const { return matrix_dt(t) * z + shift_dt(t); }
Vec2 AffineMotion::dt_inverse(double t, Vec2 x) const {
    const Mat2 ai = matrix(t).inverse();
    return -(ai * (matrix_dt(t) * (ai * (x - shift(t))) + shift_dt(t)));
}
Mat2 AffineMotion::dt_inverse_jacobian(double t, Vec2) const {
    const Mat2 ai = matrix(t).inverse();
    return (ai * matrix_dt(t) * ai) * -1.0;
}

// breathing

BreathingMotion::BreathingMotion(double amplitude, double taper_radius)
    : a_(amplitude), r0_(taper_radius) {
    if (!(taper_radius > 0)) throw ConfigError("breathing taper_radius must be positive");
    // 1 + c (eta + r eta') stays positive for |c| < 1 since eta + r eta' >= -0.75
    if (!(std::abs(amplitude) < 1.0)) throw ConfigError("breathing amplitude must satisfy |a| < 1");
}

double BreathingMotion::eta(double r) const {
    if (r >= r0_) return 0.0;
    const double u = 1 - (r * r) / (r0_ * r0_);
    return u * u * u;
}

double BreathingMotion::eta_prime(double r) const {
    if (r >= r0_) return 0.0;
    const double u = 1 - (r * r) / (r0_ * r0_);
    return -6.0 * r * u * u / (r0_ * r0_);
}

Vec2 BreathingMotion::forward(double t, Vec2 z) const {
    return (1 + a_ * std::sin(t) * eta(norm(z))) * z;
}

Vec2 BreathingMotion::inverse(double t, Vec2 x) const {
    const double rx = norm(x);
    if (rx >= r0_ || rx == 0.0) return x;
    const double c = a_ * std::sin(t);
    // radial map r -> r (1 + c eta(r)) is monotone; Newton from r = |x|
    double r = rx;
    for (int it = 0; it < 50; ++it) {
        const double f = r * (1 + c * eta(r)) - rx;
        const double df = 1 + c * (eta(r) + r * eta_prime(r));
        const double step = f / df;
        r -= step;
        r = std::clamp(r, 0.0, r0_);
        if (std::abs(step) < 1e-15 * std::max(1.0, rx)) break;
    }
    return (r / rx) * x;
}

Mat2 BreathingMotion::jacobian(double t, Vec2 z) const {
    const double r = norm(z);
    const double c = a_ * std::sin(t);
    if (r >= r0_) return Mat2::identity();
    const double u = 1 - (r * r) / (r0_ * r0_);
    const double ep_over_r = -6.0 * u * u / (r0_ * r0_);
    const double d = 1 + c * eta(r);
    const double k = c * ep_over_r;
    return {d + k * z.x * z.x, k * z.x * z.y, k * z.y * z.x, d + k * z.y * z.y};
}

Mat2 BreathingMotion::inverse_jacobian(double t, Vec2 x) const {
    return jacobian(t, inverse(t, x)).inverse();
}

Vec2 BreathingMotion::dt_forward(double t, Vec2 z) const {
    return (a_ * std::cos(t) * eta(norm(z))) * z;
}

Vec2 BreathingMotion::dt_inverse(double t, Vec2 x) const {
    const Vec2 z = inverse(t, x);
    return -(inverse_jacobian(t, x) * dt_forward(t, z));
}

MotionPtr make_identity_motion() { return std::make_shared<IdentityMotion>(); }
MotionPtr make_rotation_motion(double rate) { return std::make_shared<RotationMotion>(rate); }
MotionPtr make_affine_motion(double amplitude) {
    if (!(std::abs(amplitude) < 0.5)) throw ConfigError("affine amplitude must satisfy |a| < 0.5");
    return std::make_shared<AffineMotion>(amplitude);
}
MotionPtr make_breathing_motion(double amplitude, double taper_radius) {
    return std::make_shared<BreathingMotion>(amplitude, taper_radius);
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

ConstantWeight::ConstantWeight(double value) : value_(value) {
    if (!(value > 0) || !std::isfinite(value)) throw ConfigError("weight must be positive and finite");
}

BumpWeight::BumpWeight(WeightPtr base, double amplitude, Vec2 center, double width)
    : base_(std::move(base)), amplitude_(amplitude), center_(center), width_(width) {
    if (!(amplitude > -0.5)) throw ConfigError("bump amplitude must exceed -0.5 to keep the weight positive");
    if (!(width > 0)) throw ConfigError("bump width must be positive");
}

double BumpWeight::operator()(double t, Vec2 x) const {
    const Vec2 d = x - center_;
    const double g = std::exp(-dot(d, d) / (2 * width_ * width_));
    return (*base_)(t, x) * (1 + amplitude_ * g * (1 + 0.5 * std::sin(t)));
}

WeightPtr make_constant_weight(double value) { return std::make_shared<ConstantWeight>(value); }

LagrangianWeight::LagrangianWeight(MotionPtr motion, WeightPtr material_weight)
    : motion_(std::move(motion)), material_(std::move(material_weight)) {}

double LagrangianWeight::operator()(double t, Vec2 x) const {
    const Vec2 z = motion_->inverse(t, x);
    const Mat2 dinv = motion_->inverse_jacobian(t, x);
    const Vec2 g = dinv.transposed() * unit_from_angle(t);
    return (*material_)(t, z) * std::abs(dinv.det()) / norm(g);
}

// ---------------------------------------------------------------------------
// PhaseFunction
// ---------------------------------------------------------------------------

void PhaseFunction::require_in_domain(Vec2 x) const {
    if (!domain_.contains(x) || !std::isfinite(x.x) || !std::isfinite(x.y))
        throw DomainError("point " + point_str(x) + " lies outside the phase domain");
}

Vec2 PhaseFunction::fd_grad_x(double t, Vec2 x) const {
    const double h = fd_step_x();
    return {(value(t, x + Vec2{h, 0}) - value(t, x - Vec2{h, 0})) / (2 * h),
            (value(t, x + Vec2{0, h}) - value(t, x - Vec2{0, h})) / (2 * h)};
}

double PhaseFunction::fd_dt(double t, Vec2 x) const {
    return (value(t + kFdStepT, x) - value(t - kFdStepT, x)) / (2 * kFdStepT);
}

Vec2 PhaseFunction::fd_dt_grad_x(double t, Vec2 x) const {
    return (fd_grad_x(t + kFdStepT, x) - fd_grad_x(t - kFdStepT, x)) / (2 * kFdStepT);
}

double PhaseFunction::dtt(double t, Vec2 x) const {
    return (dt(t + kFdStepT, x) - dt(t - kFdStepT, x)) / (2 * kFdStepT);
}

// static

double StaticPhase::value(double t, Vec2 x) const { return dot(x, unit_from_angle(t)); }
Vec2 StaticPhase::grad_x(double t, Vec2) const { return unit_from_angle(t); }
PhaseSample StaticPhase::sample(double t, Vec2 x) const {
    const Vec2 w = unit_from_angle(t);
    return {dot(x, w), w};
}
double StaticPhase::dt(double t, Vec2 x) const { return dot(x, perp(unit_from_angle(t))); }
Vec2 StaticPhase::dt_grad_x(double t, Vec2) const { return perp(unit_from_angle(t)); }
double StaticPhase::dtt(double t, Vec2 x) const { return -dot(x, unit_from_angle(t)); }

// dynamic

DynamicPhase::DynamicPhase(MotionPtr motion, Rect domain, TimeRange t_range)
    : PhaseFunction(domain, t_range), motion_(std::move(motion)) {
    if (!motion_) throw ConfigError("dynamic phase needs a motion model");
}

double DynamicPhase::value(double t, Vec2 x) const {
    require_in_domain(x);
    return dot(motion_->inverse(t, x), unit_from_angle(t));
}

Vec2 DynamicPhase::grad_x(double t, Vec2 x) const {
    require_in_domain(x);
    return motion_->inverse_jacobian(t, x).transposed() * unit_from_angle(t);
}

PhaseSample DynamicPhase::sample(double t, Vec2 x) const {
    require_in_domain(x);
    const Vec2 w = unit_from_angle(t);
    return {dot(motion_->inverse(t, x), w), motion_->inverse_jacobian(t, x).transposed() * w};
}

double DynamicPhase::dt(double t, Vec2 x) const {
    require_in_domain(x);
    const Vec2 w = unit_from_angle(t);
    return dot(motion_->dt_inverse(t, x), w) + dot(motion_->inverse(t, x), perp(w));
}

Vec2 DynamicPhase::dt_grad_x(double t, Vec2 x) const {
    require_in_domain(x);
    const Vec2 w = unit_from_angle(t);
    return motion_->dt_inverse_jacobian(t, x).transposed() * w +
           motion_->inverse_jacobian(t, x).transposed() * perp(w);
}

// fan beam

FanBeamPhase::FanBeamPhase(double source_radius, Rect domain, TimeRange t_range)
    : PhaseFunction(domain, t_range), radius_(source_radius) {
    const double reach = std::max({norm({domain.xmin, domain.ymin}), norm({domain.xmin, domain.ymax}),
                                   norm({domain.xmax, domain.ymin}), norm({domain.xmax, domain.ymax})});
    if (!(source_radius > reach))
        throw ConfigError("fan-beam source radius must exceed the domain reach " + std::to_string(reach));
}

Vec2 FanBeamPhase::checked_alpha(double t, Vec2 x) const {
    require_in_domain(x);
    if (!(norm(x) < radius_)) throw BranchError("fan-beam point " + point_str(x) + " not inside the source circle");
    return x - source(t);
}

double FanBeamPhase::value(double t, Vec2 x) const {
    const Vec2 ap = perp(checked_alpha(t, x));
    const double base = t - kPi / 2;
    const double dev = wrap_pi(std::atan2(ap.y, ap.x) - base);
    if (!(std::abs(dev) < kPi / 2))
        throw BranchError("fan-beam angle leaves the branch at " + point_str(x));
    return base + dev;
}

Vec2 FanBeamPhase::grad_x(double t, Vec2 x) const {
    const Vec2 a = checked_alpha(t, x);
    return perp(a) / dot(a, a);
}

PhaseSample FanBeamPhase::sample(double t, Vec2 x) const { return {value(t, x), grad_x(t, x)}; }

double FanBeamPhase::dt(double t, Vec2 x) const {
    const Vec2 a = checked_alpha(t, x);
    const Vec2 at = -radius_ * perp(unit_from_angle(t));
    return dot(perp(a), at) / dot(a, a);
}

Vec2 FanBeamPhase::dt_grad_x(double t, Vec2 x) const {
    const Vec2 a = checked_alpha(t, x);
    const Vec2 at = -radius_ * perp(unit_from_angle(t));
    const double q = dot(a, a);
    return perp(at) / q - perp(a) * (2 * dot(a, at) / (q * q));
}

double FanBeamPhase::dtt(double t, Vec2 x) const {
    const Vec2 a = checked_alpha(t, x);
    const Vec2 at = -radius_ * perp(unit_from_angle(t));
    const Vec2 att = radius_ * unit_from_angle(t);
    const double q = dot(a, a);
    return dot(perp(a), att) / q - 2 * dot(perp(a), at) * dot(a, at) / (q * q);
}

PhasePtr make_static_phase(Rect domain, TimeRange t_range) {
    return std::make_shared<StaticPhase>(domain, t_range);
}
PhasePtr make_dynamic_phase(MotionPtr motion, Rect domain, TimeRange t_range) {
    return std::make_shared<DynamicPhase>(std::move(motion), domain, t_range);
}
PhasePtr make_fanbeam_phase(double source_radius, Rect domain, TimeRange t_range) {
    return std::make_shared<FanBeamPhase>(source_radius, domain, t_range);
}

// ---------------------------------------------------------------------------
// Frames and the homogeneous extension
// ---------------------------------------------------------------------------

LevelCurveFrame frame_at(const PhaseFunction& pf, double t, Vec2 x) {
    if (!pf.domain().contains_interior(x, pf.fd_step_x()))
        throw DomainError("frame requested at " + point_str(x) + ", too close to the domain edge");
    LevelCurveFrame f;
    f.t = t;
    f.x = x;
    const PhaseSample ps = pf.sample(t, x);
    f.s = ps.value;
    f.g = ps.grad;
    f.dt_phi = pf.dt(t, x);
    f.m = pf.dt_grad_x(t, x);
    f.J = norm(f.g);
    f.nu = f.J > 0 ? f.g / f.J : Vec2{};
    f.h = cross(f.g, f.m);
    return f;
}

FanParallelCoords fan_to_parallel(double t, double gamma, double source_radius) {
    return {source_radius * std::sin(gamma), t + gamma - kPi / 2, source_radius * std::cos(gamma)};
}

HomogeneousExtension homogeneous_extension(const PhaseFunction& pf, Vec2 theta, Vec2 x, double t_ref) {
    const double r = norm(theta);
    if (!(r > 0)) throw BranchError("homogeneous extension needs theta != 0");
    const double dev = wrap_pi(std::atan2(theta.y, theta.x) - t_ref);
    if (std::abs(dev) > kPi - 1e-6) throw BranchError("arg(theta) sits on the branch cut opposite t_ref");
    HomogeneousExtension out;
    out.arg = t_ref + dev;
    const LevelCurveFrame f = frame_at(pf, out.arg, x);
    const Vec2 u = theta / r;
    out.value = r * f.s;
    const Vec2 row1 = u.x * f.g - u.y * f.m;
    const Vec2 row2 = u.y * f.g + u.x * f.m;
    out.mixed_hessian = {row1.x, row1.y, row2.x, row2.y};
    out.hessian_det = out.mixed_hessian.det();
    return out;
}

// ---------------------------------------------------------------------------
// Level curves
// ---------------------------------------------------------------------------

bool project_to_level(const PhaseFunction& pf, double s, double t, Vec2& x, int max_iter) {
    const double tol = pf.curve_tol();
    try {
        for (int it = 0; it <= max_iter; ++it) {
            const PhaseSample ps = pf.sample(t, x);
            const double r = ps.value - s;
            if (!std::isfinite(r)) return false;
            if (std::abs(r) < tol) return true;
            if (it == max_iter) return false;
            const double gg = dot(ps.grad, ps.grad);
            if (!(gg > 0)) return false;
            x -= (r / gg) * ps.grad;
        }
    } catch (const Error&) {
        return false;
    }
    return false;
}

namespace {

enum class MarchEnd { Boundary, Closed, Stall };

MarchEnd march(const PhaseFunction& pf, double s, double t, Vec2 seed, Vec2 seed_grad, double step,
               double dir, const TraceRegion& region, std::vector<Vec2>& out) {
    const double tol = pf.curve_tol();
    const std::size_t max_steps =
        static_cast<std::size_t>(20.0 * pf.domain().diameter() / step) + 100;
    Vec2 x = seed;
    Vec2 g = seed_grad;
    try {
        for (std::size_t k = 0; k < max_steps; ++k) {
            const double gn = norm(g);
            if (!(gn > 0)) return MarchEnd::Stall;
            const Vec2 k1 = dir * perp(g) / gn;
            const Vec2 xm = x + (0.5 * step) * k1;
            if (!pf.domain().contains(xm)) return MarchEnd::Boundary;
            const Vec2 gm = pf.grad_x(t, xm);
            const double gmn = norm(gm);
            if (!(gmn > 0)) return MarchEnd::Stall;
            Vec2 xp = x + step * (dir * perp(gm) / gmn);
            if (!pf.domain().contains(xp)) return MarchEnd::Boundary;

            bool ok = false;
            PhaseSample ps;
            for (int it = 0; it < 12; ++it) {
                ps = pf.sample(t, xp);
                const double r = ps.value - s;
                if (!std::isfinite(r)) return MarchEnd::Stall;
                if (std::abs(r) < tol) { ok = true; break; }
                const double gg = dot(ps.grad, ps.grad);
                if (!(gg > 0)) return MarchEnd::Stall;
                const Vec2 corr = (r / gg) * ps.grad;
                if (norm(corr) > step) return MarchEnd::Stall;
                xp -= corr;
                if (!pf.domain().contains(xp)) return MarchEnd::Boundary;
            }
            if (!ok) return MarchEnd::Stall;
            if (!region.contains(xp)) return MarchEnd::Boundary;
            const Vec2 back = xp - seed;
            if (k >= 2 && dot(back, back) < 0.25 * step * step) return MarchEnd::Closed;
            out.push_back(xp);
            x = xp;
            g = ps.grad;
        }
    } catch (const DomainError&) {
        return MarchEnd::Boundary;
    } catch (const BranchError&) {
        return MarchEnd::Boundary;
    }
    return MarchEnd::Boundary;
}

}  // namespace

bool trace_polyline(const PhaseFunction& pf, double s, double t, Vec2 seed, double step,
                    const TraceRegion& region, std::vector<Vec2>& points, bool& closed) {
    points.clear();
    closed = false;
    Vec2 seed_grad;
    try {
        seed_grad = pf.grad_x(t, seed);
    } catch (const Error&) {
        return false;
    }
    static thread_local std::vector<Vec2> backward;
    backward.clear();
    const MarchEnd e1 = march(pf, s, t, seed, seed_grad, step, 1.0, region, points);
    if (e1 == MarchEnd::Stall) return false;
    if (e1 == MarchEnd::Closed) {
        points.insert(points.begin(), seed);
        closed = true;
        return true;
    }
    const MarchEnd e2 = march(pf, s, t, seed, seed_grad, step, -1.0, region, backward);
    if (e2 == MarchEnd::Stall) return false;
    // backward branch reversed, then the seed, then the forward branch
    std::vector<Vec2> joined;
    joined.reserve(backward.size() + 1 + points.size());
    joined.insert(joined.end(), backward.rbegin(), backward.rend());
    joined.push_back(seed);
    joined.insert(joined.end(), points.begin(), points.end());
    points.swap(joined);
    return true;
}

LevelCurve trace_level_curve(const PhaseFunction& pf, double s, double t, Vec2 seed, double step,
                             const TraceRegion& region) {
    if (!(step > 0)) throw ConfigError("trace step must be positive");
    Vec2 x = seed;
    if (!project_to_level(pf, s, t, x, 20))
        throw SeedProjectionError("Newton projection of seed " + point_str(seed) + " onto level " +
                                  std::to_string(s) + " did not converge in 20 iterations");
    if (!region.contains(x))
        throw SeedProjectionError("projected seed " + point_str(x) + " leaves the trace region");
    LevelCurve c;
    c.s = s;
    c.t = t;
    if (!trace_polyline(pf, s, t, x, step, region, c.points, c.closed))
        throw StallError("level-set corrector diverged while tracing s=" + std::to_string(s) +
                         ", t=" + std::to_string(t));
    c.arc_lengths.resize(c.points.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        if (i > 0) acc += norm(c.points[i] - c.points[i - 1]);
        c.arc_lengths[i] = acc;
    }
    return c;
}

LevelCurve trace_level_curve(const PhaseFunction& pf, double s, double t, Vec2 seed, double step) {
    const Rect d = pf.domain();
    TraceRegion region;
    region.rect = {d.xmin + step, d.xmax - step, d.ymin + step, d.ymax - step};
    return trace_level_curve(pf, s, t, seed, step, region);
}

}  // namespace curvetomo
