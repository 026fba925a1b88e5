#pragma once

#include <memory>
#include <string>
#include <vector>

#include "common.hpp"

namespace curvetomo {

// ---------------------------------------------------------------------------
// Motion models psi_t
// ---------------------------------------------------------------------------

/// Time-dependent diffeomorphism psi_t of the plane (the moving object).
///
/// Subclasses provide the forward and inverse maps; derivative hooks default to
/// central finite differences and are overridden where closed forms exist.
class MotionModel {
public:
    virtual ~MotionModel() = default;

    virtual std::string name() const = 0;
    /// x = psi_t(z)
    virtual Vec2 forward(double t, Vec2 z) const = 0;
    /// z = psi_t^{-1}(x)
    virtual Vec2 inverse(double t, Vec2 x) const = 0;
    /// Model-specific motion scale (rotation rate, deformation amplitude).
    virtual double amplitude() const = 0;
    /// True when every derivative hook below is a closed form.
    virtual bool analytic() const { return false; }
    /// True when psi_t is the identity outside a compact set.
    virtual bool compactly_supported() const { return false; }

    /// D psi_t(z)
    virtual Mat2 jacobian(double t, Vec2 z) const;
    double jac_det(double t, Vec2 z) const { return jacobian(t, z).det(); }
    /// D(psi_t^{-1})(x)
    virtual Mat2 inverse_jacobian(double t, Vec2 x) const;
    /// d/dt psi_t(z)
    virtual Vec2 dt_forward(double t, Vec2 z) const;
    /// d/dt psi_t^{-1}(x)
    virtual Vec2 dt_inverse(double t, Vec2 x) const;
    /// d/dt D(psi_t^{-1})(x)
    virtual Mat2 dt_inverse_jacobian(double t, Vec2 x) const;

    static constexpr double kFdStepX = 1e-5;
    static constexpr double kFdStepT = 1e-5;
};

using MotionPtr = std::shared_ptr<const MotionModel>;

class IdentityMotion final : public MotionModel {
public:
    std::string name() const override { return "identity"; }
    Vec2 forward(double, Vec2 z) const override { return z; }
    Vec2 inverse(double, Vec2 x) const override { return x; }
    double amplitude() const override { return 0.0; }
    bool analytic() const override { return true; }
    bool compactly_supported() const override { return true; }
    Mat2 jacobian(double, Vec2) const override { return Mat2::identity(); }
    Mat2 inverse_jacobian(double, Vec2) const override { return Mat2::identity(); }
    Vec2 dt_forward(double, Vec2) const override { return {}; }
    Vec2 dt_inverse(double, Vec2) const override { return {}; }
    Mat2 dt_inverse_jacobian(double, Vec2) const override { return Mat2{0, 0, 0, 0}; }
};

/// Rigid rotation psi_t = R(rate * t). rate = -1 rotates with the scanner.
class RotationMotion final : public MotionModel {
public:
    explicit RotationMotion(double rate) : rate_(rate) {}
    std::string name() const override { return "rotation"; }
    Vec2 forward(double t, Vec2 z) const override;
    Vec2 inverse(double t, Vec2 x) const override;
    double amplitude() const override { return std::abs(rate_); }
    double rate() const { return rate_; }
    bool analytic() const override { return true; }
    Mat2 jacobian(double t, Vec2) const override { return Mat2::rotation(rate_ * t); }
    Mat2 inverse_jacobian(double t, Vec2) const override { return Mat2::rotation(-rate_ * t); }
    Vec2 dt_forward(double t, Vec2 z) const override;
    Vec2 dt_inverse(double t, Vec2 x) const override;
    Mat2 dt_inverse_jacobian(double t, Vec2 x) const override;

private:
    double rate_;
};

/// Time-affine motion psi_t(z) = A(t) z + b(t) with A(0) = I, b(0) = 0.
class AffineMotion final : public MotionModel {
public:
    explicit AffineMotion(double amplitude) : a_(amplitude) {}
    std::string name() const override { return "affine"; }
    Vec2 forward(double t, Vec2 z) const override;
    Vec2 inverse(double t, Vec2 x) const override;
    double amplitude() const override { return a_; }
    bool analytic() const override { return true; }
    Mat2 jacobian(double t, Vec2) const override { return matrix(t); }
    Mat2 inverse_jacobian(double t, Vec2) const override { return matrix(t).inverse(); }
    Vec2 dt_forward(double t, Vec2 z) const override;
    Vec2 dt_inverse(double t, Vec2 x) const override;
    Mat2 dt_inverse_jacobian(double t, Vec2 x) const override;

    Mat2 matrix(double t) const;
    Mat2 matrix_dt(double t) const;
    Vec2 shift(double t) const;
    Vec2 shift_dt(double t) const;

private:
    double a_;
};

/// Radial breathing psi_t(z) = (1 + a sin(t) eta(|z|)) z with
/// eta(r) = (1 - r^2/r0^2)^3 on r < r0 and 0 beyond, so psi_t = id outside the disk.
class BreathingMotion final : public MotionModel {
public:
    BreathingMotion(double amplitude, double taper_radius);
    std::string name() const override { return "breathing"; }
    Vec2 forward(double t, Vec2 z) const override;
    Vec2 inverse(double t, Vec2 x) const override;
    double amplitude() const override { return a_; }
    double taper_radius() const { return r0_; }
    bool compactly_supported() const override { return true; }
    Mat2 jacobian(double t, Vec2 z) const override;
    Mat2 inverse_jacobian(double t, Vec2 x) const override;
    Vec2 dt_forward(double t, Vec2 z) const override;
    Vec2 dt_inverse(double t, Vec2 x) const override;

    double eta(double r) const;
    double eta_prime(double r) const;

private:
    double a_;
    double r0_;
};

MotionPtr make_identity_motion();
MotionPtr make_rotation_motion(double rate);
MotionPtr make_affine_motion(double amplitude);
MotionPtr make_breathing_motion(double amplitude, double taper_radius = 1.0);

// ---------------------------------------------------------------------------
// Weights mu(t, x)
// ---------------------------------------------------------------------------

class Weight {
public:
    virtual ~Weight() = default;
    virtual std::string name() const = 0;
    virtual double operator()(double t, Vec2 x) const = 0;
};

using WeightPtr = std::shared_ptr<const Weight>;

class ConstantWeight final : public Weight {
public:
    explicit ConstantWeight(double value);
    std::string name() const override { return "constant"; }
    double operator()(double, Vec2) const override { return value_; }
    double value() const { return value_; }

private:
    double value_;
};

/// base(t,x) * (1 + amplitude * exp(-|x - center|^2 / (2 width^2)) * (1 + 0.5 sin t)).
class BumpWeight final : public Weight {
public:
    BumpWeight(WeightPtr base, double amplitude, Vec2 center, double width);
    std::string name() const override { return "bump"; }
    double operator()(double t, Vec2 x) const override;

private:
    WeightPtr base_;
    double amplitude_;
    Vec2 center_;
    double width_;
};

WeightPtr make_constant_weight(double value = 1.0);

// ---------------------------------------------------------------------------
// Phase functions phi(t, x)
// ---------------------------------------------------------------------------

struct PhaseSample {
    double value = 0.0;
    Vec2 grad;
};

/// Curve family s = phi(t, x) together with the derivatives the checkers need.
///
/// Derivative hooks default to central differences with step 1e-4 x domain
/// diameter in x and 1e-4 in t; families with closed forms override them and
/// report analytic_derivatives().
class PhaseFunction {
public:
    PhaseFunction(Rect domain, TimeRange t_range) : domain_(domain), t_range_(t_range) {}
    virtual ~PhaseFunction() = default;

    virtual std::string name() const = 0;
    virtual double value(double t, Vec2 x) const = 0;
    virtual Vec2 grad_x(double t, Vec2 x) const { return fd_grad_x(t, x); }
    virtual PhaseSample sample(double t, Vec2 x) const { return {value(t, x), grad_x(t, x)}; }
    virtual double dt(double t, Vec2 x) const { return fd_dt(t, x); }
    virtual Vec2 dt_grad_x(double t, Vec2 x) const { return fd_dt_grad_x(t, x); }
    virtual double dtt(double t, Vec2 x) const;
    virtual bool analytic_derivatives() const { return false; }
    /// Per-time shift of the level value used for sinogram storage: row t holds
    /// s - level_offset(t). Zero except for the fan-beam family, where it makes
    /// the stored coordinate the fan angle.
    virtual double level_offset(double) const { return 0.0; }

    Vec2 fd_grad_x(double t, Vec2 x) const;
    double fd_dt(double t, Vec2 x) const;
    Vec2 fd_dt_grad_x(double t, Vec2 x) const;

    const Rect& domain() const { return domain_; }
    const TimeRange& t_range() const { return t_range_; }
    double fd_step_x() const { return 1e-4 * domain_.diameter(); }
    static constexpr double kFdStepT = 1e-4;
    /// Level-set residual tolerance for traced curves.
    double curve_tol() const { return 1e-8 * domain_.diameter(); }

protected:
    void require_in_domain(Vec2 x) const;

private:
    Rect domain_;
    TimeRange t_range_;
};

using PhasePtr = std::shared_ptr<const PhaseFunction>;

/// phi(t, x) = x . omega(t): the classical parallel-beam Radon transform.
class StaticPhase final : public PhaseFunction {
public:
    StaticPhase(Rect domain, TimeRange t_range) : PhaseFunction(domain, t_range) {}
    std::string name() const override { return "static"; }
    double value(double t, Vec2 x) const override;
    Vec2 grad_x(double t, Vec2 x) const override;
    PhaseSample sample(double t, Vec2 x) const override;
    double dt(double t, Vec2 x) const override;
    Vec2 dt_grad_x(double t, Vec2 x) const override;
    double dtt(double t, Vec2 x) const override;
    bool analytic_derivatives() const override { return true; }
};

/// phi(t, x) = psi_t^{-1}(x) . omega(t) for a moving object.
class DynamicPhase final : public PhaseFunction {
public:
    DynamicPhase(MotionPtr motion, Rect domain, TimeRange t_range);
    std::string name() const override { return "dynamic:" + motion_->name(); }
    double value(double t, Vec2 x) const override;
    Vec2 grad_x(double t, Vec2 x) const override;
    PhaseSample sample(double t, Vec2 x) const override;
    double dt(double t, Vec2 x) const override;
    Vec2 dt_grad_x(double t, Vec2 x) const override;
    bool analytic_derivatives() const override { return motion_->analytic(); }
    const MotionModel& motion() const { return *motion_; }
    MotionPtr motion_ptr() const { return motion_; }

private:
    MotionPtr motion_;
};

/// Fan-beam family: phi(t, x) is the polar angle of alpha^perp, alpha = x - S(t),
/// S(t) = R omega(t). Level sets are the source rays. The angle is lifted
/// continuously around t - pi/2, which agrees with the arctan formula modulo pi
/// and shares its derivatives.
class FanBeamPhase final : public PhaseFunction {
public:
    FanBeamPhase(double source_radius, Rect domain, TimeRange t_range);
    std::string name() const override { return "fanbeam"; }
    double value(double t, Vec2 x) const override;
    Vec2 grad_x(double t, Vec2 x) const override;
    PhaseSample sample(double t, Vec2 x) const override;
    double dt(double t, Vec2 x) const override;
    Vec2 dt_grad_x(double t, Vec2 x) const override;
    double dtt(double t, Vec2 x) const override;
    bool analytic_derivatives() const override { return true; }
    double level_offset(double t) const override { return t - kPi / 2; }
    double source_radius() const { return radius_; }
    Vec2 source(double t) const { return radius_ * unit_from_angle(t); }

private:
    Vec2 checked_alpha(double t, Vec2 x) const;
    double radius_;
};

PhasePtr make_static_phase(Rect domain = Rect::centered_square(1.1),
                           TimeRange t_range = TimeRange::full());
PhasePtr make_dynamic_phase(MotionPtr motion, Rect domain = Rect::centered_square(1.1),
                            TimeRange t_range = TimeRange::full());
PhasePtr make_fanbeam_phase(double source_radius, Rect domain = Rect::centered_square(1.1),
                            TimeRange t_range = TimeRange::full());

/// Weight on the level-set form that reproduces the moving-object line integrals:
/// mu_hat(t, x) = mu(t, psi_t^{-1} x) |det D psi_t^{-1}(x)| / |d_x phi(t, x)|.
class LagrangianWeight final : public Weight {
public:
    LagrangianWeight(MotionPtr motion, WeightPtr material_weight);
    std::string name() const override { return "lagrangian"; }
    double operator()(double t, Vec2 x) const override;

private:
    MotionPtr motion_;
    WeightPtr material_;
};

// ---------------------------------------------------------------------------
// Local frames, fan-beam relation, homogeneous extension
// ---------------------------------------------------------------------------

struct LevelCurveFrame {
    double t = 0.0;
    Vec2 x;
    double s = 0.0;        // phi(t, x)
    Vec2 g;                // d_x phi
    double dt_phi = 0.0;   // d_t phi
    Vec2 m;                // d_t d_x phi
    Vec2 nu;               // unit normal g / |g|
    double J = 0.0;        // |g|
    double h = 0.0;        // det[g, m]
};

/// All first and mixed derivatives at (t, x). Uses closed forms when the
/// family has them and central differences otherwise.
LevelCurveFrame frame_at(const PhaseFunction& pf, double t, Vec2 x);

struct FanParallelCoords {
    double s = 0.0;
    double beta = 0.0;
    double jacobian = 0.0;  // R cos(gamma)
};

/// s = R sin(gamma), beta = t + gamma - pi/2.
FanParallelCoords fan_to_parallel(double t, double gamma, double source_radius);

struct HomogeneousExtension {
    double value = 0.0;
    Mat2 mixed_hessian;     // entry (i, j) = d^2 / d theta^i d x^j
    double hessian_det = 0.0;
    double arg = 0.0;       // the branch of arg(theta) that was used
};

/// |theta| phi(arg theta, x) with arg theta taken in (t_ref - pi, t_ref + pi].
HomogeneousExtension homogeneous_extension(const PhaseFunction& pf, Vec2 theta, Vec2 x,
                                           double t_ref);

// ---------------------------------------------------------------------------
// Level curves
// ---------------------------------------------------------------------------

/// Region inside which a level curve is followed: a rectangle, optionally
/// intersected with a disk.
struct TraceRegion {
    Rect rect;
    Vec2 disk_center;
    double disk_radius = kInf;

    bool contains(Vec2 p) const {
        if (!rect.contains(p)) return false;
        if (disk_radius == kInf) return true;
        const Vec2 d = p - disk_center;
        return dot(d, d) <= disk_radius * disk_radius;
    }
};

struct LevelCurve {
    double s = 0.0;
    double t = 0.0;
    std::vector<Vec2> points;
    std::vector<double> arc_lengths;  // cumulative, arc_lengths[0] = 0
    bool closed = false;
};

/// Newton projection of x onto {phi(t, .) = s} along d_x phi. Returns false if
/// it does not reach pf.curve_tol() within max_iter steps.
bool project_to_level(const PhaseFunction& pf, double s, double t, Vec2& x, int max_iter = 20);

/// Follows the connected component of {phi(t, .) = s} through seed inside region,
/// marching along d_x phi rotated by pi/2 with an RK2 predictor and a Newton
/// corrector. Stops at the region boundary or on closure.
LevelCurve trace_level_curve(const PhaseFunction& pf, double s, double t, Vec2 seed, double step,
                             const TraceRegion& region);
LevelCurve trace_level_curve(const PhaseFunction& pf, double s, double t, Vec2 seed, double step);

/// Non-throwing core used by the projectors. `points` receives the polyline for
/// a seed that is already on the level set. Returns false on a stalled corrector.
bool trace_polyline(const PhaseFunction& pf, double s, double t, Vec2 seed, double step,
                    const TraceRegion& region, std::vector<Vec2>& points, bool& closed);

}  // namespace curvetomo
