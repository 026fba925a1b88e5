#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "atlas.hpp"
#include "geometry.hpp"
#include "phantom.hpp"

namespace curvetomo {

/// h(t, x) = det[d_x phi, d_t d_x phi].
double bolker_determinant(const PhaseFunction& pf, double t, Vec2 x);

struct PhaseSamplePoint {
    double t = 0.0;
    Vec2 x;
};

/// Uniform random (t, x) with t in the phase's t_range and |x_i| <= half_width.
std::vector<PhaseSamplePoint> random_phase_samples(const PhaseFunction& pf, std::size_t n,
                                                   std::uint64_t seed, double half_width);

struct Prop31Report {
    std::size_t samples = 0;
    std::size_t agreements = 0;
    std::size_t both_zero = 0;
    std::size_t both_nonzero = 0;
    double agreement_fraction = 0.0;
    double worst_discrepancy = 0.0;  // max | normalized h - normalized Hessian det |
};

/// Compares the zero / nonzero status of h and of the mixed Hessian determinant
/// of the homogeneous extension, each normalized by its largest squared column norm.
Prop31Report prop31_equivalence_check(const PhaseFunction& pf, const std::vector<PhaseSamplePoint>& samples);
bool normalized_det_is_zero(Vec2 c1, Vec2 c2, double* normalized = nullptr);

struct DirectionRoot {
    double t = 0.0;
    int orientation = 0;       // sign(nu . xi)
    bool degenerate = false;   // residual vanished on a whole run of scan points
};

/// All t in t_range with nu(t, x) parallel to +-xi: scan of the angular residual
/// nu . perp(xi / |xi|) on n_scan intervals, bisection on sign changes, Newton polish.
std::vector<DirectionRoot> solve_time_for_direction(const PhaseFunction& pf, Vec2 x, Vec2 xi,
                                                    const TimeRange& t_range, std::size_t n_scan = 720);

struct VisibilityMap {
    Vec2 x;
    std::vector<Vec2> directions;
    std::vector<std::size_t> count;
    std::vector<std::vector<double>> t_witness;
};

VisibilityMap visibility_map(const PhaseFunction& pf, Vec2 x, std::size_t n_dirs, const TimeRange& t_range);

struct SemiGlobalReport {
    std::vector<Vec2> witnesses;
    std::size_t samples_used = 0;
    double sg_tol = 0.0;
};

/// Conjugate-point search along the level curve through x at time t.
SemiGlobalReport semiglobal_bolker_check(const PhaseFunction& pf, double t, Vec2 x,
                                         std::size_t n_curve_samples = 512);

struct CanonicalPoint {
    double s = 0.0, t = 0.0, sigma = 0.0, tau = 0.0;
    Vec2 x;
    Vec2 xi;
};

CanonicalPoint canonical_point(const PhaseFunction& pf, double t, Vec2 x, double sigma);

struct PiYRank {
    int rank = 0;
    double det = 0.0;
    std::array<double, 16> matrix{};  // row-major
};

/// Differential of the data-side projection at (t, x, sigma), columns (t, x1, x2, sigma).
PiYRank dPiY_rank(const PhaseFunction& pf, double t, Vec2 x, double sigma);

struct SymbolValue {
    Vec2 x;
    Vec2 xi;
    std::vector<double> t_used;
    double W_plus = 0.0;
    double W_minus = 0.0;
    double h_tilde = 0.0;
    double chi_x = 0.0;
    double p = 0.0;
    bool visible = false;
};

/// Principal symbol of the localized normal operator, summed over every
/// visibility root and chart.
SymbolValue principal_symbol(const PhaseFunction& pf, const Weight& mu, const CutoffAtlas& atlas, Vec2 x,
                             Vec2 xi);

struct VisibilityAudit {
    std::vector<bool> visible;
    std::vector<std::vector<double>> witness_times;
    double visible_fraction = 0.0;
};

VisibilityAudit visibility_audit(const PhaseFunction& pf, const std::vector<WavefrontSample>& wfs,
                                 const TimeRange& t_range);

}  // namespace curvetomo
