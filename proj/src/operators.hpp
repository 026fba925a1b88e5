#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "atlas.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace curvetomo {

/// Sinogram grid whose s window is the range of phi - level_offset over the
/// support disk, widened by 5% about its centre.
SinogramSpec default_sinogram_spec(const PhaseFunction& pf, const GridSpec& grid, std::size_t ns,
                                   std::size_t nt, TimeRange t_range);

struct TraceOptions {
    double step_factor = 0.5;      // marching step in pixel spacings
    std::size_t seed_grid = 33;    // coarse seeding lattice per side
    double nan_budget = 1e-3;      // fraction of failed rows tolerated
};

struct ForwardReport {
    std::size_t rows = 0;
    std::size_t nan_rows = 0;
    std::size_t curves = 0;
    std::size_t vertices = 0;
    std::size_t closed_curves = 0;
};

/// Precomputed quadrature for the level-set forward transform
///   Af(s, t) = int_{phi(t, x) = s} mu(t, x) f(x) dS.
///
/// Every (s, t) row stores the traced vertices of the level curves meeting the
/// support disk with trapezoid arc-length weights times mu, so repeated
/// applications cost one bilinear lookup per vertex.
class LevelSetProjector {
public:
    LevelSetProjector(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino,
                      const TraceOptions& opt = {});

    Sinogram apply(const ImageGrid& f) const;
    Sinogram apply(const std::function<double(Vec2)>& density) const;

    const ForwardReport& report() const { return report_; }
    const SinogramSpec& sinogram_spec() const { return sino_; }
    const GridSpec& grid_spec() const { return grid_; }
    const PhaseFunction& phase() const { return *pf_; }
    double step() const { return step_; }

private:
    void build(const TraceOptions& opt);

    PhasePtr pf_;
    WeightPtr mu_;
    GridSpec grid_;
    SinogramSpec sino_;
    double step_ = 0.0;
    std::vector<std::uint64_t> row_offsets_;
    std::vector<float> px_, py_, w_;
    std::vector<std::uint8_t> nan_row_;
    ForwardReport report_;
};

/// Pixel-driven adjoint A*g(x) = sum_j w_j mu(t_j, x) J(t_j, x) g(phi(t_j, x), t_j)
/// with J = |d_x phi|, linear interpolation in s and zero outside the s window.
class Backprojector {
public:
    Backprojector(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino);

    ImageGrid apply(const Sinogram& g) const;
    const GridSpec& grid_spec() const { return grid_; }
    const SinogramSpec& sinogram_spec() const { return sino_; }

private:
    struct Entry {
        std::uint32_t index;  // jt * ns + is
        float frac;
        float weight;
    };
    PhasePtr pf_;
    WeightPtr mu_;
    GridSpec grid_;
    SinogramSpec sino_;
    std::vector<std::uint32_t> pixels_;       // pixel indices inside the support
    std::vector<std::uint64_t> offsets_;      // entries per listed pixel
    std::vector<Entry> entries_;
};

Sinogram forward_levelset(PhasePtr pf, WeightPtr mu, const ImageGrid& f, const SinogramSpec& sino,
                          ForwardReport* report = nullptr);
ImageGrid adjoint(PhasePtr pf, WeightPtr mu, const Sinogram& g, const GridSpec& grid);

/// Moving-object line integrals int_{z . omega(t) = s} mu(t, z) f(psi_t(z)) dS_z,
/// sampled uniformly in arc length with step 0.5 x spacing.
Sinogram forward_lagrangian(const MotionModel& motion, const Weight& mu_material, const ImageGrid& f,
                            const SinogramSpec& sino, double domain_half_width);

/// Fan-beam sampling grid: source angle t over t_range, fan angle gamma uniform in
/// [-gamma_max, gamma_max]. Stored as a Sinogram whose s axis is gamma.
struct FanSpec {
    double source_radius = 3.0;
    std::size_t n_gamma = 256;
    std::size_t nt = 360;
    double gamma_max = 0.4;
    TimeRange t_range = TimeRange::full();
};

/// Straight-ray integrals from S(t) = R omega(t) in direction omega(t + pi + gamma).
Sinogram forward_fan_rays(const ImageGrid& f, const FanSpec& spec);

struct RebinReport {
    std::size_t out_of_range = 0;
    double jacobian_min = 0.0;
    double jacobian_max = 0.0;
};

/// Rebins (t, gamma) fan data onto a parallel (s, beta) grid through
/// s = R sin gamma, beta = t + gamma - pi/2 with bilinear interpolation.
/// Cells without fan coverage are NaN and counted.
Sinogram fanbeam_convert(const Sinogram& fan, double source_radius, const SinogramSpec& parallel,
                         RebinReport* report = nullptr);

/// Localized normal operator sum_i chi_iX A* chi_iY A, or with sqrt(chi_iX) on
/// both sides when `symmetric` is set. Af is shared across charts in the
/// non-symmetric form.
class NormalOperator {
public:
    NormalOperator(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& sino,
                   CutoffAtlas atlas, bool symmetric, const TraceOptions& opt = {});

    ImageGrid apply(const ImageGrid& f) const;
    /// Right-hand side of the normal equations for data g.
    ImageGrid rhs(const Sinogram& g) const;
    Sinogram forward(const ImageGrid& f) const { return proj_.apply(f); }
    ImageGrid backproject(const Sinogram& g) const { return back_.apply(g); }

    const LevelSetProjector& projector() const { return proj_; }
    const Backprojector& backprojector() const { return back_; }
    const CutoffAtlas& atlas() const { return atlas_; }
    bool symmetric() const { return symmetric_; }

private:
    ImageGrid chi_x(std::size_t i, bool root) const;
    Sinogram chi_y(std::size_t i) const;

    LevelSetProjector proj_;
    Backprojector back_;
    CutoffAtlas atlas_;
    bool symmetric_;
    GridSpec grid_;
};

}  // namespace curvetomo

namespace curvetomo {

/// |<Af, g> - <f, A*g>| / (||Af|| ||g||) in the weighted inner products.
double duality_discrepancy(const LevelSetProjector& P, const Backprojector& B, const ImageGrid& f, const Sinogram& g);

}  // namespace curvetomo
