#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "operators.hpp"
#include "phantom.hpp"

using namespace curvetomo;

namespace {

GridSpec small_grid(std::size_t n = 64) { return {n, 1.0, 0.9}; }

ImageGrid smooth_random(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    ImageGrid f = ImageGrid::zeros(g);
    for (int k = 0; k < 6; ++k) {
        const Vec2 c{0.4 * nd(rng), 0.4 * nd(rng)};
        const double amp = nd(rng), w = 0.1 + 0.1 * std::abs(nd(rng));
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Vec2 d = f.center(i) - c;
            f.values[i] += amp * std::exp(-dot(d, d) / (2 * w * w));
        }
    }
    f.enforce_support();
    return f;
}

Sinogram smooth_random_sino(const SinogramSpec& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Sinogram g = Sinogram::zeros(s);
    const double a1 = nd(rng), a2 = nd(rng), f1 = 1 + std::abs(nd(rng)), p = nd(rng);
    for (std::size_t j = 0; j < g.nt; ++j)
        for (std::size_t i = 0; i < g.ns; ++i) {
            const double sv = g.s_at(i), t = g.t_at(j);
            g.at(i, j) = (a1 * std::cos(f1 * 3 * sv + t + p) + a2 * std::sin(2 * t) * sv) * std::exp(-sv * sv);
        }
    return g;
}

double adjoint_mismatch(PhasePtr pf, WeightPtr mu, const GridSpec& grid, const SinogramSpec& spec, std::uint64_t seed) {
    LevelSetProjector P(pf, mu, grid, spec);
    Backprojector B(pf, mu, grid, spec);
    return duality_discrepancy(P, B, smooth_random(grid, seed), smooth_random_sino(spec, seed + 1));
}

}  // namespace

TEST_CASE("static projector reproduces disk chords") {
    const GridSpec grid{256, 1.0, 0.95};
    auto pf = make_static_phase();
    auto spec = default_sinogram_spec(*pf, grid, 128, 36, TimeRange::full());
    LevelSetProjector P(pf, make_constant_weight(), grid, spec);
    const auto disk = disk_phantom(0.5);
    const Sinogram g = P.apply([&](Vec2 p) { return phantom_density(disk, p); });
    double worst = 0.0;
    for (std::size_t j = 0; j < g.nt; ++j)
        for (std::size_t i = 0; i < g.ns; ++i) {
            const double s = g.s_at(i);
            if (std::abs(s) > 0.45) continue;
            const double exact = 2.0 * std::sqrt(0.25 - s * s);
            worst = std::max(worst, std::abs(g.at(i, j) - exact) / exact);
        }
    CHECK(worst < 0.01);
    CHECK(P.report().nan_rows == 0);
}

TEST_CASE("static backprojection of ones is 2 pi") {
    const GridSpec grid = small_grid();
    auto pf = make_static_phase();
    auto spec = default_sinogram_spec(*pf, grid, 96, 180, TimeRange::full());
    Sinogram one = Sinogram::zeros(spec);
    for (auto& v : one.values) v = 1.0;
    const ImageGrid b = adjoint(pf, make_constant_weight(), one, grid);
    const ImageGrid ref = ImageGrid::zeros(grid);
    for (std::size_t k = 0; k < b.size(); k += 37)
        if (ref.in_support(ref.center(k))) CHECK(b.values[k] == doctest::Approx(kTwoPi).epsilon(1e-6));
}

TEST_CASE("adjoint duality for the builtin families") {
    const GridSpec grid = small_grid();
    auto mu = make_constant_weight();
    const std::vector<PhasePtr> families{
        make_static_phase(), make_dynamic_phase(make_breathing_motion(0.05)),
        make_dynamic_phase(make_rotation_motion(0.3)), make_fanbeam_phase(3.0)};
    for (const auto& pf : families) {
        auto spec = default_sinogram_spec(*pf, grid, 128, 180, pf->t_range());
        const double m = adjoint_mismatch(pf, mu, grid, spec, 7);
        INFO(pf->name());
        CHECK(m < 1e-3);
    }
}

TEST_CASE("lagrangian and level-set forwards agree for breathing") {
    const GridSpec grid{64, 1.0, 0.9};
    auto motion = make_breathing_motion(0.05);
    auto pf = make_dynamic_phase(motion);
    auto mu0 = make_constant_weight();
    auto mu = std::make_shared<LagrangianWeight>(motion, mu0);
    SinogramSpec spec{96, 90, -1.0, 1.0, TimeRange::full()};
    const ImageGrid f = render_phantom(default_phantom(), grid);
    const Sinogram a = forward_levelset(pf, mu, f, spec);
    const Sinogram b = forward_lagrangian(*motion, *mu0, f, spec, 1.1);
    CHECK(relative_l2_error(a, b) < 0.02);
}

TEST_CASE("fan rebinning matches parallel data") {
    const GridSpec grid{96, 1.0, 0.9};
    const ImageGrid f = render_phantom(default_phantom(), grid);
    FanSpec fs;
    fs.n_gamma = 256;
    fs.nt = 360;
    const Sinogram fan = forward_fan_rays(f, fs);
    SinogramSpec ps{128, 180, -0.95, 0.95, TimeRange::full()};
    RebinReport rep;
    const Sinogram reb = fanbeam_convert(fan, fs.source_radius, ps, &rep);
    LevelSetProjector P(make_static_phase(), make_constant_weight(), grid, ps);
    const Sinogram par = P.apply(f);
    CHECK(rep.out_of_range == 0);
    CHECK(relative_l2_error(reb, par) < 0.03);
    CHECK(rep.jacobian_max <= fs.source_radius);
}

TEST_CASE("projector rejects a bad sinogram spec") {
    SinogramSpec bad{1, 10, -1, 1, TimeRange::full()};
    CHECK_THROWS_AS(LevelSetProjector(make_static_phase(), make_constant_weight(), small_grid(), bad), ConfigError);
}
