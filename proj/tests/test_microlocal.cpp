#include <doctest.h>

#include <cmath>

#include "microlocal.hpp"

using namespace curvetomo;

namespace {
PhasePtr sync_phase() { return make_dynamic_phase(make_rotation_motion(-1.0)); }
}  // namespace

TEST_CASE("bolker determinant oracles") {
    auto stat = make_static_phase();
    auto co = make_dynamic_phase(make_rotation_motion(1.0));
    auto sync = sync_phase();
    for (const auto& s : random_phase_samples(*stat, 200, 11, 0.9)) {
        CHECK(std::abs(bolker_determinant(*stat, s.t, s.x) - 1.0) < 1e-10);
        CHECK(bolker_determinant(*co, s.t, s.x) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(std::abs(bolker_determinant(*sync, s.t, s.x)) < 1e-12);
    }
}

TEST_CASE("prop 3.1 agreement on builtin families") {
    const std::vector<PhasePtr> families{make_static_phase(), sync_phase(),
                                         make_dynamic_phase(make_breathing_motion(0.1)), make_fanbeam_phase(3.0)};
    for (const auto& pf : families) {
        const auto rep = prop31_equivalence_check(*pf, random_phase_samples(*pf, 2000, 5, 0.9));
        INFO(pf->name());
        CHECK(rep.agreement_fraction == 1.0);
    }
    const auto rep = prop31_equivalence_check(*sync_phase(), random_phase_samples(*sync_phase(), 500, 6, 0.9));
    CHECK(rep.both_zero == rep.samples);
}

TEST_CASE("direction roots") {
    auto stat = make_static_phase();
    auto roots = solve_time_for_direction(*stat, {0, 0}, {1, 0}, TimeRange::full());
    REQUIRE(roots.size() == 2);
    CHECK(std::abs(roots[0].t) < 1e-10);
    CHECK(roots[1].t == doctest::Approx(kPi).epsilon(1e-10));
    CHECK(roots[0].orientation == 1);
    CHECK(roots[1].orientation == -1);
    roots = solve_time_for_direction(*stat, {0.2, 0.1}, {0, 1}, TimeRange::limited(0.0, kPi / 2));
    REQUIRE(roots.size() == 1);
    CHECK(roots[0].t == doctest::Approx(kPi / 2).epsilon(1e-10));
    CHECK(solve_time_for_direction(*sync_phase(), {0.3, 0.2}, {0, 1}, TimeRange::full()).empty());
}

TEST_CASE("visibility maps") {
    auto stat = make_static_phase();
    auto vm = visibility_map(*stat, {0.1, 0.2}, 64, TimeRange::full());
    for (auto c : vm.count) CHECK(c >= 1);

    vm = visibility_map(*sync_phase(), {0.1, 0.2}, 64, TimeRange::full());
    for (std::size_t i = 0; i < vm.directions.size(); ++i) {
        const bool axis = std::abs(std::abs(vm.directions[i].x) - 1.0) < 1e-12;
        CHECK((vm.count[i] > 0) == axis);
    }

    // limited range [0, pi/3]: visible arcs are +-omega([0, pi/3])
    const std::size_t n = 72;
    vm = visibility_map(*stat, {0.0, 0.0}, n, TimeRange::limited(0.0, kPi / 3));
    for (std::size_t i = 0; i < n; ++i) {
        const double a = kTwoPi * static_cast<double>(i) / n;
        const double folded = std::fmod(a, kPi);
        const double cell = kTwoPi / n;
        if (folded < kPi / 3 - cell && folded > cell) CHECK(vm.count[i] > 0);
        if (folded > kPi / 3 + cell && folded < kPi - cell) CHECK(vm.count[i] == 0);
    }
}

TEST_CASE("semi-global bolker") {
    CHECK(semiglobal_bolker_check(*make_static_phase(), 0.4, {0.1, 0.2}).witnesses.empty());
    CHECK(semiglobal_bolker_check(*make_dynamic_phase(make_breathing_motion(0.02)), 0.4, {0.1, 0.2}).witnesses.empty());
    const auto rep = semiglobal_bolker_check(*sync_phase(), 0.4, {0.1, 0.2});
    CHECK(rep.witnesses.size() > 100);
}

TEST_CASE("canonical point and dPiY") {
    auto stat = make_static_phase();
    const auto cp = canonical_point(*stat, 0.0, {0.3, 0.5}, 1.0);
    CHECK(cp.s == doctest::Approx(0.3));
    CHECK(cp.tau == doctest::Approx(-0.5));
    CHECK(cp.xi.x == doctest::Approx(1.0));
    CHECK(std::abs(cp.xi.y) < 1e-15);
    const auto cm = canonical_point(*stat, 0.0, {0.3, 0.5}, -1.0);
    CHECK(cm.tau == doctest::Approx(0.5));
    CHECK(cm.xi.x == doctest::Approx(-1.0));

    const auto r = dPiY_rank(*stat, 0.7, {0.2, -0.3}, 2.5);
    CHECK(r.rank == 4);
    CHECK(std::abs(r.det) == doctest::Approx(2.5).epsilon(1e-12));
    const auto rs = dPiY_rank(*sync_phase(), 0.7, {0.2, -0.3}, 1.0);
    CHECK(rs.rank == 3);
    CHECK(std::abs(rs.det) < 1e-12);

    auto br = make_dynamic_phase(make_breathing_motion(0.05));
    for (const auto& s : random_phase_samples(*br, 200, 9, 0.9)) {
        const double sigma = 0.5 + s.x.x;
        const double h = bolker_determinant(*br, s.t, s.x);
        const auto d = dPiY_rank(*br, s.t, s.x, sigma);
        CHECK(std::abs(std::abs(d.det) - std::abs(sigma * h)) <= 1e-8 * std::abs(sigma * h));
    }
}

TEST_CASE("principal symbol") {
    auto stat = make_static_phase();
    auto mu = make_constant_weight();
    const auto atlas = CutoffAtlas::trivial();
    const auto p = principal_symbol(*stat, *mu, atlas, {0.1, 0.2}, {3.0, 4.0});
    CHECK(p.visible);
    CHECK(p.p == doctest::Approx(1.0 / (kPi * 5.0)).epsilon(1e-12));
    const auto p2 = principal_symbol(*stat, *mu, atlas, {0.1, 0.2}, {6.0, 8.0});
    CHECK(std::abs(p2.p * 2.0 - p.p) <= 1e-12 * p.p);
    const auto ps = principal_symbol(*sync_phase(), *mu, atlas, {0.1, 0.2}, {0.0, 1.0});
    CHECK_FALSE(ps.visible);
    CHECK(ps.p == 0.0);
}

TEST_CASE("default atlas coverage") {
    auto stat = make_static_phase();
    CoverageReport rep;
    const auto atlas = build_default_atlas(*stat, CompactSet{}, 3, true, &rep);
    CHECK(atlas.size() == 9);
    CHECK(rep.covered());
    CHECK(rep.min_sum_chi >= 0.5);
    auto limited = make_static_phase(Rect::centered_square(1.1), TimeRange::limited(0.0, kPi / 3));
    CHECK_THROWS_AS(build_default_atlas(*limited, CompactSet{}, 1, true), CoverageError);
}
