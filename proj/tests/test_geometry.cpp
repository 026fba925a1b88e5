#include "doctest.h"

#include <random>

#include "geometry.hpp"

using namespace curvetomo;

namespace {

Vec2 random_point(std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    return {u(rng), u(rng)};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); }
double rel_err(Vec2 a, Vec2 b) { return norm(a - b) / std::max(1e-12, norm(b)); }

}  // namespace

TEST_CASE("static phase values") {
    auto pf = make_static_phase();
    CHECK(pf->value(0, {1, 0}) == doctest::Approx(1.0));
    CHECK(pf->grad_x(0, {1, 0}).x == doctest::Approx(1.0));
    CHECK(pf->grad_x(0, {1, 0}).y == doctest::Approx(0.0));
    CHECK(pf->value(kPi / 2, {0.3, 0.2}) == doctest::Approx(0.2));
    CHECK(pf->value(kPi / 4, {1, 1}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("the unit circle example (3,2) needs a wider domain") {
    auto pf = make_static_phase(Rect::centered_square(4.0));
    CHECK(pf->value(kPi / 2, {3, 2}) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("analytic derivatives agree with finite differences") {
    std::mt19937_64 rng(7);
    std::vector<PhasePtr> families = {
        make_static_phase(),
        make_dynamic_phase(make_rotation_motion(0.3)),
        make_dynamic_phase(make_rotation_motion(-1.0)),
        make_dynamic_phase(make_affine_motion(0.1)),
        make_fanbeam_phase(3.0),
    };
    std::uniform_real_distribution<double> ut(0.0, kTwoPi);
    for (const auto& pf : families) {
        CHECK(pf->analytic_derivatives());
        for (int i = 0; i < 100; ++i) {
            const double t = ut(rng);
            const Vec2 x = random_point(rng, 0.9);
            const Vec2 g = pf->grad_x(t, x), gf = pf->fd_grad_x(t, x);
            CHECK(norm(g - gf) <= 1e-6 * norm(g));
            CHECK(std::abs(pf->dt(t, x) - pf->fd_dt(t, x)) <= 1e-6 * std::max(1.0, std::abs(pf->dt(t, x))));
            const Vec2 m = pf->dt_grad_x(t, x), mf = pf->fd_dt_grad_x(t, x);
            CHECK(norm(m - mf) <= 1e-5 * std::max(1.0, norm(m)));
        }
    }
}

TEST_CASE("breathing derivatives are consistent with finite differences") {
    auto pf = make_dynamic_phase(make_breathing_motion(0.1));
    CHECK_FALSE(pf->analytic_derivatives());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(0.0, kTwoPi);
    for (int i = 0; i < 100; ++i) {
        const double t = ut(rng);
        const Vec2 x = random_point(rng, 0.9);
        CHECK(rel_err(pf->grad_x(t, x), pf->fd_grad_x(t, x)) < 1e-6);
        CHECK(std::abs(pf->dt(t, x) - pf->fd_dt(t, x)) < 1e-6);
        CHECK(norm(pf->dt_grad_x(t, x) - pf->fd_dt_grad_x(t, x)) < 1e-4);
    }
}

TEST_CASE("dynamic phase special cases") {
    auto stat = make_static_phase();
    auto ident = make_dynamic_phase(make_identity_motion());
    auto sync = make_dynamic_phase(make_rotation_motion(-1.0));
    auto co = make_dynamic_phase(make_rotation_motion(1.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(0.0, kTwoPi);
    for (int i = 0; i < 100; ++i) {
        const double t = ut(rng);
        const Vec2 x = random_point(rng, 1.0);
        CHECK(ident->value(t, x) == stat->value(t, x));
        CHECK(std::abs(sync->value(t, x) - x.x) < 1e-14);
        CHECK(std::abs(co->value(t, x) - dot(x, unit_from_angle(2 * t))) < 1e-14);
    }
    CHECK_THROWS_AS(ident->value(0.0, {2.0, 0.0}), DomainError);
}

TEST_CASE("motion round trips and positivity") {
    std::vector<MotionPtr> motions = {make_identity_motion(), make_rotation_motion(0.3),
                                      make_affine_motion(0.1), make_breathing_motion(0.05),
                                      make_breathing_motion(0.3, 0.8)};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ut(0.0, kTwoPi);
    for (const auto& m : motions) {
        for (int i = 0; i < 1000; ++i) {
            const double t = ut(rng);
            const Vec2 z = random_point(rng, 1.1);
            CHECK(norm(m->inverse(t, m->forward(t, z)) - z) < 1e-8);
            CHECK(norm(m->forward(t, m->inverse(t, z)) - z) < 1e-8);
            CHECK(m->jac_det(t, z) > 0);
        }
    }
    // compactly supported motions leave the outside untouched
    auto b = make_breathing_motion(0.2, 1.0);
    CHECK(b->compactly_supported());
    CHECK(b->forward(1.0, {1.05, 0.0}) == Vec2{1.05, 0.0});
    CHECK(b->forward(0.3, {0.0, -1.2}) == Vec2{0.0, -1.2});
}

TEST_CASE("motion jacobians match finite differences") {
    std::vector<MotionPtr> motions = {make_rotation_motion(0.3), make_affine_motion(0.1),
                                      make_breathing_motion(0.05)};
    std::mt19937_64 rng(8);
    for (const auto& m : motions) {
        for (int i = 0; i < 50; ++i) {
            const double t = 0.1 * i;
            const Vec2 z = random_point(rng, 0.9);
            const Mat2 a = m->jacobian(t, z);
            const Mat2 f = m->MotionModel::jacobian(t, z);
            CHECK(std::abs(a.a11 - f.a11) + std::abs(a.a12 - f.a12) + std::abs(a.a21 - f.a21) +
                      std::abs(a.a22 - f.a22) <
                  1e-7);
            CHECK(norm(m->dt_forward(t, z) - m->MotionModel::dt_forward(t, z)) < 1e-7);
            CHECK(norm(m->dt_inverse(t, z) - m->MotionModel::dt_inverse(t, z)) < 1e-7);
        }
    }
}

TEST_CASE("fan-beam phase") {
    auto pf = make_fanbeam_phase(2.0, Rect::centered_square(1.0));
    CHECK(std::abs(pf->value(kPi / 2, {0, 0})) < 1e-15);
    // constant along a source ray
    const double t = 0.7;
    const Vec2 src = 2.0 * unit_from_angle(t);
    const Vec2 dir = Vec2{0.1, 0.2} - src;
    const double v0 = pf->value(t, src + 0.8 * dir);
    for (double lam : {0.6, 0.9, 1.0, 1.2})
        CHECK(std::abs(pf->value(t, src + lam * dir) - v0) < 1e-13);
    CHECK_THROWS_AS(make_fanbeam_phase(1.2, Rect::centered_square(1.0)), ConfigError);
}

TEST_CASE("fan to parallel relation") {
    auto a = fan_to_parallel(kPi / 2, 0.0, 1.0);
    CHECK(a.s == doctest::Approx(0.0));
    CHECK(a.beta == doctest::Approx(0.0));
    CHECK(a.jacobian == doctest::Approx(1.0));
    auto b = fan_to_parallel(0.0, kPi / 6, 2.0);
    CHECK(b.s == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.beta == doctest::Approx(kPi / 6 - kPi / 2));
    CHECK(b.jacobian == doctest::Approx(2.0 * std::cos(kPi / 6)));
    CHECK(std::abs(fan_to_parallel(0.0, kPi / 2, 1.0).jacobian) < 1e-15);
}

TEST_CASE("frames") {
    auto stat = make_static_phase();
    for (double t : {0.0, 0.4, 2.0, 5.5}) {
        auto f = frame_at(*stat, t, {0.2, -0.3});
        CHECK(f.J == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(f.h - 1.0) < 1e-15);
    }
    auto sync = make_dynamic_phase(make_rotation_motion(-1.0));
    auto f = frame_at(*sync, 0.9, {0.3, 0.4});
    CHECK(norm(f.m) < 1e-12);
    CHECK(std::abs(f.h) < 1e-12);
    CHECK(std::abs(cross(sync->fd_grad_x(0.9, {0.3, 0.4}), sync->fd_dt_grad_x(0.9, {0.3, 0.4}))) < 1e-6);
    auto co = make_dynamic_phase(make_rotation_motion(1.0));
    CHECK(frame_at(*co, 1.3, {0.1, 0.5}).h == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(frame_at(*stat, 0.0, {1.1, 0.0}), DomainError);
}

TEST_CASE("homogeneous extension") {
    auto stat = make_static_phase();
    const Vec2 x{0.3, -0.2};
    for (double t : {0.1, 1.0, 3.0}) {
        auto e = homogeneous_extension(*stat, unit_from_angle(t), x, t);
        CHECK(e.hessian_det == doctest::Approx(1.0).epsilon(1e-14));
    }
    std::vector<PhasePtr> fams = {stat, make_dynamic_phase(make_breathing_motion(0.1)),
                                  make_fanbeam_phase(3.0)};
    for (const auto& pf : fams) {
        const Vec2 th{0.6, 0.8};
        const double tref = std::atan2(th.y, th.x);
        auto e1 = homogeneous_extension(*pf, th, x, tref);
        for (double lam : {2.0, 10.0}) {
            auto e = homogeneous_extension(*pf, lam * th, x, tref);
            CHECK(std::abs(e.value - lam * e1.value) <= 1e-12 * std::abs(lam * e1.value));
        }
        // mixed Hessian against finite differences of the extension itself
        const double d = 1e-4;
        auto val = [&](Vec2 a, Vec2 b) { return homogeneous_extension(*pf, a, b, tref).value; };
        Mat2 fd;
        double* entries[2][2] = {{&fd.a11, &fd.a12}, {&fd.a21, &fd.a22}};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Vec2 ei = i == 0 ? Vec2{d, 0} : Vec2{0, d};
                const Vec2 ej = j == 0 ? Vec2{d, 0} : Vec2{0, d};
                *entries[i][j] = (val(th + ei, x + ej) - val(th + ei, x - ej) - val(th - ei, x + ej) +
                                  val(th - ei, x - ej)) /
                                 (4 * d * d);
            }
        CHECK(rel_err(fd.det(), e1.hessian_det) < 1e-4);
        CHECK(std::abs(e1.hessian_det - frame_at(*pf, tref, x).h) < 1e-12 * std::max(1.0, std::abs(e1.hessian_det)));
    }
    CHECK_THROWS_AS(homogeneous_extension(*stat, {-1.0, 0.0}, x, 0.0), BranchError);
    CHECK_THROWS_AS(homogeneous_extension(*stat, {0.0, 0.0}, x, 0.0), BranchError);
}

TEST_CASE("tracing level curves") {
    auto stat = make_static_phase();
    auto c = trace_level_curve(*stat, 0.0, 0.0, {0.05, 0.3}, 0.01);
    REQUIRE(c.points.size() > 100);
    double maxx = 0.0;
    for (auto p : c.points) maxx = std::max(maxx, std::abs(p.x));
    CHECK(maxx < 1e-8);
    CHECK(c.points.front().y < -1.0);
    CHECK(c.points.back().y > 1.0);
    for (std::size_t i = 1; i < c.arc_lengths.size(); ++i) {
        CHECK(c.arc_lengths[i] > c.arc_lengths[i - 1]);
        const double seg = c.arc_lengths[i] - c.arc_lengths[i - 1];
        CHECK(seg >= 0.25 * 0.01);
        CHECK(seg <= 0.01 * (1 + 1e-6));
    }
    // normal is orthogonal to the traced tangent
    auto f = frame_at(*stat, 0.0, c.points[50]);
    const Vec2 tan = (c.points[51] - c.points[49]) / norm(c.points[51] - c.points[49]);
    CHECK(std::abs(dot(f.nu, tan)) < 1e-6);

    // fan-beam level sets are rays through the source
    auto fan = make_fanbeam_phase(3.0);
    const double t = 0.4;
    const double s = fan->value(t, {0.2, 0.1});
    auto r = trace_level_curve(*fan, s, t, {0.2, 0.1}, 0.01);
    const Vec2 src = 3.0 * unit_from_angle(t);
    for (auto p : r.points) {
        CHECK(std::abs(fan->value(t, p) - s) < fan->curve_tol());
        const Vec2 a = p - src, b = r.points.front() - src;
        CHECK(std::abs(cross(a, b)) / (norm(a) * norm(b)) < 1e-6);
    }

    // closed curves close
    auto breath = make_dynamic_phase(make_breathing_motion(0.05));
    auto bc = trace_level_curve(*breath, 0.2, 1.0, {0.2, 0.0}, 0.01);
    for (auto p : bc.points) CHECK(std::abs(breath->value(1.0, p) - 0.2) < breath->curve_tol());

    CHECK_THROWS_AS(trace_level_curve(*stat, 5.0, 0.0, {0.0, 0.0}, 0.01), SeedProjectionError);
}

TEST_CASE("weights") {
    auto w = make_constant_weight(2.0);
    CHECK((*w)(0.3, {0.1, 0.1}) == 2.0);
    CHECK_THROWS_AS(ConstantWeight(0.0), ConfigError);
    LagrangianWeight lw(make_identity_motion(), make_constant_weight(1.0));
    CHECK(lw(0.7, {0.2, 0.3}) == doctest::Approx(1.0));
    BumpWeight bw(make_constant_weight(1.0), 0.3, {0, 0}, 0.2);
    CHECK(bw(0.0, {0, 0}) == doctest::Approx(1.3));
}
