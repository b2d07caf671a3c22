#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shlab/errors.hpp"
#include "shlab/geometry.hpp"
#include "support.hpp"

using namespace shlab;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;

double vq_reference(const AmbientVector& x) { return std::acos(std::min(1.0, std::abs(x.x3))); }
}  // namespace

TEST_CASE("sphere points are validated, never normalized") {
    CHECK_NOTHROW(SpherePoint({0.6, 0.8, 0.0}));
    CHECK_NOTHROW(SpherePoint({1.0 + 5e-10, 0.0, 0.0}));
    CHECK_THROWS_AS(SpherePoint({1.1, 0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(SpherePoint({NAN, 0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(SpherePoint({INFINITY, 0.0, 0.0}), DomainError);
    const SpherePoint p({1.0 + 5e-10, 0.0, 0.0});
    CHECK(p.x1() == 1.0 + 5e-10);
}

TEST_CASE("geodesic distance examples") {
    CHECK(geodesic_distance(pole_q(), pole_q()) == 0.0);
    CHECK(geodesic_distance(pole_q(), -pole_q()) == Approx(pi).epsilon(1e-15));
    CHECK(geodesic_distance(pole_q(), aux_r()) == Approx(pi / 2).epsilon(1e-15));
    // Dot product slightly above 1 is clamped.
    const SpherePoint a({1.0 + 4e-10, 0.0, 0.0});
    CHECK(geodesic_distance(a, a) == 0.0);
}

TEST_CASE("geodesic distance is a metric on sampled points") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const SpherePoint x(testing::random_unit(1, 3 * i));
        const SpherePoint y(testing::random_unit(1, 3 * i + 1));
        const SpherePoint z(testing::random_unit(1, 3 * i + 2));
        const double xy = geodesic_distance(x, y);
        REQUIRE(xy == geodesic_distance(y, x));
        REQUIRE(xy >= 0.0);
        REQUIRE(xy <= pi);
        REQUIRE(xy <= geodesic_distance(x, z) + geodesic_distance(z, y) + 1e-12);
        REQUIRE(xy == Approx(testing::angle_between(x.coords(), y.coords())).epsilon(1e-7));
    }
}

TEST_CASE("radial projection") {
    const SpherePoint p = sphere_project({2.0, 0.0, 0.0});
    CHECK(p.coords() == AmbientVector{1.0, 0.0, 0.0});
    const SpherePoint u = sphere_project({0.6, 0.8, 0.0});
    CHECK(u.x1() == Approx(0.6).epsilon(1e-15));
    CHECK(u.x2() == Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(sphere_project({0.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("geodesic direction") {
    const AmbientVector y = geodesic_direction(aux_r(), pole_q());
    CHECK(y == kPoleQ);
    const AmbientVector ym = geodesic_direction(aux_r(), -pole_q());
    CHECK(ym == -kPoleQ);
    CHECK_THROWS_AS(geodesic_direction(pole_q(), pole_q()), UndefinedDirectionError);
    CHECK_THROWS_AS(geodesic_direction(-pole_q(), pole_q()), UndefinedDirectionError);

    for (std::uint64_t i = 0; i < 1000; ++i) {
        const SpherePoint x(testing::random_unit(2, 2 * i));
        const SpherePoint p(testing::random_unit(2, 2 * i + 1));
        const AmbientVector d = geodesic_direction(x, p);
        REQUIRE(norm(d) == Approx(1.0).epsilon(1e-14));
        REQUIRE(std::abs(dot(d, x.coords())) <= 1e-14);
        const AmbientVector anti = geodesic_direction(x, -p);
        REQUIRE(norm(d + anti) <= 1e-14);
        const double h = 1e-6;
        const SpherePoint moved = sphere_project(x.coords() + h * d);
        REQUIRE(geodesic_distance(moved, p) < geodesic_distance(x, p));
    }
}

TEST_CASE("base fields") {
    const auto [b1q, b2q] = base_fields(pole_q());
    CHECK(b1q == AmbientVector{});
    CHECK(norm(b2q) == 0.0);
    const auto [b1r, b2r] = base_fields(aux_r());
    CHECK(b1r == kPoleQ);
    CHECK(b2r == AmbientVector{1.0, 0.0, 0.0});

    for (std::uint64_t i = 0; i < 10000; ++i) {
        const SpherePoint x(testing::random_unit(3, i));
        const auto [b1, b2] = base_fields(x);
        REQUIRE(std::abs(dot(b1, x.coords())) <= 1e-15);
        REQUIRE(std::abs(dot(b2, x.coords())) <= 1e-15);
        REQUIRE(std::abs(dot(b1, b2)) <= 1e-15);
    }
}

TEST_CASE("inner-product identities with the direction toward q") {
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const SpherePoint x(testing::random_unit(4, i));
        const auto [b1, b2] = base_fields(x);
        const AmbientVector y = geodesic_direction(x, pole_q());
        REQUIRE(std::abs(dot(b1, y) - std::sqrt(1.0 - x.x3() * x.x3())) <= 1e-12);
        REQUIRE(std::abs(dot(b2, y)) <= 1e-12);
    }
}

TEST_CASE("smooth transition") {
    CHECK(smooth_transition(-1.0) == 0.0);
    CHECK(smooth_transition(0.0) == 0.0);
    CHECK(smooth_transition(1.0) == 1.0);
    CHECK(smooth_transition(2.0) == 1.0);
    CHECK(smooth_transition(0.5) == Approx(0.5).epsilon(1e-15));
    double prev = 0.0;
    for (int i = 1; i < 1000; ++i) {
        const double t = i / 1000.0;
        const double s = smooth_transition(t);
        // Near the ends the value rounds to exactly 0 or 1.
        if (t >= 0.1 && t <= 0.9) {
            REQUIRE(s > 0.0);
            REQUIRE(s < 1.0);
        }
        REQUIRE(s >= prev);
        REQUIRE(s + smooth_transition(1.0 - t) == Approx(1.0).epsilon(1e-14));
        prev = s;
    }
}

TEST_CASE("M1 examples") {
    CHECK(bump_m1(sphere_project({1.0, 0.5, 0.2})) == 0.0);
    CHECK(bump_m1(pole_q()) == 1.0);
    CHECK(bump_m1(sphere_project({1.0, 1.0, 0.0})) == 1.0);
    CHECK(bump_m1(sphere_project({-1.0, 0.5, 0.2})) == 1.0);
}

TEST_CASE("M1 zero and one sets") {
    std::size_t zeros = 0, ones = 0;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const AmbientVector x = testing::random_unit(5, i);
        const SpherePoint p(x);
        const double m = bump_m1(p);
        REQUIRE(m >= 0.0);
        REQUIRE(m <= 1.0);
        const double vq = vq_reference(x);
        const bool zero_set = x.x1 > 0.0 && x.x1 / 4 <= x.x2 && x.x2 <= 3 * x.x1 / 4 && vq >= pi / 4;
        const bool one_set = x.x2 >= 7 * x.x1 / 8 || x.x2 <= x.x1 / 8 || vq <= pi / 8;
        if (zero_set) {
            REQUIRE(m == 0.0);
            ++zeros;
        }
        if (one_set) {
            REQUIRE(m == 1.0);
            ++ones;
        }
    }
    CHECK(zeros >= 1000);
    CHECK(ones >= 1000);
}

TEST_CASE("M1 band samples concentrated in the zero set") {
    // Rejection sampling above only rarely lands in the band; sample it directly.
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double x1 = testing::uniform(6, 3 * i, 0.1, 1.0);
        const double x2 = x1 * testing::uniform(6, 3 * i + 1, 0.25, 0.75);
        const double planar = std::hypot(x1, x2);
        // x3 small enough that V_q >= pi/4.
        const double x3 = planar * testing::uniform(6, 3 * i + 2, -1.0, 1.0);
        const SpherePoint p = sphere_project({x1, x2, x3});
        REQUIRE(bump_m1(p) == 0.0);
    }
}

TEST_CASE("phi plateaus and support") {
    const TubeConfig t = TubeConfig::sphere();
    CHECK(phi({1.0, 0.0, 0.0}) == 1.0);
    CHECK(phi({2.0, 0.0, 0.0}) == 0.0);
    CHECK(phi({0.0, 0.0, 0.0}) == 0.0);
    for (int i = 0; i <= 100; ++i) {
        const double r = t.sharp_inner + (t.sharp_outer - t.sharp_inner) * i / 100.0;
        REQUIRE(phi({0.0, r, 0.0}) == 1.0);
    }
    for (double r : {0.0, 0.5, 13.0 / 16.0, 19.0 / 16.0, 1.5, 10.0}) REQUIRE(phi({0.0, 0.0, r}) == 0.0);
    double worst_slope = 0.0;
    for (int i = 1; i < 1000; ++i) {
        const double r = 13.0 / 16.0 + (7.0 / 8.0 - 13.0 / 16.0) * i / 1000.0;
        const double v = phi({r, 0.0, 0.0});
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        if (i >= 100 && i <= 900) REQUIRE((v > 0.0 && v < 1.0));
        const double h = 1e-7;
        worst_slope = std::max(worst_slope, std::abs(phi({r + h, 0.0, 0.0}) - phi({r - h, 0.0, 0.0})) / (2 * h));
    }
    CHECK(std::isfinite(worst_slope));
    CHECK(worst_slope < 200.0);
}

TEST_CASE("tube configuration") {
    const TubeConfig t = TubeConfig::sphere();
    CHECK_NOTHROW(t.validate());
    CHECK(t.eps == t.omega / 2);
    CHECK(t.omega_gradient_norm({1.0, 0.0, 0.0}) == 0.0);
    CHECK(t.in_tube({1.2, 0.0, 0.0}));
    CHECK_FALSE(t.in_tube({1.25, 0.0, 0.0}));
    CHECK_FALSE(t.in_tube({0.75, 0.0, 0.0}));
    CHECK(t.in_comega({2.0, 0.0, 0.0}));
    CHECK(t.in_comega({0.5, 0.0, 0.0}));
    CHECK_FALSE(t.in_comega({19.0 / 16.0, 0.0, 0.0}));
    TubeConfig bad = t;
    bad.eps = 0.2;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = t;
    bad.sharp_inner = 0.7;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("tube decomposition") {
    const auto [base, normal] = tube_decompose({1.1, 0.0, 0.0});
    CHECK(base.coords() == AmbientVector{1.0, 0.0, 0.0});
    CHECK(normal.x1 == Approx(0.1).epsilon(1e-14));
    const auto [b2, n2] = tube_decompose({1.0, 0.0, 0.0});
    CHECK(b2.coords() == AmbientVector{1.0, 0.0, 0.0});
    CHECK(norm(n2) == 0.0);
    CHECK_THROWS_AS(tube_decompose({0.5, 0.0, 0.0}), TubeMembershipError);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const AmbientVector y = testing::uniform(7, i, 0.76, 1.24) * testing::random_unit(7, i);
        const auto [b, n] = tube_decompose(y);
        REQUIRE(norm(b.coords() + n - y) <= 1e-15);
        REQUIRE(norm(cross(b.coords(), n)) <= 1e-15);
        REQUIRE(norm(n) < 0.25);
    }
}
