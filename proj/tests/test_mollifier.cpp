#include "doctest.h"

#include <cmath>
#include <random>

#include "vpme/mollifier.hpp"

using namespace vpme;

TEST_CASE("mollifier normalization constants") {
    // Oracle: 1 / int_{B_1} exp(-1/(1-|x|^2)) dx by adaptive quadrature at 30 digits.
    CHECK(Mollifier(1).constant() == doctest::Approx(2.25228362104358101).epsilon(1e-12));
    CHECK(Mollifier(2).constant() == doctest::Approx(2.14356577579223660).epsilon(1e-12));
    CHECK(Mollifier(3).constant() == doctest::Approx(2.26711673960832646).epsilon(1e-12));
}

TEST_CASE("chi_r pointwise") {
    Mollifier chi(2);
    const double r = 0.125;
    CHECK(chi_r(chi, r, Point{r, 0, 0}) == 0.0);
    CHECK(chi_r(chi, r, Point{0.3, 0.2, 0}) == 0.0);
    CHECK(chi_r(chi, r, Point{}) == doctest::Approx(chi.profile(0.0) / (r * r)).epsilon(1e-14));
    CHECK(chi.profile(0.0) == doctest::Approx(chi.constant() * std::exp(-1.0)).epsilon(1e-14));
    for (double t = 0; t < 1; t += 0.01237)
        CHECK(chi.profile_fast(t) == doctest::Approx(chi.profile(t)).epsilon(1e-13));
    CHECK(chi_r(chi, r, Point{0.02, -0.05, 0}) == doctest::Approx(chi_r(chi, r, Point{1.02, 0.95, 0})).epsilon(1e-13));
}

TEST_CASE("grid quadrature of chi_r") {
    Mollifier chi(2);
    // Oracle: the same node sum evaluated independently in double precision (numpy).
    TorusGrid g = make_grid(2, 256);
    CHECK(sample_chi_r(chi, 0.125, g).integral() == doctest::Approx(0.9999999584524467).epsilon(1e-13));
    TorusGrid g2 = make_grid(2, 128);
    CHECK(sample_chi_r(chi, 0.125, g2).integral() == doctest::Approx(1.0000050745011904).epsilon(1e-13));
    TorusGrid g3 = make_grid(2, 512);
    CHECK(std::abs(sample_chi_r(chi, 0.125, g3).integral() - 1.0) < 1e-9);
}

TEST_CASE("psi_r support and modulus inequality") {
    Mollifier chi(2);
    const double r = 0.125;
    TorusGrid g = make_grid(2, 128);
    ModulusField psi = psi_r(chi, r, g);
    const double cell = std::sqrt(2.0) / g.n;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (norm(g.node(i), 2) >= 2 * r + cell + 1e-12) CHECK(psi.v[i] == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5), w(-1, 1);
    int checked = 0;
    while (checked < 10000) {
        Point y{u(rng) * 0.6, u(rng) * 0.6, 0};
        Point dx{w(rng) * r, w(rng) * r, 0};
        if (norm(dx, 2) >= r) continue;
        Point x{y[0] + dx[0], y[1] + dx[1], 0};
        ++checked;
        double lhs = std::abs(chi_r(chi, r, x) - chi_r(chi, r, y));
        REQUIRE(lhs <= psi.eval(y) * distance(x, y, 2));
    }

    ModulusField eta = eta_r(chi, r, g);
    checked = 0;
    while (checked < 10000) {
        Point y{u(rng) * 0.6, u(rng) * 0.6, 0};
        Point dx{w(rng) * 2 * r, w(rng) * 2 * r, 0};
        if (norm(dx, 2) >= 2 * r) continue;
        Point x{y[0] + dx[0], y[1] + dx[1], 0};
        ++checked;
        Point gx = chi.gradient_r(r, x), gy = chi.gradient_r(r, y);
        double lhs = std::hypot(gx[0] - gy[0], gx[1] - gy[1]);
        REQUIRE(lhs <= eta.eval(y) * norm(dx, 2));
    }
}

TEST_CASE("resolution guard") {
    Mollifier chi(2);
    CHECK_THROWS_AS(check_resolution(0.125, make_grid(2, 64)), DomainError);
    CHECK_NOTHROW(check_resolution(0.125, make_grid(2, 128)));
    CHECK_THROWS_AS(check_resolution(0.6, make_grid(2, 128)), DomainError);
}
