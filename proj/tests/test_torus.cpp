#include "doctest.h"

#include <cmath>
#include <random>

#include "vpme/torus.hpp"

using namespace vpme;

TEST_CASE("wrap reduces modulo one into [-1/2, 1/2)") {
    CHECK(wrap(0.75) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(wrap(-0.5) == -0.5);
    CHECK(wrap(0.5) == -0.5);
    Point p = wrap(Point{1.3, -0.6, 0}, 2);
    CHECK(p[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(p[2] == 0.0);
}

TEST_CASE("torus distance") {
    CHECK(distance(Point{0.45}, Point{-0.45}, 1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(distance(Point{0.1, 0.2}, Point{0.1, 0.2}, 2) == 0.0);
    // Oracle: minimum over integer translates in {-1,0,1}^2.
    Point x{0.4, 0.4}, y{-0.4, -0.4};
    double best = 1e9;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) best = std::min(best, std::hypot(x[0] - y[0] + a, x[1] - y[1] + b));
    CHECK(distance(x, y, 2) == doctest::Approx(best).epsilon(1e-14));
    CHECK(best == doctest::Approx(0.28284271247461901).epsilon(1e-14));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 1000; ++t) {
        Point p{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)};
        double d = distance(p, q, 3);
        CHECK(d <= std::sqrt(3.0) / 2 + 1e-15);
        CHECK(d == doctest::Approx(distance(q, p, 3)).epsilon(1e-15));
        CHECK(d <= std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                             (p[2] - q[2]) * (p[2] - q[2])) + 1e-15);
    }
}

TEST_CASE("grid layout") {
    TorusGrid g = make_grid(2, 8);
    CHECK(g.size() == 64);
    CHECK(g.node(g.index({4, 4, 0}))[0] == 0.0);
    CHECK(g.node(g.index({0, 3, 0}))[1] == doctest::Approx(-0.5 + 3.0 / 8));
    CHECK(g.index({1, 2, 0}) == 10);
    CHECK(g.nearest(Point{0.01, -0.49}) == g.index({4, 0, 0}));
    CHECK_THROWS_AS(make_grid(4, 8), DomainError);
    CHECK_THROWS_AS(make_grid(2, 12), DomainError);
}

TEST_CASE("covering mesh") {
    auto m1 = covering_mesh(1, 0.25);
    CHECK(m1.size() == covering_mesh_size(1, 0.25));
    CHECK(m1.size() <= 4);
    CHECK(covering_mesh(2, 0.1).size() == 225);
    CHECK_THROWS_AS(covering_mesh(1, 0.6), DomainError);

    for (int d = 1; d <= 3; ++d) {
        for (double s : {0.3, 0.12}) {
            auto mesh = covering_mesh(d, s);
            double lim = std::ceil(std::sqrt(double(d)) / s);
            CHECK(mesh.size() <= std::pow(lim, d));
            std::mt19937_64 rng(d * 100 + static_cast<int>(s * 100));
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            double worst = 0;
            for (int t = 0; t < 10000; ++t) {
                Point p{u(rng), d > 1 ? u(rng) : 0.0, d > 2 ? u(rng) : 0.0};
                double best = 1e9;
                for (const Point& q : mesh) best = std::min(best, distance(p, q, d));
                worst = std::max(worst, best);
            }
            CHECK(worst <= s);
        }
    }
}

TEST_CASE("spectral calculus on resolved modes") {
    TorusGrid g = make_grid(2, 32);
    auto f = sample(g, [](const Point& x) { return std::cos(2 * M_PI * x[0]); });
    VectorField grad = gradient(f);
    ScalarField inv = laplacian_inverse(f);
    double eg = 0, ei = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point x = g.node(i);
        eg = std::max(eg, std::abs(grad.c[0][i] + 2 * M_PI * std::sin(2 * M_PI * x[0])) + std::abs(grad.c[1][i]));
        ei = std::max(ei, std::abs(inv.v[i] - std::cos(2 * M_PI * x[0]) / (4 * M_PI * M_PI)));
    }
    CHECK(eg < 1e-12);
    CHECK(ei < 1e-14);
    VectorField z = gradient(ScalarField(g, 3.0));
    CHECK(z.sup_norm() < 1e-13);
}

TEST_CASE("gradient of laplacian inverse of minus divergence is the identity on gradient fields") {
    TorusGrid g = make_grid(2, 32);
    auto phi = sample(g, [](const Point& x) {
        return std::sin(2 * M_PI * (x[0] + 2 * x[1])) + 0.3 * std::cos(2 * M_PI * 3 * x[1]);
    });
    VectorField u = gradient(phi);
    ScalarField div = divergence(u);
    for (double& v : div.v) v = -v;
    VectorField back = gradient(laplacian_inverse(div));
    double err = 0, mag = u.sup_norm();
    for (int a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(back.c[a][i] - u.c[a][i]));
    CHECK(err / mag < 1e-10);
}
