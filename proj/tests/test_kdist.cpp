#include "doctest.h"

#include <cmath>
#include <random>

#include "vpme/kdist.hpp"
#include "vpme/torus.hpp"

using namespace vpme;

namespace {

// Plain bisection on (b, 1) for j - a sqrt|log j| - b.
double bisect(double a, double b) {
    double lo = b, hi = 1.0 - 1e-16;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (mid - a * std::sqrt(-std::log(mid)) - b > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double residual(double a, double b, double j) { return std::abs(j - a * std::sqrt(-std::log(j)) - b); }

}  // namespace

TEST_CASE("implicit solve") {
    CHECK(solve_implicit(0.0, 0.01) == 0.01);
    double j = solve_implicit(0.01, 0.001);
    CHECK(residual(0.01, 0.001, j) <= 1e-13);
    // High-precision bisection oracle.
    CHECK(j == doctest::Approx(0.020692586844555845).epsilon(1e-13));
    CHECK(solve_implicit(0.05, 0.02) == doctest::Approx(0.096462435483443415).epsilon(1e-13));
    CHECK_THROWS_AS(solve_implicit(1.0, 0.01), DomainError);
    CHECK_THROWS_AS(solve_implicit(0.1, 0.5), DomainError);
    CHECK_THROWS_AS(solve_implicit(-0.1, 0.01), DomainError);
}

TEST_CASE("implicit solve on a 10x10 lattice: residual, oracle and monotonicity") {
    double J[10][10];
    for (int i = 0; i < 10; ++i)
        for (int k = 0; k < 10; ++k) {
            double a = 0.0 + 0.09 * i + 0.001, b = 0.0005 + 0.036 * k;
            J[i][k] = solve_implicit(a, b);
            CHECK(residual(a, b, J[i][k]) <= 1e-13);
            CHECK(J[i][k] == doctest::Approx(bisect(a, b)).epsilon(1e-12));
            if (i > 0) CHECK(J[i][k] > J[i - 1][k]);
            if (k > 0) CHECK(J[i][k] > J[i][k - 1]);
        }
}

TEST_CASE("J of t") {
    KineticDistanceParams p{0.05, 0.01, 0.02};
    std::vector<double> zero(20, 0.0);
    auto J = J_of_t(p, zero, zero);
    double expect = std::min(p.cap(), solve_implicit(p.alpha0, p.beta0));
    for (double j : J) CHECK(j == expect);
    std::vector<double> bad{0.0, 0.01, 0.005};
    CHECK_THROWS_AS(J_of_t(p, bad, std::vector<double>(3, 0.0)), DomainError);
    CHECK_THROWS_AS(J_of_t(KineticDistanceParams{0.2, 0.01, 0.01}, zero, zero), DomainError);
    std::vector<double> x{0, 0.001, 0.01, 0.08, 0.08}, v{0, 0, 0.002, 0.002, 0.003};
    auto Jt = J_of_t(p, x, v);
    CHECK(Jt[3] == p.cap());
    CHECK(Jt[4] == p.cap());
}

TEST_CASE("J basics on synthetic monotone series") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t below = 0;
    for (int s = 0; s < 100; ++s) {
        KineticDistanceParams p{0.01 + 0.1 * u(rng), 0.001 + 0.05 * u(rng), 0.001 + 0.05 * u(rng)};
        std::vector<double> x(200), v(200);
        double cx = 0, cv = 0, scale = 0.002 * std::pow(10.0, 2 * u(rng));
        for (int i = 0; i < 200; ++i) {
            cx += scale * u(rng) * u(rng);
            cv += scale * u(rng) * u(rng);
            x[i] = cx;
            v[i] = cv;
        }
        auto J = J_of_t(p, x, v);
        for (std::size_t i = 1; i < J.size(); ++i) CHECK(J[i] >= J[i - 1]);
        JBasicsReport rep = check_jbasics(p, J, x, v);
        CHECK(rep.ok());
        CHECK(rep.worst_fixed_point <= 1e-13);
        below += rep.below_cap;
    }
    CHECK(below > 500);
}

TEST_CASE("Gronwall audit") {
    KineticDistanceParams p{0.05, 0.01, 0.01};
    std::vector<double> x(101), v(101);
    for (int i = 0; i <= 100; ++i) {
        x[i] = 1e-4 * i * i / 100.0;
        v[i] = 2e-4 * i / 100.0;
    }
    auto J = J_of_t(p, x, v);
    GronwallAudit a = gronwall_audit(p, J, std::vector<double>(101, 0.0), 0.01);
    CHECK(a.ok());
    for (std::size_t i = 0; i < a.rhs.size(); ++i) CHECK(a.rhs[i] <= a.rhs[0] + 0.5 * a.time[i] + 1e-15);
    CHECK_THROWS_AS(gronwall_audit(p, J, std::vector<double>(5, 0.0), 0.01), DomainError);
    std::vector<double> field(101, 1e-3);
    GronwallAudit b = gronwall_audit(p, J, field, 0.01);
    for (double r : b.ratio) CHECK(std::isfinite(r));
    CHECK(b.to_json().find("\"violations\"") != std::string::npos);
}

TEST_CASE("log properties") {
    const double e1 = 1.0 / M_E;
    CHECK(e1 * -std::log(e1) == doctest::Approx(e1).epsilon(1e-15));
    CHECK(-std::log(e1) - 1 == doctest::Approx(0.0));
    double y = 0.1, x = y / std::sqrt(-std::log(y));
    CHECK(x * -std::log(x) <= 1.5 * y * std::sqrt(-std::log(y)));
    LogPropsReport rep = log_props_check(10000);
    CHECK(rep.ok());
    CHECK(rep.worst_twist_ratio <= 1.5);
}
