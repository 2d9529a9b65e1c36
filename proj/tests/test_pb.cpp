#include "doctest.h"

#include <cmath>

#include "vpme/experiments.hpp"
#include "vpme/pb_solver.hpp"

using namespace vpme;

TEST_CASE("uniform density has zero potential") {
    TorusGrid g = make_grid(2, 64);
    PotentialSolution s = solve_pb(ScalarField(g, 1.0));
    CHECK(s.phi.lp_norm(INFINITY) <= 1e-12);
    CHECK(s.field.sup_norm() <= 1e-12);
    LowerBoundReport lb = lower_bound_check(s, ScalarField(g, 1.0), 2.0);
    CHECK(lb.ok());
    CHECK(std::abs(lb.mean_phi) <= 1e-12);
    CHECK(lb.osc <= 1e-12);
}

TEST_CASE("manufactured solution") {
    ManufacturedResult m = pb_manufactured(2, 128, 1e-12);
    CHECK(m.sup_error <= 1e-8);
    CHECK(m.uniform_phi_sup <= 1e-12);
    ManufacturedResult m1 = pb_manufactured(1, 64, 1e-12);
    CHECK(m1.sup_error <= 1e-8);
}

TEST_CASE("L^p estimates, lower bound and neutrality on random densities") {
    TorusGrid g = make_grid(2, 64);
    for (int i = 0; i < 20; ++i) {
        ScalarField rho = random_density(g, derive_seed(7, 5, i));
        CHECK(rho.min() > 0);
        CHECK(std::abs(rho.mean() - 1) < 1e-12);
        PbOptions opt;
        opt.tol = 1e-11;
        PotentialSolution s = solve_pb(rho, opt);
        CHECK(s.residual_sup <= opt.tol);
        for (int k = 0; k < 3; ++k) CHECK(s.diag.exp_norms[k] <= s.diag.rho_norms[k] * (1 + 10 * opt.tol));
        CHECK(s.diag.clamp_hits == 0);
        double neutral = 0;
        for (std::size_t j = 0; j < g.size(); ++j) neutral += (rho.v[j] - std::exp(s.phi.v[j])) * g.cell_volume();
        CHECK(std::abs(neutral) <= 1e-8);
        for (double p : {2.0, double(INFINITY)}) {
            LowerBoundReport lb = lower_bound_check(s, rho, p);
            CHECK(lb.ok());
            CHECK(std::isfinite(lb.green_norm));
        }
    }
}

TEST_CASE("solver preconditions and iteration cap") {
    TorusGrid g = make_grid(2, 32);
    CHECK_THROWS_AS(solve_pb(ScalarField(g, 2.0)), DomainError);
    ScalarField rho = random_density(g, 3, 0.9);
    PbOptions opt;
    opt.tol = 1e-12;
    opt.max_iter = 2;
    try {
        solve_pb(rho, opt);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.last_residual > 1e-12);
        CHECK(e.iterations == 2);
    }
}

TEST_CASE("potential stability census") {
    TorusGrid g = make_grid(2, 64);
    ScalarField rho = random_density(g, 1);
    StabilityGap z = field_stability_gap(rho, rho);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    double envelope = 0;
    for (int i = 0; i < 50; ++i) {
        ScalarField a = random_density(g, derive_seed(9, 0, i), 0.9);
        ScalarField b = random_density(g, derive_seed(9, 1, i), 0.9);
        CHECK(std::max(a.max(), b.max()) <= 4);
        StabilityGap s = field_stability_gap(a, b);
        REQUIRE(s.rhs > 0);
        envelope = std::max(envelope, s.lhs / s.rhs);
        CHECK(std::isfinite(s.lhs / s.rhs));
    }
    CHECK(envelope < INFINITY);
    ScalarField p = random_density(g, 77);
    ScalarField q = p;
    for (std::size_t j = 0; j < g.size(); ++j) q.v[j] += 0.01 * std::cos(2 * M_PI * g.node(j)[1]);
    StabilityGap near = field_stability_gap(p, q);
    CHECK(std::isfinite(near.lhs / near.rhs));
}
