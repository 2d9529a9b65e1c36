#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "vpme/dynamics.hpp"

using namespace vpme;

namespace {

ParticleEnsemble make(int d, std::vector<double> x, std::vector<double> v) {
    ParticleEnsemble e;
    e.dim = d;
    e.x = std::move(x);
    e.v = std::move(v);
    return e;
}

double state_gap(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        s = std::max(s, std::abs(wrap(a.x[i] - b.x[i])));
        s = std::max(s, std::abs(a.v[i] - b.v[i]));
    }
    return s;
}

}  // namespace

TEST_CASE("policies") {
    CHECK(dt_policy(0.125, 1.0) == doctest::Approx(0.01));
    CHECK(dt_policy(0.125, 10.0) == doctest::Approx(0.125 / 40));
    CHECK(grid_policy(0.125) == 128);
    CHECK(grid_policy(0.1) == 256);
    SimulationConfig c;
    c.f0.theta = 0.01;
    c.T = 0.35;
    int steps = c.resolve();
    CHECK(steps * c.dt == doctest::Approx(0.35));
    CHECK(c.dt <= 0.01);
    SimulationConfig bad;
    bad.n = 64;
    CHECK_THROWS_AS(bad.resolve(), DomainError);
}

TEST_CASE("single particle free streams") {
    const double r = 0.125;
    TorusGrid g = make_grid(2, 128);
    ParticleSystem sys(make(2, {0.0, 0.0}, {0.3, 0.1}), g, r, 1e-12, true);
    const double dt = 0.01;
    double dev = 0;
    for (int s = 1; s <= 100; ++s) {
        sys.step(dt);
        const auto& e = sys.ensemble();
        dev = std::max(dev, std::abs(wrap(e.x[0] - 0.3 * s * dt)) + std::abs(wrap(e.x[1] - 0.1 * s * dt)));
    }
    CHECK(dev <= 1e-6);
}

TEST_CASE("mirror symmetric pair stays symmetric") {
    const double r = 0.125;
    TorusGrid g = make_grid(2, 128);
    ParticleSystem sys(make(2, {-0.1, 0.0, 0.1, 0.0}, {0.2, 0.0, -0.2, 0.0}), g, r, 1e-12, true);
    double asym = 0;
    for (int s = 0; s < 100; ++s) {
        sys.step(0.01);
        const auto& x = sys.ensemble().x;
        const auto& v = sys.ensemble().v;
        asym = std::max({asym, std::abs(wrap(x[0] + x[2])), std::abs(v[0] + v[2]), std::abs(x[1]), std::abs(x[3]),
                         std::abs(v[1]), std::abs(v[3])});
    }
    CHECK(asym <= 1e-8);
}

TEST_CASE("velocity Verlet is second order") {
    InitialDatum f0;
    f0.dim = 2;
    f0.theta = 0.01;
    f0.amplitude = 0.3;
    ParticleEnsemble X0 = sample_iid(f0, 64, 17);
    TorusGrid g = make_grid(2, 128);
    const double T = 0.48;
    auto run = [&](double dt) {
        ParticleSystem sys(X0, g, 0.125, 1e-13, true);
        int steps = static_cast<int>(std::lround(T / dt));
        for (int s = 0; s < steps; ++s) sys.step(dt);
        return sys.ensemble();
    };
    const double dt = 0.04;
    ParticleEnsemble ref = run(dt / 8), a = run(dt), b = run(dt / 2);
    double ea = state_gap(a, ref), eb = state_gap(b, ref);
    REQUIRE(ea > 0);
    CHECK(eb / ea == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("auxiliary particle coinciding with the reference follows it") {
    InitialDatum f0;
    f0.dim = 2;
    f0.theta = 0.01;
    f0.amplitude = 0.3;
    ParticleEnsemble R0 = sample_iid(f0, 256, 3);
    TorusGrid g = make_grid(2, 128);
    ParticleSystem ref(R0, g, 0.125, 1e-12, true);
    PassiveSystem aux(R0, ref.solver());
    for (int s = 0; s < 50; ++s) {
        ref.step(0.01);
        aux.step(0.01, ref.solver());
    }
    CHECK(state_gap(ref.ensemble(), aux.ensemble()) <= 1e-12);
}

TEST_CASE("uniform reference: auxiliary particles free stream and keep their law") {
    InitialDatum f0;
    f0.dim = 2;
    f0.theta = 0.01;
    TorusGrid g = make_grid(2, 128);
    const ParticleEnsemble W0 = sample_iid(f0, 64, 22);
    auto deviation = [&](ParticleEnsemble R0, double& m0, double& m1, double& sigma) {
        ParticleSystem ref(std::move(R0), g, 0.125, 1e-12, true);
        PassiveSystem aux(W0, ref.solver());
        for (int s = 0; s < 100; ++s) {
            ref.step(0.01);
            aux.step(0.01, ref.solver());
        }
        const auto& Y = aux.ensemble();
        double dev = 0, sq = 0;
        m0 = m1 = 0;
        for (std::size_t i = 0; i < W0.size(); ++i) {
            double e0 = 0, e1 = 0;
            for (int a = 0; a < 2; ++a) {
                dev = std::max(dev, std::abs(wrap(Y.x[2 * i + a] - W0.x[2 * i + a] - W0.v[2 * i + a])));
                e0 += W0.v[2 * i + a] * W0.v[2 * i + a];
                e1 += Y.v[2 * i + a] * Y.v[2 * i + a];
            }
            m0 += e0;
            m1 += e1;
            sq += e0 * e0;
        }
        const double n = W0.size();
        m0 /= n;
        m1 /= n;
        sigma = std::sqrt((sq / n - m0 * m0) / n);
        return dev;
    };
    double m0, m1, sigma;
    // Quiet lattice reference: the density is uniform up to deposition error.
    double quiet = deviation(sample_quiet(f0, 16384), m0, m1, sigma);
    CHECK(quiet <= 1e-3);
    CHECK(std::abs(m1 - m0) <= 3 * sigma);
    // iid reference: the deviation is set by the density noise, about ||K_r||_2 / sqrt(M) t^2 / 2.
    double iid = deviation(sample_iid(f0, 16384, 21), m0, m1, sigma);
    MESSAGE("free-streaming deviation with an iid reference of 16384: " << iid);
    CHECK(iid <= 5e-3);
    CHECK(std::abs(m1 - m0) <= 3 * sigma);
}

TEST_CASE("paired run trackers") {
    SimulationConfig c;
    c.f0.dim = 2;
    c.f0.theta = 0.01;
    c.f0.amplitude = 0.2;
    c.N = 2048;
    c.r = std::pow(2048.0, -0.4);
    c.kappa = 4;
    c.T = 1.0;
    c.seed = 5;
    PairedTrajectory tr = run_pair(c);
    REQUIRE(!tr.series.empty());
    CHECK(tr.series.front().time == 0.0);
    CHECK(tr.series.front().supX == 0.0);
    CHECK(tr.series.front().supV == 0.0);
    double run = 0;
    for (const SeriesRow& s : tr.series) {
        CHECK(std::isfinite(s.supX));
        run = std::max(run, s.supX);
    }
    CHECK(tr.run_sup_x == run);
    CHECK(std::isfinite(tr.distance()));
    CHECK(tr.series.back().time == doctest::Approx(1.0));
    std::ostringstream os;
    write_series_csv(os, tr);
    CHECK(os.str().rfind("time,supX,supV,maxField,energyProxy\n", 0) == 0);
}

TEST_CASE("thread count resolution and parallel_for") {
    unsetenv("VPME_THREADS");
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
    setenv("VPME_THREADS", "5", 1);
    CHECK(resolve_threads(2) == 5);
    unsetenv("VPME_THREADS");
    std::vector<int> hit(100, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
        if (i == 7) throw DomainError("boom");
    }));
}
