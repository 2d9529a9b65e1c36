#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "vpme/ensemble.hpp"

using namespace vpme;

namespace {

// Pearson statistic for 16 bins; the 1e-3 critical value at 15 dof is 37.697.
constexpr double kChi2Crit15 = 37.697;

double chi_square(const std::vector<double>& counts, const std::vector<double>& expected) {
    double s = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += (counts[i] - expected[i]) * (counts[i] - expected[i]) / expected[i];
    return s;
}

}  // namespace

TEST_CASE("uniform positions pass a chi-square test on 16 cells") {
    InitialDatum f0;
    f0.dim = 2;
    f0.theta = 0.5;
    const std::size_t N = 100000;
    ParticleEnsemble e = sample_iid(f0, N, 2024);
    std::vector<double> counts(16, 0), expected(16, N / 16.0);
    for (std::size_t i = 0; i < N; ++i) {
        int a = std::min(3, int((e.x[2 * i] + 0.5) * 4)), b = std::min(3, int((e.x[2 * i + 1] + 0.5) * 4));
        counts[a * 4 + b] += 1;
    }
    CHECK(chi_square(counts, expected) < kChi2Crit15);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < N; ++i) {
        sx += e.x[2 * i];
        sy += e.x[2 * i + 1];
    }
    CHECK(std::abs(sx / N) < 4 * std::sqrt(1.0 / 12 / N));
    CHECK(std::abs(sy / N) < 4 * std::sqrt(1.0 / 12 / N));
}

TEST_CASE("cosine marginal passes a chi-square test on 16 bins") {
    InitialDatum f0;
    f0.dim = 1;
    f0.amplitude = 0.4;
    const std::size_t N = 100000;
    ParticleEnsemble e = sample_iid(f0, N, 99);
    std::vector<double> counts(16, 0), expected(16);
    for (int j = 0; j < 16; ++j) {
        double a = -0.5 + j / 16.0, b = a + 1 / 16.0;
        double mass = (b - a) + f0.amplitude * (std::sin(2 * M_PI * b) - std::sin(2 * M_PI * a)) / (2 * M_PI);
        expected[j] = mass * N;
    }
    for (double x : e.x) counts[std::min(15, int((x + 0.5) * 16))] += 1;
    CHECK(chi_square(counts, expected) < kChi2Crit15);
    CHECK(inverse_axis_cdf(0.5, 0.4) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("velocities are truncated Maxwellians") {
    InitialDatum f0;
    f0.dim = 2;
    f0.theta = 0.04;
    ParticleEnsemble e = sample_iid(f0, 20000, 5);
    double m2 = 0;
    for (double v : e.v) {
        CHECK(std::abs(v) <= f0.vmax());
        m2 += v * v;
    }
    m2 /= e.v.size();
    CHECK(m2 == doctest::Approx(f0.theta).epsilon(0.05));
}

TEST_CASE("sampling is deterministic and seeds split") {
    InitialDatum f0;
    f0.dim = 3;
    f0.amplitude = 0.2;
    ParticleEnsemble a = sample_iid(f0, 500, 42), b = sample_iid(f0, 500, 42), c = sample_iid(f0, 500, 43);
    CHECK(a.x == b.x);
    CHECK(a.v == b.v);
    CHECK(a.x != c.x);
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    ParticleEnsemble one = sample_iid(f0, 1, 7);
    CHECK(one.size() == 1);
    ParticleEnsemble q = sample_quiet(f0, 512);
    CHECK(q.size() == 512);
    CHECK_THROWS_AS(sample_quiet(f0, 500), DomainError);
    std::ostringstream os;
    write_csv(os, 3, one);
    CHECK(os.str().rfind("trial,particle,x1,x2,x3,v1,v2,v3\n3,0,", 0) == 0);
}

TEST_CASE("deposition") {
    Mollifier chi(2);
    const double r = 0.125;
    TorusGrid g = make_grid(2, 128);

    ParticleEnsemble one;
    one.dim = 2;
    Point node = g.node(g.index({70, 40, 0}));
    one.x = {node[0], node[1]};
    one.v = {0, 0};
    std::vector<double> raw;
    deposit_into(one.x.data(), 1, r, g, chi, raw, false);
    double err = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(raw[i] - chi_r(chi, r, displacement(g.node(i), node, 2))));
    CHECK(err <= 1e-12 * chi_r(chi, r, Point{}));

    InitialDatum f0;
    f0.dim = 2;
    f0.amplitude = 0.3;
    ParticleEnsemble e = sample_iid(f0, 1024, 8);
    ScalarField rho = deposit(e, r, g, chi);
    CHECK(std::abs(rho.mean() - 1) <= 1e-8);
    CHECK(rho.min() >= 0);
    double mass = deposit_into(e.x.data(), e.size(), r, g, chi, raw, false);
    CHECK(std::abs(mass - 1) < 1e-5);
    double top = 0;
    for (double v : raw) top = std::max(top, v);
    CHECK(top <= chi.profile(0.0) / (r * r) * (1 + 1e-12));
}

TEST_CASE("empirical convolution") {
    Mollifier chi(2);
    const double r = 0.125;
    InitialDatum f0;
    f0.dim = 2;
    ParticleEnsemble e = sample_iid(f0, 1, 1);
    auto mesh = covering_mesh(2, 0.1);
    auto g = [&](const Point& d) { return chi_r(chi, r, d); };
    auto vals = empirical_convolution(g, e, mesh);
    for (std::size_t m = 0; m < mesh.size(); ++m)
        CHECK(vals[m] == doctest::Approx(chi_r(chi, r, displacement(mesh[m], e.position(0), 2))).epsilon(1e-14));
}
