#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "vpme/mollifier.hpp"
#include "vpme/torus.hpp"

namespace vpme {

// f0(x, v) = rho0(x) * Maxwellian_theta(v) truncated at |v| <= 8 sqrt(theta),
// rho0(x) = prod_a (1 + amplitude cos(2 pi x_a)).
struct InitialDatum {
    int dim = 2;
    double theta = 1.0;
    double amplitude = 0.0;

    void validate() const;
    double vmax() const;
    double spatial_density(const Point& x) const;
    double density_sup() const;
    ScalarField marginal(const TorusGrid& g) const;
};

// Inverse of the per-axis CDF of 1 + a cos(2 pi x) on [-1/2, 1/2), by
// bisection to 1e-14.
double inverse_axis_cdf(double u, double a);

struct ParticleEnsemble {
    int dim = 0;
    std::vector<double> x;  // size N*dim, wrapped into [-1/2, 1/2)
    std::vector<double> v;

    std::size_t size() const { return dim ? x.size() / dim : 0; }
    Point position(std::size_t i) const;
    Point velocity(std::size_t i) const;
};

// Counter-mode seed splitting.
uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index);

// iid draws from f0; identical output for identical seeds.
ParticleEnsemble sample_iid(const InitialDatum& f0, std::size_t N, uint64_t seed);

// Deterministic stratified ("quiet") draw: positions on the image of a
// regular lattice under the per-axis inverse CDF, velocities from a Halton
// sequence pushed through the normal quantile. N must be a perfect d-th power.
ParticleEnsemble sample_quiet(const InitialDatum& f0, std::size_t N);

// (1/N) sum_j chi_r(y - X_j) on grid nodes, evaluated directly on the nodes
// inside each support ball, then rescaled to unit mass.
ScalarField deposit(const ParticleEnsemble& ens, double r, const TorusGrid& g, const Mollifier& chi);
// Raw form used by the integrators; returns the mass before rescaling.
// With normalize = false the node values are the exact sums.
double deposit_into(const double* x, std::size_t N, double r, const TorusGrid& g, const Mollifier& chi,
                    std::vector<double>& out, bool normalize = true);

// (1/N) sum_j g(y_m - X_j) for each mesh point, with the displacement wrapped.
std::vector<double> empirical_convolution(const std::function<double(const Point&)>& g, const ParticleEnsemble& ens,
                                          const std::vector<Point>& mesh);

// CSV rows "trial,particle,x1..xd,v1..vd" (header written when requested).
void write_csv(std::ostream& os, int trial, const ParticleEnsemble& ens, bool header = true);

}  // namespace vpme
