#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "vpme/ensemble.hpp"
#include "vpme/mollifier.hpp"
#include "vpme/pb_solver.hpp"
#include "vpme/spline.hpp"

namespace vpme {

// dt = min(dt_max, r / (4 vmax)).
double dt_policy(double r, double vmax, double dt_max = 0.01);
// Smallest power of two >= factor / r.
int grid_policy(double r, double factor = 16.0);

struct SimulationConfig {
    InitialDatum f0;
    std::size_t N = 128;
    double r = 0.125;
    int n = 0;         // 0: grid_policy(r)
    double dt = 0;     // 0: dt_policy(r, vmax)
    double T = 1.0;
    int kappa = 16;
    double tol = 1e-10;
    uint64_t seed = 1;
    bool quiet_reference = false;
    bool warm_start = true;
    int record_every = 1;

    // Fills policy defaults and validates; returns the number of steps.
    int resolve();
};

// Deposit, Poisson-Boltzmann solve and spline field -grad phi for one ensemble.
class FieldSolver {
public:
    FieldSolver(const TorusGrid& g, double r, double tol, bool warm_start);

    void solve(const double* x, std::size_t N);
    Point field(const Point& x) const { return spline_.eval_vector(x); }
    void accelerations(const double* x, std::size_t N, std::vector<double>& out) const;

    const SplineField& spline() const { return spline_; }
    const std::vector<double>& phi() const { return phi_; }
    const std::vector<double>& density() const { return rho_.v; }
    // 1/2 int |grad phi|^2 + int e^phi (phi - 1).
    double field_energy() const { return energy_; }
    int last_iterations() const { return iterations_; }
    long total_iterations() const { return total_iterations_; }
    const TorusGrid& grid() const { return grid_; }
    double radius() const { return r_; }

private:
    TorusGrid grid_;
    double r_;
    Mollifier chi_;
    PbOptions opt_;
    bool warm_;
    bool have_phi_ = false;
    Spectral::Workspace ws_;
    ScalarField rho_;
    std::vector<double> phi_;
    SplineField spline_;
    double energy_ = 0;
    int iterations_ = 0;
    long total_iterations_ = 0;
};

// Self-consistent particle system integrated with kick-drift-kick.
class ParticleSystem {
public:
    ParticleSystem(ParticleEnsemble ens, const TorusGrid& g, double r, double tol, bool warm_start);

    void step(double dt);
    const ParticleEnsemble& ensemble() const { return ens_; }
    const FieldSolver& solver() const { return solver_; }
    const std::vector<double>& acceleration() const { return acc_; }
    double kinetic_energy() const;

private:
    ParticleEnsemble ens_;
    FieldSolver solver_;
    std::vector<double> acc_;
};

void step_coupled(ParticleSystem& sys, double dt);

// Particles advected by an external field: kick with the cached field at the
// old positions, drift, kick with the field that `next` holds after its step.
class PassiveSystem {
public:
    PassiveSystem(ParticleEnsemble ens, const FieldSolver& current);
    void step(double dt, const FieldSolver& next);
    const ParticleEnsemble& ensemble() const { return ens_; }
    const std::vector<double>& acceleration() const { return acc_; }

private:
    ParticleEnsemble ens_;
    std::vector<double> acc_;
};

void step_auxiliary(PassiveSystem& aux, const FieldSolver& reference_after_step, double dt);

struct SeriesRow {
    double time = 0;
    double supX = 0;       // |X - Y|_inf at this time
    double supV = 0;       // |V - W|_inf
    double maxField = 0;   // max_i |E^X(X_i) - E^f(Y_i)|
    double energyProxy = 0;
};

struct PairedTrajectory {
    std::vector<SeriesRow> series;
    double run_sup_x = 0;  // sup over recorded times
    double run_sup_v = 0;
    double max_field_diff = 0;
    int steps = 0;
    double dt = 0;
    int n = 0;
    long pb_iterations = 0;
    double distance() const { return run_sup_x + run_sup_v; }
};

// Per-trial state of the coupled/auxiliary pair driven by a shared reference.
class PairState {
public:
    PairState(const ParticleEnsemble& initial, const TorusGrid& g, double r, double tol, bool warm_start,
              const FieldSolver& reference);
    void step(double dt, const FieldSolver& reference_after_step);
    void record(double t, int every, int step_index);
    PairedTrajectory finish(int steps, double dt);

private:
    void measure(double t, bool keep);
    ParticleSystem coupled_;
    PassiveSystem aux_;
    PairedTrajectory traj_;
};

// Single paired run: coupled system X, reference ensemble of kappa*N
// particles from an independent seed, auxiliary Y driven by the reference.
PairedTrajectory run_pair(SimulationConfig cfg);

void write_series_csv(std::ostream& os, const PairedTrajectory& tr);

// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);
// Worker count: VPME_THREADS overrides `requested`; 0 means hardware concurrency.
int resolve_threads(int requested);

}  // namespace vpme
