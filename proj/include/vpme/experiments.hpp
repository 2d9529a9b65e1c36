#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "vpme/config.hpp"
#include "vpme/dynamics.hpp"
#include "vpme/lln.hpp"

namespace vpme {

using Json = nlohmann::ordered_json;

struct RunOptions {
    std::string out;      // empty: nothing written
    int threads = 0;      // 0: hardware concurrency (VPME_THREADS wins)
    bool plot = false;
    bool resume = true;
};

// FNV-1a 64 of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

// ---- mean-field convergence ----

struct ConvergePlan {
    int dim = 2;
    std::vector<std::size_t> N{128, 256, 512, 1024, 2048};
    double epsilon = 0.1;
    double r_const = 1.0;   // r = r_const * N^(-1/d + epsilon)
    double c0 = 1.0;        // exceedance threshold c0 * N^(-1/d + epsilon)
    int trials = 32;
    double grid_factor = 16;
    int n = 0;              // 0: pow2 >= grid_factor / r(N_max), shared by the ladder
    double dt_max = 0.01;
    int kappa = 16;
    double T = 1.0;
    double theta = 0.01;
    double amplitude = 0.2;
    double tol = 1e-10;
    uint64_t seed = 1;
    int bootstrap = 1000;
    int record_every = 1;
    bool write_series = true;

    void validate() const;
    double radius(std::size_t N) const;
    Json to_json() const;
};
ConvergePlan parse_converge(ConfigSection& s);

struct ConvergeLevel {
    std::size_t N = 0;
    double r = 0;
    int n = 0;
    double dt = 0;
    int steps = 0;
    double threshold = 0;
    std::vector<double> distance;   // per trial, run_sup_x + run_sup_v
    std::vector<double> sup_x, sup_v, field, wall;
    std::vector<long> pb_iterations;
    double median = 0, q10 = 0, q90 = 0;
    double exceed_freq = 0;
};

struct ConvergeSummary {
    std::vector<ConvergeLevel> levels;
    bool insufficient_ladder = false;
    double slope = 0, ci_lo = 0, ci_hi = 0;
    bool strictly_decreasing = false;
    bool exceed_monotone = false;
    Json json;
};

ConvergeSummary run_converge(const ConvergePlan& plan, const RunOptions& opt);

// ---- flow-rate ladder ----

struct FlowPlan {
    int dim = 2;
    std::vector<double> radii{0.125, 0.0625, 0.03125, 0.015625};
    std::size_t M = 65536;
    int probes = 256;
    double T = 1.0;
    double theta = 1e-10;
    double amplitude = 0.3;
    double grid_factor = 16;   // per rung n = pow2 >= grid_factor / r
    double dt_max = 0.01;      // common dt = dt_policy(min r, vmax, dt_max)
    double probe_speed = 0.2;
    double tol = 1e-10;
    bool quiet = true;
    uint64_t seed = 1;

    void validate() const;
    Json to_json() const;
};
FlowPlan parse_flow(ConfigSection& s);

struct FlowRung {
    double r = 0;
    int n = 0;
    std::vector<double> states;   // (steps+1) x probes x 2d
};

struct FlowSummary {
    double dt = 0;
    int steps = 0;
    std::vector<int> grids;
    std::vector<double> differences;   // between consecutive rungs
    std::vector<double> ratios;
    bool strictly_decreasing = false;
    double last_ratio = 0;
    Json json;
};

// Probe trajectories under the field of a self-consistent reference at radius r.
FlowRung run_flow_rung(const FlowPlan& plan, double r, double dt, int steps);
// sup over time and probes of |dY|_T + |dW|.
double flow_difference(const FlowRung& a, const FlowRung& b, int dim);
FlowSummary run_flow_rate(const FlowPlan& plan, const RunOptions& opt);

// ---- LLN ----

struct LLNPlan {
    LLNConfig cfg;
    bool perturbed = false;
    double perturbation = 0;
    bool exact_suite = false;
    std::size_t exact_N = 128;

    Json to_json() const;
};
LLNPlan parse_lln(ConfigSection& s);

struct LLNSummary {
    TailReport tail;
    bool has_exact = false;
    ExactSuiteReport exact;
    Json json;
};
Json tail_json(const TailReport& t);
LLNSummary run_lln_experiment(const LLNPlan& plan, const RunOptions& opt);

// ---- Poisson-Boltzmann validation ----

struct PbPlan {
    int dim = 2;
    int n = 128;
    int densities = 20;
    double tol = 1e-10;
    uint64_t seed = 1;
    Json to_json() const;
};
PbPlan parse_pb(ConfigSection& s);

struct ManufacturedResult {
    double sup_error = 0;
    double residual = 0;
    int iterations = 0;
    double uniform_phi_sup = 0;   // rho = 1 case
};
ManufacturedResult pb_manufactured(int dim, int n, double tol);

struct DensitySuiteResult {
    int densities = 0;
    int lp_pass = 0;          // ||e^phi||_p <= ||rho||_p (1 + 1e-8), p = 1, 2, inf
    int lower_bound_pass = 0; // lower_bound_check at p = 2 and p = inf
    double worst_neutrality = 0;
    double worst_lp_ratio = 0;
    long clamp_hits = 0;
};
// Random smooth positive densities: 1 + sum of a few random low modes, normalized.
ScalarField random_density(const TorusGrid& g, uint64_t seed, double strength = 0.6);
DensitySuiteResult pb_density_suite(const PbPlan& plan);

Json run_pb_validate(const PbPlan& plan, const RunOptions& opt);

// ---- single paired run ----

SimulationConfig parse_simulate(ConfigSection& s);
Json run_simulate(SimulationConfig cfg, const RunOptions& opt);

// Rebuilds plots from CSV files already in `out`.
int regenerate_plots(const std::string& out);

// Writes `json` with a trailing newline.
void write_json(const std::string& path, const Json& json);

}  // namespace vpme
