#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "vpme/ensemble.hpp"
#include "vpme/kernels.hpp"
#include "vpme/mollifier.hpp"

namespace vpme {

// g = chi_r, g = r chi_r, or one component of K_r; h and l are the matching
// moduli (psi_r, eta_r or L_r, Q_r, scaled alongside g).
enum class TestKind { Chi, ScaledChi, KernelComponent };

struct LLNConfig {
    int dim = 2;
    double r = 0.125;
    double delta = 0.5;
    double gamma = 0.5;
    std::vector<std::size_t> N{100, 1000, 10000};
    int trials = 256;
    uint64_t seed = 1;
    TestKind kind = TestKind::Chi;
    int component = 0;
    double amplitude = 0.0;    // rho = spatial marginal of the cosine datum
    double grid_factor = 16;   // n = pow2 >= grid_factor / r, and >= 4x the mesh
    bool probe_sup = true;     // L^inf over all grid nodes via the spectral path
    int threads = 1;
};

// Test function, moduli and their convolutions with rho on one grid.
class TestSet {
public:
    explicit TestSet(const LLNConfig& cfg);

    const TorusGrid& grid() const { return grid_; }
    double g(const Point& disp) const;
    double h(const Point& disp) const { return scale_ * hmod_.eval(disp); }
    double g_support() const { return g_support_; }
    double h_support() const { return h_support_; }
    double g_rho(const Point& y) const { return g_rho_.eval(y); }
    double h_rho(const Point& y) const { return h_rho_.eval(y); }
    const std::vector<double>& g_rho_grid() const { return g_rho_grid_; }
    double h_rho_sup() const { return h_rho_sup_; }

    // Norms on the grid (the moduli are piecewise constant on cells, so their
    // grid norms are exact).
    double g_norm(double p) const;
    double h_norm(double p) const { return scale_ * hmod_.lp_norm(p); }
    double l_norm(double p) const { return scale_ * lmod_.lp_norm(p); }
    double rho_sup() const { return rho_sup_; }

    // g * mu on every grid node: direct chi_r sums, or K applied spectrally to
    // the unnormalized chi_r deposit.
    std::vector<double> g_mu_grid(const ParticleEnsemble& ens) const;

private:
    LLNConfig cfg_;
    TorusGrid grid_;
    double scale_ = 1.0;
    Mollifier chi_;
    std::unique_ptr<KernelFamily> family_;
    ModulusField hmod_, lmod_;
    std::vector<double> g_samples_;
    SplineField g_rho_, h_rho_;
    std::vector<double> g_rho_grid_;
    double h_rho_sup_ = 0;
    double rho_sup_ = 0;
    double g_support_ = INFINITY, h_support_ = INFINITY;
};

// (1/N) sum_j f(y_m - X_j) over a cell-centred lattice with m points per
// axis, skipping pairs farther apart than `support` (per axis).
std::vector<double> lattice_sums(const std::function<double(const Point&)>& f, double support,
                                 const ParticleEnsemble& ens, int m);

struct BernsteinTerms {
    double xi_g = 0, xi_h = 0;
    double var_g = 0, var_h = 0;
    double b_g = 0, b_h = 0;
};

// Bernstein tail 2 exp(-N xi^2 / (2 (var + b xi / 3))).
double bernstein_tail(std::size_t N, double xi, double var, double b);

struct LLNPoint {
    std::size_t N = 0;
    int trials = 0;
    int failures = 0;            // A_g (or B_g when perturbed) violated
    double failure_freq = 0;
    double bernstein = 0;        // union bound over the mesh
    bool vacuous = false;        // bound >= 1
    double median_mesh_err = 0;  // sup over mesh of |g*mu - g*rho|
    double median_probe_err = 0; // sup over grid nodes (when enabled)
    double median_mesh_err_h = 0;
    double mean_pointwise_std = 0;  // std across trials, averaged over mesh points
    double fixed_point_std = 0;     // std across trials at one mesh point
    // Quantiles (0.5, 0.9, 0.99) of |g*mu - g*rho| over all mesh points and trials.
    double err_quantiles[3] = {0, 0, 0};
    std::vector<double> sup_errors;  // per trial
};

struct TailReport {
    LLNConfig cfg;
    int n = 0;
    std::size_t mesh_size = 0;
    int mesh_per_axis = 0;
    double threshold = 0;        // A_g: 2 r ||rho||_inf (delta ||h||_1 + gamma)
    double perturbation = 0;
    double rho_sup = 0;
    double g_norms[3] = {0, 0, 0};
    double h_norms[3] = {0, 0, 0};
    double l_norms[3] = {0, 0, 0};
    BernsteinTerms terms;
    std::vector<LLNPoint> points;
    double std_slope = 0;        // log-log slope of mean pointwise std vs N
    double fixed_std_slope = 0;
};

TailReport run_lln(const LLNConfig& cfg);
// X = Y + iid uniform perturbation in a ball of radius `sup_size`; failures
// count B_g violations with the corollary's threshold.
TailReport run_lln_perturbed(const LLNConfig& cfg, double sup_size);

struct ExactSuiteReport {
    int trials = 0;
    int approx_pass = 0;   // |g*mu_X - g*mu_Y| <= |X-Y|_inf h*mu_Y at every probe point
    int mesh_pass = 0;     // mesh reduction with nu1 = rho, nu2 = mu_Y at every probe point
    double worst_approx_ratio = 0;
    double worst_mesh_ratio = 0;
    bool ok() const { return approx_pass == trials && mesh_pass == trials; }
};

// Randomized trials of the two deterministic inequalities. N[0] particles,
// probe lattice 4x finer than the covering mesh of radius r*delta.
ExactSuiteReport exact_inequality_suite(const LLNConfig& cfg);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vpme
