#pragma once

#include <array>
#include <vector>

#include "vpme/spectral.hpp"
#include "vpme/torus.hpp"

namespace vpme {

struct PbOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    // Optional starting potential (same grid); the default start is zero.
    const std::vector<double>* initial = nullptr;
    // Densities are clipped at zero and renormalized; manufactured signed
    // sources turn this off.
    bool clip_negative = true;
};

struct PbDiagnostics {
    double min_exp = 0;
    double max_exp = 0;
    std::array<double, 3> exp_norms{};  // L^1, L^2, L^inf of e^phi
    std::array<double, 3> rho_norms{};  // same for rho
    long clamp_hits = 0;
    double clipped_mass = 0;
};

struct PotentialSolution {
    ScalarField phi;
    VectorField field;  // -grad phi
    double residual_sup = 0;
    int iterations = 0;
    PbDiagnostics diag;
};

// Solves -Lap phi = rho - e^phi by the damped fixed point
// phi <- (-Lap + lambda)^{-1}(rho - e^phi + lambda phi), lambda = max(1, max e^phi).
PotentialSolution solve_pb(const ScalarField& rho, const PbOptions& opt = {});

// Same iteration without the field; reuses a caller-owned workspace.
struct PbCore {
    std::vector<double> phi;
    std::vector<double> ephi;
    double residual = 0;
    int iterations = 0;
    long clamp_hits = 0;
};
PbCore solve_pb_core(const ScalarField& rho, const PbOptions& opt, Spectral::Workspace& ws);

struct StabilityGap {
    double lhs = 0;  // ||grad Phi_1 - grad Phi_2||_inf
    double rhs = 0;  // ||K * rho_1 - K * rho_2||_inf
};
StabilityGap field_stability_gap(const ScalarField& rho1, const ScalarField& rho2, double tol = 1e-10);

struct LowerBoundReport {
    double p = 0;
    double osc = 0;              // ||Phi - <Phi>||_inf
    double mean_phi = 0;         // <Phi>
    double green_norm = 0;       // ||G||_{L^p'}
    double defect_norm = 0;      // ||rho - e^Phi||_{L^p}
    double min_exp = 0;
    bool oscillation_bound = false;  // osc <= green_norm * defect_norm
    bool mean_bound = false;         // <Phi> >= -osc
    bool pointwise_bound = false;    // min e^Phi >= exp(<Phi> - osc)
    bool ok() const { return oscillation_bound && mean_bound && pointwise_bound; }
};
LowerBoundReport lower_bound_check(const PotentialSolution& sol, const ScalarField& rho, double p);

}  // namespace vpme
