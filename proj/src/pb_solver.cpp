#include "vpme/pb_solver.hpp"

#include <algorithm>
#include <cmath>

#include "vpme/kernels.hpp"

namespace vpme {

namespace {

constexpr double kClamp = 50.0;

inline double clamped_exp(double x, long& hits) {
    if (x > kClamp) {
        ++hits;
        x = kClamp;
    } else if (x < -kClamp) {
        ++hits;
        x = -kClamp;
    }
    return std::exp(x);
}

std::array<double, 3> norms3(const ScalarField& f) { return {f.lp_norm(1), f.lp_norm(2), f.lp_norm(INFINITY)}; }

// Validated copy of rho: mean must be 1, negative values are clipped.
ScalarField admissible(const ScalarField& rho, bool clip, double& clipped) {
    if (std::abs(rho.mean() - 1.0) > 1e-10) throw DomainError("density must have unit mean");
    ScalarField r = rho;
    clipped = 0;
    if (!clip) return r;
    for (double& x : r.v)
        if (x < 0) {
            clipped -= x;
            x = 0;
        }
    if (clipped > 0) {
        clipped *= r.grid.cell_volume();
        double m = r.mean();
        for (double& x : r.v) x /= m;
    }
    return r;
}

}  // namespace

PbCore solve_pb_core(const ScalarField& rho, const PbOptions& opt, Spectral::Workspace& ws) {
    const TorusGrid& g = rho.grid;
    const Spectral& sp = Spectral::of(g);
    const std::size_t n = g.size();
    std::vector<double> k2(sp.spectrum_size());
    for (std::size_t k = 0; k < k2.size(); ++k) {
        const Wave& w = sp.waves()[k];
        k2[k] = 4.0 * M_PI * M_PI * (double(w[0]) * w[0] + double(w[1]) * w[1] + double(w[2]) * w[2]);
    }
    PbCore c;
    if (opt.initial) {
        if (opt.initial->size() != n) throw DomainError("initial potential has the wrong size");
        c.phi = *opt.initial;
    } else {
        c.phi.assign(n, 0.0);
    }
    c.ephi.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.ephi[i] = clamped_exp(c.phi[i], c.clamp_hits);
    std::vector<double> next(n);
    for (int it = 1; it <= opt.max_iter; ++it) {
        double lambda = 1.0;
        for (double e : c.ephi) lambda = std::max(lambda, e);
        for (std::size_t i = 0; i < n; ++i) next[i] = rho.v[i] - c.ephi[i] + lambda * c.phi[i];
        sp.forward(next.data(), ws);
        for (std::size_t k = 0; k < k2.size(); ++k) ws.spec[k] /= (k2[k] + lambda);
        sp.backward(ws, next.data());
        // Residual of the new iterate, from the linear equation it solves.
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = clamped_exp(next[i], c.clamp_hits);
            res = std::max(res, std::abs(e - c.ephi[i] - lambda * (next[i] - c.phi[i])));
            c.ephi[i] = e;
        }
        c.phi.swap(next);
        c.residual = res;
        c.iterations = it;
        if (res <= opt.tol) return c;
    }
    throw ConvergenceError("Poisson-Boltzmann iteration did not converge", c.residual, c.iterations);
}

PotentialSolution solve_pb(const ScalarField& rho_in, const PbOptions& opt) {
    double clipped = 0;
    ScalarField rho = admissible(rho_in, opt.clip_negative, clipped);
    const Spectral& sp = Spectral::of(rho.grid);
    auto ws = sp.workspace();
    PbCore c = solve_pb_core(rho, opt, ws);

    PotentialSolution s;
    s.phi = ScalarField(rho.grid);
    s.phi.v = std::move(c.phi);
    s.field = gradient(s.phi);
    for (int a = 0; a < rho.grid.dim; ++a)
        for (double& x : s.field.c[a]) x = -x;
    s.residual_sup = c.residual;
    s.iterations = c.iterations;
    ScalarField e(rho.grid);
    e.v = std::move(c.ephi);
    s.diag.min_exp = e.min();
    s.diag.max_exp = e.max();
    s.diag.exp_norms = norms3(e);
    s.diag.rho_norms = norms3(rho);
    s.diag.clamp_hits = c.clamp_hits;
    s.diag.clipped_mass = clipped;
    return s;
}

StabilityGap field_stability_gap(const ScalarField& rho1, const ScalarField& rho2, double tol) {
    PbOptions opt;
    opt.tol = tol;
    auto s1 = solve_pb(rho1, opt);
    auto s2 = solve_pb(rho2, opt);
    StabilityGap gap;
    const TorusGrid& g = rho1.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0;
        for (int a = 0; a < g.dim; ++a) {
            double d = s1.field.c[a][i] - s2.field.c[a][i];
            s += d * d;
        }
        gap.lhs = std::max(gap.lhs, std::sqrt(s));
    }
    ScalarField diff(g);
    for (std::size_t i = 0; i < g.size(); ++i) diff.v[i] = rho1.v[i] - rho2.v[i];
    const Spectral& sp = Spectral::of(g);
    auto ws = sp.workspace();
    VectorField kd(g);
    for (int a = 0; a < g.dim; ++a) {
        sp.apply(diff.v.data(), kd.c[a].data(),
                 [&](const Wave& k) {
                     if (k[a] == g.n / 2 || k[a] == -g.n / 2) return cplx(0.0);
                     return green_coefficient(k) * cplx(0.0, -2.0 * M_PI * k[a]);
                 },
                 ws);
    }
    gap.rhs = kd.sup_norm();
    return gap;
}

LowerBoundReport lower_bound_check(const PotentialSolution& sol, const ScalarField& rho, double p) {
    if (!(p >= 1)) throw DomainError("exponent must be >= 1");
    const TorusGrid& g = rho.grid;
    LowerBoundReport rep;
    rep.p = p;
    rep.mean_phi = sol.phi.mean();
    for (double x : sol.phi.v) rep.osc = std::max(rep.osc, std::abs(x - rep.mean_phi));
    double pc = std::isinf(p) ? 1.0 : (p == 1.0 ? INFINITY : p / (p - 1.0));
    rep.green_norm = green(g.dim, g.n).lp_norm(pc);
    ScalarField defect(g);
    rep.min_exp = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double e = std::exp(sol.phi.v[i]);
        defect.v[i] = rho.v[i] - e;
        rep.min_exp = std::min(rep.min_exp, e);
    }
    rep.defect_norm = defect.lp_norm(p);
    rep.oscillation_bound = rep.osc <= rep.green_norm * rep.defect_norm;
    rep.mean_bound = rep.mean_phi >= -rep.osc;
    rep.pointwise_bound = rep.min_exp >= std::exp(rep.mean_phi - rep.osc) * (1 - 1e-15);
    return rep;
}

}  // namespace vpme
