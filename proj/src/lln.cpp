#include "vpme/lln.hpp"

#include <algorithm>
#include <random>

#include "vpme/dynamics.hpp"
#include "vpme/stats.hpp"

namespace vpme {

namespace {

void validate(const LLNConfig& c) {
    if (c.dim < 1 || c.dim > 3) throw DomainError("dimension must be 1, 2 or 3");
    if (!(c.r > 0 && c.r < 0.25)) throw DomainError("r must lie in (0, 1/4)");
    if (!(c.delta > 0 && c.delta < 1)) throw DomainError("delta must lie in (0, 1)");
    if (!(c.gamma > 0 && c.gamma < 1)) throw DomainError("gamma must lie in (0, 1)");
    if (c.trials < 1) throw DomainError("need at least one trial");
    if (c.N.empty()) throw DomainError("empty N ladder");
    for (std::size_t N : c.N)
        if (N < 1) throw DomainError("N must be >= 1");
    if (c.kind == TestKind::KernelComponent && (c.component < 0 || c.component >= c.dim))
        throw DomainError("kernel component out of range");
}

int mesh_per_axis(const LLNConfig& c) {
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(c.dim)) / (c.r * c.delta)));
}

InitialDatum datum(const LLNConfig& c) {
    InitialDatum f0;
    f0.dim = c.dim;
    f0.theta = 1.0;
    f0.amplitude = c.amplitude;
    return f0;
}

// out[k] = sum over (mesh point, particle) pairs within `support` per axis.
template <class F>
std::vector<double> lattice_accumulate(F&& f, double support, const double* x, std::size_t N, int d, int m) {
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    std::vector<double> out(total, 0.0);
    std::vector<int> idx[3];
    std::vector<double> dsp[3];
    for (std::size_t j = 0; j < N; ++j) {
        for (int a = 0; a < d; ++a) {
            idx[a].clear();
            dsp[a].clear();
            double u = (x[j * d + a] + 0.5) * m - 0.5;
            long lo, hi;
            if (2.0 * support * m + 2 >= m) {
                lo = 0;
                hi = m - 1;
            } else {
                lo = static_cast<long>(std::ceil(u - support * m));
                hi = static_cast<long>(std::floor(u + support * m));
            }
            for (long k = lo; k <= hi; ++k) {
                int kk = static_cast<int>(((k % m) + m) % m);
                idx[a].push_back(kk);
                dsp[a].push_back(wrap(-0.5 + (kk + 0.5) / m - x[j * d + a]));
            }
        }
        Point p{};
        if (d == 1) {
            for (std::size_t s = 0; s < idx[0].size(); ++s) {
                p[0] = dsp[0][s];
                out[idx[0][s]] += f(p);
            }
        } else if (d == 2) {
            for (std::size_t s = 0; s < idx[0].size(); ++s) {
                p[0] = dsp[0][s];
                double* row = &out[static_cast<std::size_t>(idx[0][s]) * m];
                for (std::size_t q = 0; q < idx[1].size(); ++q) {
                    p[1] = dsp[1][q];
                    row[idx[1][q]] += f(p);
                }
            }
        } else {
            for (std::size_t s = 0; s < idx[0].size(); ++s) {
                p[0] = dsp[0][s];
                for (std::size_t q = 0; q < idx[1].size(); ++q) {
                    p[1] = dsp[1][q];
                    double* row = &out[(static_cast<std::size_t>(idx[0][s]) * m + idx[1][q]) * m];
                    for (std::size_t w = 0; w < idx[2].size(); ++w) {
                        p[2] = dsp[2][w];
                        row[idx[2][w]] += f(p);
                    }
                }
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(N);
    for (double& v : out) v *= inv;
    return out;
}

std::vector<Point> lattice_points(int d, int m) {
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    std::vector<Point> pts(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t q = i;
        for (int a = d - 1; a >= 0; --a) {
            pts[i][a] = -0.5 + (static_cast<double>(q % m) + 0.5) / m;
            q /= m;
        }
    }
    return pts;
}

std::vector<double> convolve(const TorusGrid& g, const std::vector<double>& f, const std::vector<cplx>& c) {
    const Spectral& sp = Spectral::of(g);
    auto ws = sp.workspace();
    sp.forward(f.data(), ws);
    for (std::size_t k = 0; k < c.size(); ++k) ws.spec[k] *= c[k];
    std::vector<double> out(g.size());
    sp.backward(ws, out.data());
    return out;
}

ParticleEnsemble perturb(const ParticleEnsemble& Y, double size, uint64_t seed, double& sup) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ParticleEnsemble X = Y;
    const int d = Y.dim;
    sup = 0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        double u[3], s = 0;
        for (int a = 0; a < d; ++a) {
            u[a] = gauss(rng);
            s += u[a] * u[a];
        }
        double rad = size * std::pow(unif(rng), 1.0 / d) / std::sqrt(s);
        Point dx{};
        for (int a = 0; a < d; ++a) {
            X.x[i * d + a] = wrap(Y.x[i * d + a] + rad * u[a]);
            dx[a] = wrap(X.x[i * d + a] - Y.x[i * d + a]);
        }
        sup = std::max(sup, norm(dx, d));
    }
    return X;
}

}  // namespace

TestSet::TestSet(const LLNConfig& cfg) : cfg_(cfg), chi_(cfg.dim) {
    validate(cfg);
    const int m = mesh_per_axis(cfg);
    int n = pow2_at_least(std::max(cfg.grid_factor / cfg.r - 1e-9, 4.0 * m));
    grid_ = make_grid(cfg.dim, n);
    check_resolution(cfg.r, grid_);
    const double r = cfg.r;
    if (cfg.kind == TestKind::KernelComponent) {
        family_ = std::make_unique<KernelFamily>(cfg.dim, n, std::vector<double>{r});
        g_samples_ = family_->K_r(r).c[cfg.component];
        hmod_ = family_->moduli(r).L;
        lmod_ = family_->moduli(r).Q;
    } else {
        if (cfg.kind == TestKind::ScaledChi) scale_ = r;
        g_samples_ = sample_chi_r(chi_, r, grid_).v;
        for (double& v : g_samples_) v *= scale_;
        hmod_ = psi_r(chi_, r, grid_);
        lmod_ = eta_r(chi_, r, grid_);
        const double diag = std::sqrt(static_cast<double>(cfg.dim)) / n;
        g_support_ = r;
        h_support_ = hmod_.radius + r + 2 * diag;
    }

    ScalarField rho = datum(cfg).marginal(grid_);
    rho_sup_ = rho.max();
    ScalarField gs(grid_);
    gs.v = g_samples_;
    g_rho_grid_ = convolve(grid_, rho.v, fourier_coefficients(gs));
    ScalarField gr(grid_);
    gr.v = g_rho_grid_;
    g_rho_ = make_spline(gr);

    ScalarField hs = hmod_.as_field();
    for (double& v : hs.v) v *= scale_;
    ScalarField hr(grid_);
    hr.v = convolve(grid_, rho.v, fourier_coefficients(hs));
    h_rho_sup_ = hr.max();
    h_rho_ = make_spline(hr);
}

double TestSet::g(const Point& disp) const {
    if (family_) return family_->spline(cfg_.r).eval(disp, cfg_.component);
    double t = 0;
    for (int a = 0; a < cfg_.dim; ++a) t += disp[a] * disp[a];
    return scale_ * chi_.profile_fast(t / (cfg_.r * cfg_.r)) / std::pow(cfg_.r, cfg_.dim);
}

double TestSet::g_norm(double p) const {
    ScalarField f(grid_);
    f.v = g_samples_;
    return f.lp_norm(p);
}

std::vector<double> TestSet::g_mu_grid(const ParticleEnsemble& ens) const {
    std::vector<double> raw;
    deposit_into(ens.x.data(), ens.size(), cfg_.r, grid_, chi_, raw, false);
    if (!family_) {
        for (double& v : raw) v *= scale_;
        return raw;
    }
    const Spectral& sp = Spectral::of(grid_);
    const int a = cfg_.component;
    std::vector<cplx> c(sp.spectrum_size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        const Wave& w = sp.waves()[k];
        c[k] = sp.nyquist(k, a) ? cplx(0) : cplx(0.0, -2.0 * M_PI * w[a]) * green_coefficient(w);
    }
    return convolve(grid_, raw, c);
}

std::vector<double> lattice_sums(const std::function<double(const Point&)>& f, double support,
                                 const ParticleEnsemble& ens, int m) {
    return lattice_accumulate(f, support, ens.x.data(), ens.size(), ens.dim, m);
}

double bernstein_tail(std::size_t N, double xi, double var, double b) {
    return 2.0 * std::exp(-static_cast<double>(N) * xi * xi / (2.0 * (var + b * xi / 3.0)));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) { return loglog_fit(x, y).slope; }

namespace {

struct TrialResult {
    std::vector<double> mesh_vals;  // g * mu_Y on the mesh
    std::vector<double> mesh_abs;   // |g * mu - g * rho| on the mesh (tested measure)
    double mesh_err = 0, probe_err = 0, h_err = 0, sup = 0, threshold = 0;
    bool failed = false;
};

TailReport run_impl(const LLNConfig& cfg, double psize, bool perturbed) {
    TestSet ts(cfg);
    const int d = cfg.dim, m = mesh_per_axis(cfg);
    const double r = cfg.r, gam = cfg.gamma, del = cfg.delta;
    const std::vector<Point> mesh = lattice_points(d, m);

    TailReport rep;
    rep.cfg = cfg;
    rep.n = ts.grid().n;
    rep.mesh_per_axis = m;
    rep.mesh_size = mesh.size();
    rep.perturbation = psize;
    rep.rho_sup = ts.rho_sup();
    const double ps[3] = {1.0, 2.0, INFINITY};
    for (int i = 0; i < 3; ++i) {
        rep.g_norms[i] = ts.g_norm(ps[i]);
        rep.h_norms[i] = ts.h_norm(ps[i]);
        rep.l_norms[i] = ts.l_norm(ps[i]);
    }
    const double rho = rep.rho_sup;
    rep.threshold = 2.0 * r * rho * (del * rep.h_norms[0] + gam);

    BernsteinTerms& bt = rep.terms;
    bt.xi_g = r * gam * rho;
    bt.xi_h = gam * rho;
    bt.var_g = rep.g_norms[1] * rep.g_norms[1] * rho;
    bt.var_h = rep.h_norms[1] * rep.h_norms[1] * rho;
    bt.b_g = rep.g_norms[2];
    bt.b_h = rep.h_norms[2];

    std::vector<double> g_rho_mesh(mesh.size()), h_rho_mesh(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        g_rho_mesh[k] = ts.g_rho(mesh[k]);
        h_rho_mesh[k] = ts.h_rho(mesh[k]);
    }
    const InitialDatum f0 = datum(cfg);
    const int threads = resolve_threads(cfg.threads);
    auto gf = [&ts](const Point& p) { return ts.g(p); };
    auto hf = [&ts](const Point& p) { return ts.h(p); };

    std::vector<double> Ns, stds, fixed;
    for (std::size_t N : cfg.N) {
        std::vector<TrialResult> res(cfg.trials);
        parallel_for(cfg.trials, threads, [&](std::size_t t) {
            TrialResult& tr = res[t];
            ParticleEnsemble Y = sample_iid(f0, N, derive_seed(cfg.seed, N, t));
            ParticleEnsemble X;
            if (perturbed) X = perturb(Y, psize, derive_seed(cfg.seed, N + (1ULL << 40), t), tr.sup);
            const ParticleEnsemble& T = perturbed ? X : Y;
            tr.mesh_vals = lattice_accumulate(gf, ts.g_support(), Y.x.data(), N, d, m);
            std::vector<double> tested =
                perturbed ? lattice_accumulate(gf, ts.g_support(), T.x.data(), N, d, m) : tr.mesh_vals;
            std::vector<double> hv = lattice_accumulate(hf, ts.h_support(), Y.x.data(), N, d, m);
            tr.mesh_abs.resize(mesh.size());
            for (std::size_t k = 0; k < mesh.size(); ++k) {
                tr.mesh_abs[k] = std::abs(tested[k] - g_rho_mesh[k]);
                tr.mesh_err = std::max(tr.mesh_err, tr.mesh_abs[k]);
                tr.h_err = std::max(tr.h_err, std::abs(hv[k] - h_rho_mesh[k]));
            }
            if (cfg.probe_sup) {
                std::vector<double> gg = ts.g_mu_grid(T);
                for (std::size_t i = 0; i < gg.size(); ++i)
                    tr.probe_err = std::max(tr.probe_err, std::abs(gg[i] - ts.g_rho_grid()[i]));
            }
            double err = std::max(tr.mesh_err, tr.probe_err);
            tr.threshold = perturbed ? 2.0 * rho *
                                           ((gam + rep.h_norms[0] + r * rep.l_norms[0]) * tr.sup +
                                            r * (del * rep.h_norms[0] + gam))
                                     : rep.threshold;
            tr.failed = err > tr.threshold;
        });

        LLNPoint pt;
        pt.N = N;
        pt.trials = cfg.trials;
        std::vector<double> me, pe, he, all;
        all.reserve(mesh.size() * cfg.trials);
        for (const TrialResult& tr : res) {
            pt.failures += tr.failed ? 1 : 0;
            me.push_back(tr.mesh_err);
            pe.push_back(tr.probe_err);
            he.push_back(tr.h_err);
            pt.sup_errors.push_back(std::max(tr.mesh_err, tr.probe_err));
            all.insert(all.end(), tr.mesh_abs.begin(), tr.mesh_abs.end());
        }
        pt.failure_freq = static_cast<double>(pt.failures) / cfg.trials;
        pt.median_mesh_err = median(me);
        pt.median_probe_err = median(pe);
        pt.median_mesh_err_h = median(he);
        const double qs[3] = {0.5, 0.9, 0.99};
        for (int i = 0; i < 3; ++i) pt.err_quantiles[i] = quantile(all, qs[i]);

        if (perturbed) {
            double gs2 = rep.g_norms[1] / r, gsi = rep.g_norms[2] / r;
            double rl2 = r * rep.l_norms[1], rli = r * rep.l_norms[2];
            pt.bernstein = static_cast<double>(mesh.size()) *
                           (bernstein_tail(N, gam * rho, gs2 * gs2 * rho, gsi) +
                            bernstein_tail(N, bt.xi_h, bt.var_h, bt.b_h) +
                            bernstein_tail(N, gam * rho, rl2 * rl2 * rho, rli));
        } else {
            pt.bernstein = static_cast<double>(mesh.size()) *
                           (bernstein_tail(N, bt.xi_g, bt.var_g, bt.b_g) + bernstein_tail(N, bt.xi_h, bt.var_h, bt.b_h));
        }
        pt.vacuous = pt.bernstein >= 1.0;

        if (cfg.trials > 1) {
            const std::size_t fix = mesh.size() / 2;
            double acc = 0;
            for (std::size_t k = 0; k < mesh.size(); ++k) {
                double s = 0, s2 = 0;
                for (const TrialResult& tr : res) s += tr.mesh_vals[k];
                const double mean = s / cfg.trials;
                for (const TrialResult& tr : res) s2 += (tr.mesh_vals[k] - mean) * (tr.mesh_vals[k] - mean);
                const double sd = std::sqrt(s2 / (cfg.trials - 1));
                acc += sd;
                if (k == fix) pt.fixed_point_std = sd;
            }
            pt.mean_pointwise_std = acc / static_cast<double>(mesh.size());
        }
        Ns.push_back(static_cast<double>(N));
        stds.push_back(pt.mean_pointwise_std);
        fixed.push_back(pt.fixed_point_std);
        rep.points.push_back(std::move(pt));
    }
    if (Ns.size() >= 2 && cfg.trials > 1) {
        rep.std_slope = loglog_slope(Ns, stds);
        if (std::all_of(fixed.begin(), fixed.end(), [](double v) { return v > 0; }))
            rep.fixed_std_slope = loglog_slope(Ns, fixed);
    }
    return rep;
}

}  // namespace

TailReport run_lln(const LLNConfig& cfg) { return run_impl(cfg, 0.0, false); }

TailReport run_lln_perturbed(const LLNConfig& cfg, double sup_size) {
    if (!(sup_size >= 0 && sup_size < cfg.r)) throw DomainError("perturbation size must lie in [0, r)");
    return run_impl(cfg, sup_size, true);
}

ExactSuiteReport exact_inequality_suite(const LLNConfig& cfg) {
    TestSet ts(cfg);
    const int d = cfg.dim, m = mesh_per_axis(cfg);
    const std::size_t N = cfg.N.front();
    const double r = cfg.r, s = r * cfg.delta;
    const std::vector<Point> mesh = lattice_points(d, m);
    const std::vector<Point> probes = lattice_points(d, 4 * m);
    std::vector<double> g_rho_mesh(mesh.size()), h_rho_mesh(mesh.size()), g_rho_probe(probes.size());
    double h_rho_sup = ts.h_rho_sup();
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        g_rho_mesh[k] = ts.g_rho(mesh[k]);
        h_rho_mesh[k] = ts.h_rho(mesh[k]);
        h_rho_sup = std::max(h_rho_sup, h_rho_mesh[k]);
    }
    for (std::size_t k = 0; k < probes.size(); ++k) {
        g_rho_probe[k] = ts.g_rho(probes[k]);
        h_rho_sup = std::max(h_rho_sup, ts.h_rho(probes[k]));
    }
    const InitialDatum f0 = datum(cfg);
    auto gf = [&ts](const Point& p) { return ts.g(p); };
    auto hf = [&ts](const Point& p) { return ts.h(p); };

    struct One {
        bool approx = false, mesh = false;
        double ra = 0, rm = 0;
    };
    std::vector<One> out(cfg.trials);
    parallel_for(cfg.trials, resolve_threads(cfg.threads), [&](std::size_t t) {
        ParticleEnsemble Y = sample_iid(f0, N, derive_seed(cfg.seed, 7, t));
        std::mt19937_64 rng(derive_seed(cfg.seed, 8, t));
        double psize = 0.5 * r * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (t % 4 == 0) psize = 0.5 * r;
        double sup = 0;
        ParticleEnsemble X = perturb(Y, psize, derive_seed(cfg.seed, 9, t), sup);

        const int pm = 4 * m;
        std::vector<double> gx = lattice_accumulate(gf, ts.g_support(), X.x.data(), N, d, pm);
        std::vector<double> gy = lattice_accumulate(gf, ts.g_support(), Y.x.data(), N, d, pm);
        std::vector<double> hy = lattice_accumulate(hf, ts.h_support(), Y.x.data(), N, d, pm);
        One& o = out[t];
        o.approx = true;
        for (std::size_t k = 0; k < probes.size(); ++k) {
            double lhs = std::abs(gx[k] - gy[k]), rhs = hy[k] * sup;
            if (lhs > rhs) o.approx = false;
            if (rhs > 0) o.ra = std::max(o.ra, lhs / rhs);
        }

        std::vector<double> gm = lattice_accumulate(gf, ts.g_support(), Y.x.data(), N, d, m);
        std::vector<double> hm = lattice_accumulate(hf, ts.h_support(), Y.x.data(), N, d, m);
        double dg = 0, dh = 0;
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            dg = std::max(dg, std::abs(g_rho_mesh[k] - gm[k]));
            dh = std::max(dh, std::abs(h_rho_mesh[k] - hm[k]));
        }
        const double rhs = 2.0 * s * h_rho_sup + dg + s * dh;
        o.mesh = true;
        for (std::size_t k = 0; k < probes.size(); ++k) {
            double lhs = std::abs(g_rho_probe[k] - gy[k]);
            if (lhs > rhs) o.mesh = false;
            o.rm = std::max(o.rm, lhs / rhs);
        }
    });

    ExactSuiteReport rep;
    rep.trials = cfg.trials;
    for (const One& o : out) {
        rep.approx_pass += o.approx ? 1 : 0;
        rep.mesh_pass += o.mesh ? 1 : 0;
        rep.worst_approx_ratio = std::max(rep.worst_approx_ratio, o.ra);
        rep.worst_mesh_ratio = std::max(rep.worst_mesh_ratio, o.rm);
    }
    return rep;
}

}  // namespace vpme
