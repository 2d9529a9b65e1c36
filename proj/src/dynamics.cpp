#include "vpme/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <mutex>
#include <thread>

namespace vpme {

double dt_policy(double r, double vmax, double dt_max) { return std::min(dt_max, r / (4.0 * vmax)); }

int grid_policy(double r, double factor) { return pow2_at_least(factor / r - 1e-9); }

int SimulationConfig::resolve() {
    f0.validate();
    if (N < 1) throw DomainError("need at least one particle");
    if (kappa < 1) throw DomainError("kappa must be >= 1");
    if (!(T > 0)) throw DomainError("final time must be positive");
    if (n == 0) n = grid_policy(r);
    check_resolution(r, make_grid(f0.dim, n));
    double cap = dt > 0 ? dt : dt_policy(r, f0.vmax());
    int steps = static_cast<int>(std::ceil(T / cap - 1e-9));
    dt = T / steps;
    if (record_every < 1) record_every = 1;
    return steps;
}

FieldSolver::FieldSolver(const TorusGrid& g, double r, double tol, bool warm_start)
    : grid_(g), r_(r), chi_(g.dim), warm_(warm_start), ws_(Spectral::of(g).workspace()), rho_(g) {
    check_resolution(r, g);
    opt_.tol = tol;
    spline_.grid = g;
    spline_.components = g.dim;
    for (int a = 0; a < g.dim; ++a) spline_.coef[a].assign(g.size(), 0.0);
}

void FieldSolver::solve(const double* x, std::size_t N) {
    deposit_into(x, N, r_, grid_, chi_, rho_.v);
    PbOptions opt = opt_;
    if (warm_ && have_phi_) opt.initial = &phi_;
    PbCore c = solve_pb_core(rho_, opt, ws_);
    phi_ = std::move(c.phi);
    have_phi_ = true;
    iterations_ = c.iterations;
    total_iterations_ += c.iterations;

    double e = 0;
    for (std::size_t i = 0; i < phi_.size(); ++i)
        e += 0.5 * phi_[i] * (rho_.v[i] - c.ephi[i]) + c.ephi[i] * (phi_[i] - 1.0);
    energy_ = e / static_cast<double>(phi_.size());

    const Spectral& sp = Spectral::of(grid_);
    sp.forward(phi_.data(), ws_);
    AlignedVec<cplx> base = ws_.spec;
    for (int a = 0; a < grid_.dim; ++a) {
        for (std::size_t k = 0; k < base.size(); ++k) {
            const Wave& w = sp.waves()[k];
            if (sp.nyquist(k, a)) {
                ws_.spec[k] = 0;
                continue;
            }
            ws_.spec[k] = base[k] * cplx(0.0, -2.0 * M_PI * w[a]) / bspline_symbol(w, grid_);
        }
        sp.backward(ws_, spline_.coef[a].data());
    }
}

void FieldSolver::accelerations(const double* x, std::size_t N, std::vector<double>& out) const {
    const int d = grid_.dim;
    out.resize(N * d);
    for (std::size_t i = 0; i < N; ++i) {
        Point p{};
        for (int a = 0; a < d; ++a) p[a] = x[i * d + a];
        Point e = spline_.eval_vector(p);
        for (int a = 0; a < d; ++a) out[i * d + a] = e[a];
    }
}

namespace {

void kick(std::vector<double>& v, const std::vector<double>& acc, double h) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += h * acc[i];
}

void drift(std::vector<double>& x, const std::vector<double>& v, double dt) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = wrap(x[i] + dt * v[i]);
}

}  // namespace

ParticleSystem::ParticleSystem(ParticleEnsemble ens, const TorusGrid& g, double r, double tol, bool warm_start)
    : ens_(std::move(ens)), solver_(g, r, tol, warm_start) {
    if (ens_.dim != g.dim) throw DomainError("ensemble and grid dimensions differ");
    solver_.solve(ens_.x.data(), ens_.size());
    solver_.accelerations(ens_.x.data(), ens_.size(), acc_);
}

void ParticleSystem::step(double dt) {
    kick(ens_.v, acc_, 0.5 * dt);
    drift(ens_.x, ens_.v, dt);
    solver_.solve(ens_.x.data(), ens_.size());
    solver_.accelerations(ens_.x.data(), ens_.size(), acc_);
    kick(ens_.v, acc_, 0.5 * dt);
}

double ParticleSystem::kinetic_energy() const {
    double s = 0;
    for (double w : ens_.v) s += w * w;
    return 0.5 * s / static_cast<double>(ens_.size());
}

void step_coupled(ParticleSystem& sys, double dt) { sys.step(dt); }

PassiveSystem::PassiveSystem(ParticleEnsemble ens, const FieldSolver& current) : ens_(std::move(ens)) {
    current.accelerations(ens_.x.data(), ens_.size(), acc_);
}

void PassiveSystem::step(double dt, const FieldSolver& next) {
    kick(ens_.v, acc_, 0.5 * dt);
    drift(ens_.x, ens_.v, dt);
    next.accelerations(ens_.x.data(), ens_.size(), acc_);
    kick(ens_.v, acc_, 0.5 * dt);
}

void step_auxiliary(PassiveSystem& aux, const FieldSolver& reference_after_step, double dt) {
    aux.step(dt, reference_after_step);
}

PairState::PairState(const ParticleEnsemble& initial, const TorusGrid& g, double r, double tol, bool warm_start,
                     const FieldSolver& reference)
    : coupled_(initial, g, r, tol, warm_start), aux_(initial, reference) {
    measure(0.0, true);
}

void PairState::step(double dt, const FieldSolver& reference_after_step) {
    coupled_.step(dt);
    aux_.step(dt, reference_after_step);
}

void PairState::record(double t, int every, int step_index) { measure(t, step_index % every == 0); }

void PairState::measure(double t, bool keep) {
    const ParticleEnsemble& X = coupled_.ensemble();
    const ParticleEnsemble& Y = aux_.ensemble();
    const int d = X.dim;
    const std::vector<double>& ax = coupled_.acceleration();
    const std::vector<double>& ay = aux_.acceleration();
    SeriesRow row;
    row.time = t;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double sx = 0, sv = 0, sf = 0;
        for (int a = 0; a < d; ++a) {
            double dx = wrap(X.x[i * d + a] - Y.x[i * d + a]);
            double dv = X.v[i * d + a] - Y.v[i * d + a];
            double df = ax[i * d + a] - ay[i * d + a];
            sx += dx * dx;
            sv += dv * dv;
            sf += df * df;
        }
        row.supX = std::max(row.supX, std::sqrt(sx));
        row.supV = std::max(row.supV, std::sqrt(sv));
        row.maxField = std::max(row.maxField, std::sqrt(sf));
    }
    row.energyProxy = coupled_.kinetic_energy() + coupled_.solver().field_energy();
    traj_.run_sup_x = std::max(traj_.run_sup_x, row.supX);
    traj_.run_sup_v = std::max(traj_.run_sup_v, row.supV);
    traj_.max_field_diff = std::max(traj_.max_field_diff, row.maxField);
    if (keep) traj_.series.push_back(row);
}

PairedTrajectory PairState::finish(int steps, double dt) {
    if (traj_.series.empty() || traj_.series.back().time < steps * dt - 1e-12) {
        // The final state is always part of the series.
        double keep_x = traj_.run_sup_x, keep_v = traj_.run_sup_v, keep_f = traj_.max_field_diff;
        measure(steps * dt, true);
        traj_.run_sup_x = keep_x;
        traj_.run_sup_v = keep_v;
        traj_.max_field_diff = keep_f;
    }
    traj_.steps = steps;
    traj_.dt = dt;
    traj_.n = coupled_.solver().grid().n;
    traj_.pb_iterations = coupled_.solver().total_iterations();
    return traj_;
}

PairedTrajectory run_pair(SimulationConfig cfg) {
    const int steps = cfg.resolve();
    const TorusGrid g = make_grid(cfg.f0.dim, cfg.n);
    ParticleEnsemble X0 = sample_iid(cfg.f0, cfg.N, derive_seed(cfg.seed, 0, 0));
    ParticleEnsemble R0 = cfg.quiet_reference ? sample_quiet(cfg.f0, cfg.kappa * cfg.N)
                                              : sample_iid(cfg.f0, cfg.kappa * cfg.N, derive_seed(cfg.seed, 1, 0));
    ParticleSystem ref(std::move(R0), g, cfg.r, cfg.tol, cfg.warm_start);
    PairState pair(X0, g, cfg.r, cfg.tol, cfg.warm_start, ref.solver());
    for (int s = 1; s <= steps; ++s) {
        ref.step(cfg.dt);
        pair.step(cfg.dt, ref.solver());
        pair.record(s * cfg.dt, cfg.record_every, s);
    }
    return pair.finish(steps, cfg.dt);
}

void write_series_csv(std::ostream& os, const PairedTrajectory& tr) {
    os << "time,supX,supV,maxField,energyProxy\n";
    char buf[160];
    for (const SeriesRow& r : tr.series) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.time, r.supX, r.supV, r.maxField,
                      r.energyProxy);
        os << buf;
    }
}

int resolve_threads(int requested) {
    if (const char* env = std::getenv("VPME_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    if (requested > 0) return requested;
    unsigned h = std::thread::hardware_concurrency();
    return h ? static_cast<int>(h) : 1;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    int nt = static_cast<int>(std::min<std::size_t>(count, threads));
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace vpme
