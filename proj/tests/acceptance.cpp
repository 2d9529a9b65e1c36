// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number; the output directory for experiment artifacts is taken
// from VPME_ACCEPTANCE_OUT (default ./acceptance_runs).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "vpme/experiments.hpp"
#include "vpme/kdist.hpp"
#include "vpme/kernels.hpp"
#include "vpme/mollifier.hpp"

using namespace vpme;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

std::string out_root() {
    const char* e = std::getenv("VPME_ACCEPTANCE_OUT");
    return e ? e : "acceptance_runs";
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome c1() {
    auto t0 = std::chrono::steady_clock::now();
    ManufacturedResult m = pb_manufactured(2, 128, 1e-12);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = m.sup_error <= 1e-8 && m.uniform_phi_sup <= 1e-12;
    o.detail = "manufactured sup error " + fmt("%.3e", m.sup_error) + " (<= 1e-8), rho=1 |phi|_inf " +
               fmt("%.1e", m.uniform_phi_sup) + " (<= 1e-12), solve " + fmt("%.2f", secs) + " s";
    return o;
}

Outcome c2() {
    PbPlan p;
    p.n = 128;
    p.densities = 20;
    p.tol = 1e-10;
    DensitySuiteResult r = pb_density_suite(p);
    Outcome o;
    o.pass = r.lp_pass == 20 && r.lower_bound_pass == 20 && r.worst_neutrality <= 1e-8 && r.clamp_hits == 0;
    o.detail = "L^p " + std::to_string(r.lp_pass) + "/20, lower bound " + std::to_string(r.lower_bound_pass) +
               "/20, worst ||e^phi||_p/||rho||_p " + fmt("%.12f", r.worst_lp_ratio) + ", neutrality " +
               fmt("%.2e", r.worst_neutrality);
    return o;
}

Outcome c3() {
    const double radii[4] = {0.125, 0.0625, 0.03125, 0.015625};
    std::vector<double> q[5];
    Mollifier chi(2);
    for (double r : radii) {
        TorusGrid g = make_grid(2, pow2_at_least(16 / r - 1e-9));
        q[0].push_back(psi_r(chi, r, g).lp_norm(1) * r);
        q[1].push_back(eta_r(chi, r, g).lp_norm(1) * r * r);
        KernelFamily fam(2, g.n, {r});
        q[2].push_back(fam.moduli(r).L.lp_norm(1) / std::abs(std::log(r)));
        q[3].push_back(fam.moduli(r).Q.lp_norm(1) * r);
        const VectorField& K = fam.K_r(r);
        double s = 0;
        for (std::size_t i = 0; i < g.size(); ++i) s += K.c[0][i] * K.c[0][i] + K.c[1][i] * K.c[1][i];
        q[4].push_back(std::sqrt(s * g.cell_volume()) * std::sqrt(r));
    }
    const char* names[5] = {"psi r", "eta r^2", "L/|log r|", "Q r", "|K|_2 r^1/2"};
    Outcome o;
    o.pass = true;
    for (int k = 0; k < 5; ++k) {
        double lo = *std::min_element(q[k].begin(), q[k].end()), hi = *std::max_element(q[k].begin(), q[k].end());
        o.pass = o.pass && hi / lo < 4;
        o.detail += std::string(k ? ", " : "") + names[k] + " x" + fmt("%.2f", hi / lo);
    }
    o.detail += " (each < 4)";
    return o;
}

Outcome c4() {
    Outcome o;
    o.pass = true;
    for (TestKind kind : {TestKind::KernelComponent, TestKind::Chi}) {
        LLNConfig cfg;
        cfg.kind = kind;
        cfg.amplitude = 0.3;
        cfg.N = {128};
        cfg.trials = 256;
        cfg.seed = 4;
        cfg.threads = resolve_threads(0);
        ExactSuiteReport r = exact_inequality_suite(cfg);
        o.pass = o.pass && r.ok();
        o.detail += std::string(kind == TestKind::Chi ? "; chi_r" : "K_r") + ": gApprox " +
                    std::to_string(r.approx_pass) + "/256, mesh reduction " + std::to_string(r.mesh_pass) +
                    "/256, worst ratios " + fmt("%.3f", r.worst_approx_ratio) + "/" + fmt("%.3f", r.worst_mesh_ratio);
    }
    return o;
}

Outcome c5() {
    LLNConfig cfg;
    cfg.kind = TestKind::Chi;
    cfg.N = {100, 1000, 10000, 100000};
    cfg.trials = 256;
    cfg.probe_sup = false;
    cfg.seed = 5;
    cfg.threads = resolve_threads(0);
    TailReport t = run_lln(cfg);
    Outcome o;
    o.pass = std::abs(t.fixed_std_slope + 0.5) <= 0.1;
    o.detail = "fixed mesh point std slope " + fmt("%.4f", t.fixed_std_slope) + " (-0.5 +- 0.1); mesh-averaged " +
               fmt("%.4f", t.std_slope);
    return o;
}

Outcome c6() {
    LLNConfig cfg;
    cfg.kind = TestKind::KernelComponent;
    cfg.r = 0.125;
    cfg.gamma = 0.5;
    cfg.delta = 0.5;
    cfg.N = {1000, 10000, 100000};
    cfg.trials = 256;
    cfg.probe_sup = false;
    cfg.seed = 6;
    cfg.threads = resolve_threads(0);
    TailReport t = run_lln(cfg);
    Outcome o;
    o.pass = true;
    int live = 0;
    for (const LLNPoint& p : t.points) {
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("N=") + std::to_string(p.N) + " freq " +
                    fmt("%.4f", p.failure_freq) + " bound " + fmt("%.3g", p.bernstein) + (p.vacuous ? " (vacuous)" : "");
        if (p.vacuous) continue;
        ++live;
        o.pass = o.pass && p.failure_freq <= p.bernstein;
    }
    o.detail += "; non-vacuous points " + std::to_string(live);
    return o;
}

Outcome c7() {
    Outcome o;
    double worst = 0;
    for (int i = 0; i < 10; ++i)
        for (int k = 0; k < 10; ++k) {
            double a = 0.09 * i + 0.001, b = 0.0005 + 0.036 * k;
            double j = solve_implicit(a, b);
            worst = std::max(worst, std::abs(j - a * std::sqrt(-std::log(j)) - b));
        }
    std::size_t violations = 0, below = 0;
    uint64_t s = 77;
    auto unif = [&s]() {
        s = derive_seed(s, 0, 1);
        return static_cast<double>(s >> 11) * 0x1.0p-53;
    };
    for (int series = 0; series < 100; ++series) {
        KineticDistanceParams p{0.01 + 0.1 * unif(), 0.001 + 0.05 * unif(), 0.001 + 0.05 * unif()};
        std::vector<double> x(200), v(200);
        double cx = 0, cv = 0, scale = 0.002 * std::pow(10.0, 2 * unif());
        for (int i = 0; i < 200; ++i) {
            cx += scale * unif() * unif();
            cv += scale * unif() * unif();
            x[i] = cx;
            v[i] = cv;
        }
        JBasicsReport rep = check_jbasics(p, J_of_t(p, x, v), x, v);
        violations += rep.violations;
        below += rep.below_cap;
    }
    LogPropsReport lp = log_props_check(10000);
    o.pass = worst <= 1e-13 && violations == 0 && lp.ok();
    o.detail = "implicit residual " + fmt("%.1e", worst) + " (<= 1e-13), Jbasics violations " +
               std::to_string(violations) + " over 100 series (" + std::to_string(below) +
               " samples below cap), log_props failures " +
               std::to_string(lp.failures[0] + lp.failures[1] + lp.failures[2] + lp.failures[3]) + ", twist ratio " +
               fmt("%.3f", lp.worst_twist_ratio);
    return o;
}

ConvergeSummary converge_run(const std::string& dir) {
    ConvergePlan p;
    p.seed = 42;
    RunOptions o;
    o.out = dir;
    o.resume = false;
    o.plot = true;
    o.threads = resolve_threads(0);
    fs::remove_all(dir);
    return run_converge(p, o);
}

FlowSummary flow_run(const std::string& dir) {
    FlowPlan p;
    p.seed = 42;
    RunOptions o;
    o.out = dir;
    o.resume = false;
    o.plot = true;
    o.threads = resolve_threads(0);
    fs::remove_all(dir);
    return run_flow_rate(p, o);
}

Outcome c8() {
    ConvergeSummary s = converge_run(out_root() + "/converge_a");
    Outcome o;
    o.pass = !s.insufficient_ladder && s.strictly_decreasing && s.ci_hi < -0.25 && s.exceed_monotone &&
             s.json["flags"]["incomplete"] == false;
    o.detail = "medians";
    for (const ConvergeLevel& L : s.levels) o.detail += " " + fmt("%.4g", L.median);
    o.detail += std::string(s.strictly_decreasing ? " (strictly decreasing)" : " (NOT strictly decreasing)") +
                "; slope " + fmt("%.3f", s.slope) + " CI [" + fmt("%.3f", s.ci_lo) + ", " + fmt("%.3f", s.ci_hi) +
                "] (upper < -0.25); exceedance";
    for (const ConvergeLevel& L : s.levels) o.detail += " " + fmt("%.3f", L.exceed_freq);
    o.detail += s.exceed_monotone ? " (non-increasing within 3 sigma)" : " (increase beyond 3 sigma)";
    return o;
}

Outcome c9() {
    FlowSummary s = flow_run(out_root() + "/flow_a");
    Outcome o;
    o.pass = s.strictly_decreasing && s.last_ratio <= 0.75;
    o.detail = "differences";
    for (double d : s.differences) o.detail += " " + fmt("%.4g", d);
    o.detail += "; last ratio " + fmt("%.4f", s.last_ratio) + " (<= 0.75)";
    return o;
}

Outcome c10() {
    const std::string root = out_root();
    if (!fs::exists(root + "/converge_a/summary.json")) converge_run(root + "/converge_a");
    if (!fs::exists(root + "/flow_a/summary.json")) flow_run(root + "/flow_a");
    converge_run(root + "/converge_b");
    flow_run(root + "/flow_b");
    bool conv = slurp(root + "/converge_a/summary.json") == slurp(root + "/converge_b/summary.json") &&
                slurp(root + "/converge_a/trials.csv") == slurp(root + "/converge_b/trials.csv");
    bool flow = slurp(root + "/flow_a/summary.json") == slurp(root + "/flow_b/summary.json") &&
                slurp(root + "/flow_a/ladder.csv") == slurp(root + "/flow_b/ladder.csv");
    Outcome o;
    o.pass = conv && flow;
    o.detail = std::string("converge summary ") + (conv ? "identical" : "DIFFERS") + ", flow-rate summary " +
               (flow ? "identical" : "DIFFERS");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"PB solver correctness", c1},
        {"PB estimate suite", c2},
        {"kernel and mollifier scaling", c3},
        {"exact-inequality suite", c4},
        {"pointwise CLT rate", c5},
        {"Bernstein envelope", c6},
        {"kinetic distance", c7},
        {"mean-field convergence", c8},
        {"flow rate", c9},
        {"determinism", c10},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    fs::create_directories(out_root());
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!pick.empty() && !pick.count(id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("aborted: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed ? 1 : 0;
}
