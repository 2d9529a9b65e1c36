#include "vpme/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "vpme/kdist.hpp"
#include "vpme/pb_solver.hpp"
#include "vpme/stats.hpp"
#include "vpme/svg.hpp"

namespace fs = std::filesystem;

namespace vpme {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g17(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

void ensure_dir(const std::string& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create directory " + p + ": " + ec.message());
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char b[32];
    std::strftime(b, sizeof b, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return b;
}

void write_meta(const std::string& out, const std::string& kind, const std::string& hash, double wall,
                const Json& extra) {
    Json m;
    m["kind"] = kind;
    m["plan_hash"] = hash;
    m["finished_utc"] = utc_now();
    m["wall_seconds"] = wall;
    m["threads"] = extra.value("threads", 0);
    if (extra.contains("trial_wall")) m["trial_wall"] = extra["trial_wall"];
    write_json(out + "/meta.json", m);
}

bool file_exists(const std::string& p) {
    std::error_code ec;
    return fs::exists(p, ec);
}

std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::map<std::string, std::string>> rows;
    if (!in) return rows;
    std::string line;
    std::vector<std::string> head;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(item);
        return out;
    };
    if (!std::getline(in, line)) return rows;
    head = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < head.size() && i < cells.size(); ++i) row[head[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& key) {
    auto it = row.find(key);
    return it == row.end() ? NAN : std::strtod(it->second.c_str(), nullptr);
}

void plot_safely(const std::string& path, const Plot& p) {
    try {
        write_svg(path, p);
    } catch (...) {
    }
}

// Probe lattice: m^d positions on cell centres, velocities from a Halton sequence.
ParticleEnsemble probe_ensemble(int d, int count, double speed) {
    int m = static_cast<int>(std::llround(std::pow(static_cast<double>(count), 1.0 / d)));
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= m;
    if (static_cast<int>(total) != count) throw DomainError("probe count must be a perfect d-th power");
    ParticleEnsemble e;
    e.dim = d;
    e.x.resize(total * d);
    e.v.resize(total * d);
    static const unsigned bases[3] = {2, 3, 5};
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t q = i;
        for (int a = d - 1; a >= 0; --a) {
            e.x[i * d + a] = -0.5 + (static_cast<double>(q % m) + 0.5) / m;
            q /= m;
        }
        for (int a = 0; a < d; ++a) {
            double f = 1.0 / bases[a], h = 0;
            for (std::size_t k = i + 1; k > 0; k /= bases[a], f /= bases[a]) h += f * static_cast<double>(k % bases[a]);
            e.v[i * d + a] = speed * (2.0 * h - 1.0);
        }
    }
    return e;
}

}  // namespace

std::string fnv1a_hex(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char b[20];
    std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
    return b;
}

void write_json(const std::string& path, const Json& json) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << json.dump(2) << '\n';
}

// ---------------------------------------------------------------- converge

void ConvergePlan::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    if (N.empty()) throw ConfigError("empty N ladder");
    if (!(epsilon > 0 && epsilon < 1.0 / dim)) throw ConfigError("epsilon must lie in (0, 1/d)");
    if (!(r_const > 0) || !(c0 > 0)) throw ConfigError("r_const and c0 must be positive");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (kappa < 1) throw ConfigError("kappa must be >= 1");
    if (!(T > 0) || !(theta > 0) || !(dt_max > 0)) throw ConfigError("T, theta and dt_max must be positive");
    if (!(amplitude >= 0 && amplitude < 1)) throw ConfigError("amplitude must lie in [0, 1)");
    if (bootstrap < 1) throw ConfigError("bootstrap must be >= 1");
    for (std::size_t i = 1; i < N.size(); ++i)
        if (N[i] <= N[i - 1]) throw ConfigError("N ladder must be increasing");
    for (std::size_t v : N) {
        double r = radius(v);
        if (!(r > 0 && r < 0.5)) throw ConfigError("r(N) must lie in (0, 1/2); got " + g17(r));
    }
}

double ConvergePlan::radius(std::size_t n_) const {
    return r_const * std::pow(static_cast<double>(n_), -1.0 / dim + epsilon);
}

Json ConvergePlan::to_json() const {
    Json j;
    j["dim"] = dim;
    j["N"] = N;
    j["epsilon"] = epsilon;
    j["r_const"] = r_const;
    j["c0"] = c0;
    j["trials"] = trials;
    j["grid_factor"] = grid_factor;
    j["n"] = n;
    j["dt_max"] = dt_max;
    j["kappa"] = kappa;
    j["T"] = T;
    j["theta"] = theta;
    j["amplitude"] = amplitude;
    j["tol"] = tol;
    j["seed"] = seed;
    j["bootstrap"] = bootstrap;
    j["record_every"] = record_every;
    j["write_series"] = write_series;
    return j;
}

ConvergePlan parse_converge(ConfigSection& s) {
    ConvergePlan p;
    p.dim = s.get_int("dim", p.dim);
    p.N = s.get_sizes("N", p.N);
    p.epsilon = s.get_double("epsilon", p.epsilon);
    p.r_const = s.get_double("r_const", p.r_const);
    p.c0 = s.get_double("c0", p.c0);
    p.trials = s.get_int("trials", p.trials);
    p.grid_factor = s.get_double("grid_factor", p.grid_factor);
    p.n = s.get_int("n", p.n);
    p.dt_max = s.get_double("dt_max", p.dt_max);
    p.kappa = s.get_int("kappa", p.kappa);
    p.T = s.get_double("T", p.T);
    p.theta = s.get_double("theta", p.theta);
    p.amplitude = s.get_double("amplitude", p.amplitude);
    p.tol = s.get_double("tol", p.tol);
    p.seed = s.get_u64("seed", p.seed);
    p.bootstrap = s.get_int("bootstrap", p.bootstrap);
    p.record_every = s.get_int("record_every", p.record_every);
    p.write_series = s.get_bool("write_series", p.write_series);
    s.finish();
    p.validate();
    return p;
}

namespace {

Json level_block(const ConvergeLevel& L, const std::vector<int>& status) {
    Json b;
    b["N"] = L.N;
    b["distance"] = L.distance;
    b["sup_x"] = L.sup_x;
    b["sup_v"] = L.sup_v;
    b["field"] = L.field;
    b["pb_iterations"] = L.pb_iterations;
    b["status"] = status;
    b["wall"] = L.wall;
    return b;
}

void plot_converge(const std::string& out) {
    auto rows = read_csv(out + "/trials.csv");
    std::map<double, std::vector<double>> byN;
    std::map<double, double> thr;
    for (const auto& r : rows) {
        if (r.count("status") && r.at("status") != "ok") continue;
        byN[num(r, "N")].push_back(num(r, "distance"));
        thr[num(r, "N")] = num(r, "threshold");
    }
    if (byN.empty()) return;
    Plot p;
    p.title = "Coupled vs auxiliary sup distance";
    p.xlabel = "N";
    p.ylabel = "sup |X-Y| + sup |V-W|";
    PlotSeries med{"median"}, lo{"10%"}, hi{"90%"}, th{"threshold"};
    lo.line = hi.line = false;
    th.markers = false;
    for (auto& kv : byN) {
        med.x.push_back(kv.first);
        med.y.push_back(median(kv.second));
        lo.x.push_back(kv.first);
        lo.y.push_back(quantile(kv.second, 0.1));
        hi.x.push_back(kv.first);
        hi.y.push_back(quantile(kv.second, 0.9));
        th.x.push_back(kv.first);
        th.y.push_back(thr[kv.first]);
    }
    p.series = {med, lo, hi, th};
    ensure_dir(out + "/plots");
    plot_safely(out + "/plots/converge.svg", p);
}

}  // namespace

ConvergeSummary run_converge(const ConvergePlan& plan, const RunOptions& opt) {
    plan.validate();
    const auto t_start = Clock::now();
    const Json cfg = plan.to_json();
    const std::string hash = fnv1a_hex(cfg.dump());
    const int threads = resolve_threads(opt.threads);
    const bool write = !opt.out.empty();
    if (write) {
        ensure_dir(opt.out + "/blocks");
        if (plan.write_series) ensure_dir(opt.out + "/series");
    }

    const double r_min = plan.radius(plan.N.back());
    const int n = plan.n > 0 ? plan.n : grid_policy(r_min, plan.grid_factor);
    const TorusGrid grid = make_grid(plan.dim, n);
    InitialDatum f0;
    f0.dim = plan.dim;
    f0.theta = plan.theta;
    f0.amplitude = plan.amplitude;
    f0.validate();

    ConvergeSummary sum;
    bool incomplete = false;
    Json levels = Json::array();
    Json trial_wall = Json::object();
    std::ostringstream csv;
    csv << "N,trial,seed,r,threshold,sup_x,sup_v,distance,max_field,pb_iterations,status\n";

    for (std::size_t N : plan.N) {
        ConvergeLevel L;
        L.N = N;
        L.r = plan.radius(N);
        L.n = n;
        L.threshold = plan.c0 * std::pow(static_cast<double>(N), -1.0 / plan.dim + plan.epsilon);
        SimulationConfig sc;
        sc.f0 = f0;
        sc.N = N;
        sc.r = L.r;
        sc.n = n;
        sc.dt = dt_policy(L.r, f0.vmax(), plan.dt_max);
        sc.T = plan.T;
        sc.kappa = plan.kappa;
        L.steps = sc.resolve();
        L.dt = sc.dt;
        const uint64_t nseed = derive_seed(plan.seed, 2, N);
        std::vector<int> status(plan.trials, 0);

        const std::string block = opt.out + "/blocks/" + hash + "-N" + std::to_string(N) + ".json";
        bool loaded = false;
        if (write && opt.resume && file_exists(block)) {
            std::ifstream in(block);
            Json b = Json::parse(in, nullptr, false);
            if (!b.is_discarded() && b.value("N", std::size_t(0)) == N &&
                b["distance"].size() == static_cast<std::size_t>(plan.trials)) {
                L.distance = b["distance"].get<std::vector<double>>();
                L.sup_x = b["sup_x"].get<std::vector<double>>();
                L.sup_v = b["sup_v"].get<std::vector<double>>();
                L.field = b["field"].get<std::vector<double>>();
                L.pb_iterations = b["pb_iterations"].get<std::vector<long>>();
                L.wall = b["wall"].get<std::vector<double>>();
                status = b["status"].get<std::vector<int>>();
                loaded = true;
            }
        }

        if (!loaded) {
            L.distance.assign(plan.trials, NAN);
            L.sup_x.assign(plan.trials, NAN);
            L.sup_v.assign(plan.trials, NAN);
            L.field.assign(plan.trials, NAN);
            L.pb_iterations.assign(plan.trials, 0);
            L.wall.assign(plan.trials, 0.0);
            std::unique_ptr<ParticleSystem> ref;
            try {
                ref = std::make_unique<ParticleSystem>(
                    sample_iid(f0, static_cast<std::size_t>(plan.kappa) * N, derive_seed(nseed, 1, 0)), grid, L.r,
                    plan.tol, true);
            } catch (const ConvergenceError&) {
                status.assign(plan.trials, 2);
            }
            std::vector<std::unique_ptr<PairState>> pairs(plan.trials);
            if (ref) {
                parallel_for(plan.trials, threads, [&](std::size_t t) {
                    auto t0 = Clock::now();
                    try {
                        pairs[t] = std::make_unique<PairState>(sample_iid(f0, N, derive_seed(nseed, 0, t)), grid, L.r,
                                                               plan.tol, true, ref->solver());
                    } catch (const ConvergenceError&) {
                        status[t] = 1;
                    }
                    L.wall[t] += seconds_since(t0);
                });
                for (int s = 1; s <= L.steps; ++s) {
                    try {
                        ref->step(L.dt);
                    } catch (const ConvergenceError&) {
                        for (int t = 0; t < plan.trials; ++t) {
                            if (status[t] == 0) status[t] = 2;
                            pairs[t].reset();
                        }
                        break;
                    }
                    parallel_for(plan.trials, threads, [&](std::size_t t) {
                        if (!pairs[t]) return;
                        auto t0 = Clock::now();
                        try {
                            pairs[t]->step(L.dt, ref->solver());
                            pairs[t]->record(s * L.dt, plan.record_every, s);
                        } catch (const ConvergenceError&) {
                            status[t] = 1;
                            pairs[t].reset();
                        }
                        L.wall[t] += seconds_since(t0);
                    });
                }
            }
            for (int t = 0; t < plan.trials; ++t) {
                if (!pairs[t] || status[t] != 0) continue;
                PairedTrajectory tr = pairs[t]->finish(L.steps, L.dt);
                pairs[t].reset();
                L.distance[t] = tr.distance();
                L.sup_x[t] = tr.run_sup_x;
                L.sup_v[t] = tr.run_sup_v;
                L.field[t] = tr.max_field_diff;
                L.pb_iterations[t] = tr.pb_iterations;
                if (write && plan.write_series) {
                    std::ofstream f(opt.out + "/series/N" + std::to_string(N) + "_trial" + std::to_string(t) + ".csv");
                    write_series_csv(f, tr);
                }
            }
            if (write) write_json(block, level_block(L, status));
        }

        std::vector<double> ok;
        int exceed = 0;
        for (int t = 0; t < plan.trials; ++t) {
            const char* st = status[t] == 0 ? "ok" : (status[t] == 1 ? "trial_abort" : "reference_abort");
            csv << N << ',' << t << ',' << derive_seed(nseed, 0, t) << ',' << g17(L.r) << ',' << g17(L.threshold)
                << ',' << g17(L.sup_x[t]) << ',' << g17(L.sup_v[t]) << ',' << g17(L.distance[t]) << ','
                << g17(L.field[t]) << ',' << L.pb_iterations[t] << ',' << st << '\n';
            if (status[t] != 0) continue;
            ok.push_back(L.distance[t]);
            if (L.distance[t] > L.threshold) ++exceed;
        }
        if (ok.size() != static_cast<std::size_t>(plan.trials)) incomplete = true;
        Json lv;
        lv["N"] = N;
        lv["r"] = L.r;
        lv["n"] = n;
        lv["dt"] = L.dt;
        lv["steps"] = L.steps;
        lv["trials"] = plan.trials;
        lv["completed"] = ok.size();
        lv["threshold"] = L.threshold;
        if (!ok.empty()) {
            L.median = median(ok);
            L.q10 = quantile(ok, 0.1);
            L.q90 = quantile(ok, 0.9);
            L.exceed_freq = static_cast<double>(exceed) / ok.size();
            lv["median"] = L.median;
            lv["q10"] = L.q10;
            lv["q90"] = L.q90;
            lv["exceed_freq"] = L.exceed_freq;
        } else {
            lv["median"] = nullptr;
        }
        levels.push_back(lv);
        trial_wall[std::to_string(N)] = L.wall;
        sum.levels.push_back(std::move(L));
    }

    std::vector<double> xs, meds;
    std::vector<std::vector<double>> groups;
    std::vector<double> freqs;
    std::vector<int> counts;
    for (const ConvergeLevel& L : sum.levels) {
        std::vector<double> g;
        for (double v : L.distance)
            if (std::isfinite(v)) g.push_back(v);
        if (g.empty()) continue;
        xs.push_back(static_cast<double>(L.N));
        meds.push_back(L.median);
        groups.push_back(std::move(g));
        freqs.push_back(L.exceed_freq);
        counts.push_back(static_cast<int>(groups.back().size()));
    }
    sum.insufficient_ladder = xs.size() < 4;
    Json fit = nullptr;
    if (xs.size() >= 2) {
        SlopeCI ci = bootstrap_median_slope(xs, groups, plan.bootstrap, derive_seed(plan.seed, 3, 0));
        sum.slope = ci.slope;
        sum.ci_lo = ci.lo;
        sum.ci_hi = ci.hi;
        fit = Json::object();
        fit["slope"] = ci.slope;
        fit["ci_lo"] = ci.lo;
        fit["ci_hi"] = ci.hi;
        fit["resamples"] = ci.resamples;
        fit["level"] = 0.95;
    }
    sum.strictly_decreasing = xs.size() >= 2;
    for (std::size_t i = 1; i < meds.size(); ++i)
        if (!(meds[i] < meds[i - 1])) sum.strictly_decreasing = false;
    sum.exceed_monotone = nonincreasing_within_3sigma(freqs, counts);

    Json& j = sum.json;
    j["kind"] = "converge";
    j["plan_hash"] = hash;
    j["config"] = cfg;
    j["grid_n"] = n;
    j["levels"] = levels;
    j["fit"] = fit;
    j["flags"] = {{"insufficient_ladder", sum.insufficient_ladder},
                  {"incomplete", incomplete},
                  {"median_strictly_decreasing", sum.strictly_decreasing},
                  {"exceedance_nonincreasing_3sigma", sum.exceed_monotone}};

    if (write) {
        write_json(opt.out + "/summary.json", j);
        std::ofstream(opt.out + "/trials.csv") << csv.str();
        Json extra;
        extra["threads"] = threads;
        extra["trial_wall"] = trial_wall;
        write_meta(opt.out, "converge", hash, seconds_since(t_start), extra);
        if (opt.plot) plot_converge(opt.out);
    }
    return sum;
}

// ---------------------------------------------------------------- flow rate

void FlowPlan::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    if (radii.size() < 2) throw ConfigError("flow-rate needs at least two radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0 && radii[i] < 0.5)) throw ConfigError("radii must lie in (0, 1/2)");
        if (i > 0 && !(radii[i] < radii[i - 1])) throw ConfigError("radii must be decreasing");
    }
    if (M < 1 || probes < 1) throw ConfigError("M and probes must be positive");
    if (!(T > 0) || !(theta > 0) || !(dt_max > 0)) throw ConfigError("T, theta and dt_max must be positive");
    if (!(amplitude >= 0 && amplitude < 1)) throw ConfigError("amplitude must lie in [0, 1)");
}

Json FlowPlan::to_json() const {
    Json j;
    j["dim"] = dim;
    j["radii"] = radii;
    j["M"] = M;
    j["probes"] = probes;
    j["T"] = T;
    j["theta"] = theta;
    j["amplitude"] = amplitude;
    j["grid_factor"] = grid_factor;
    j["dt_max"] = dt_max;
    j["probe_speed"] = probe_speed;
    j["tol"] = tol;
    j["quiet"] = quiet;
    j["seed"] = seed;
    return j;
}

FlowPlan parse_flow(ConfigSection& s) {
    FlowPlan p;
    p.dim = s.get_int("dim", p.dim);
    p.radii = s.get_doubles("radii", p.radii);
    p.M = static_cast<std::size_t>(s.get_u64("M", p.M));
    p.probes = s.get_int("probes", p.probes);
    p.T = s.get_double("T", p.T);
    p.theta = s.get_double("theta", p.theta);
    p.amplitude = s.get_double("amplitude", p.amplitude);
    p.grid_factor = s.get_double("grid_factor", p.grid_factor);
    p.dt_max = s.get_double("dt_max", p.dt_max);
    p.probe_speed = s.get_double("probe_speed", p.probe_speed);
    p.tol = s.get_double("tol", p.tol);
    p.quiet = s.get_bool("quiet", p.quiet);
    p.seed = s.get_u64("seed", p.seed);
    s.finish();
    p.validate();
    return p;
}

FlowRung run_flow_rung(const FlowPlan& plan, double r, double dt, int steps) {
    FlowRung rung;
    rung.r = r;
    rung.n = grid_policy(r, plan.grid_factor);
    const TorusGrid g = make_grid(plan.dim, rung.n);
    InitialDatum f0;
    f0.dim = plan.dim;
    f0.theta = plan.theta;
    f0.amplitude = plan.amplitude;
    ParticleEnsemble R0 = plan.quiet ? sample_quiet(f0, plan.M) : sample_iid(f0, plan.M, derive_seed(plan.seed, 4, 0));
    ParticleSystem ref(std::move(R0), g, r, plan.tol, true);
    PassiveSystem probes(probe_ensemble(plan.dim, plan.probes, plan.probe_speed), ref.solver());
    const int d = plan.dim;
    const std::size_t P = static_cast<std::size_t>(plan.probes);
    rung.states.resize(static_cast<std::size_t>(steps + 1) * P * 2 * d);
    auto store = [&](int s) {
        const ParticleEnsemble& e = probes.ensemble();
        double* dst = &rung.states[static_cast<std::size_t>(s) * P * 2 * d];
        for (std::size_t i = 0; i < P; ++i)
            for (int a = 0; a < d; ++a) {
                dst[i * 2 * d + a] = e.x[i * d + a];
                dst[i * 2 * d + d + a] = e.v[i * d + a];
            }
    };
    store(0);
    for (int s = 1; s <= steps; ++s) {
        ref.step(dt);
        probes.step(dt, ref.solver());
        store(s);
    }
    return rung;
}

double flow_difference(const FlowRung& a, const FlowRung& b, int d) {
    if (a.states.size() != b.states.size()) throw DomainError("rungs have different shapes");
    double sup = 0;
    for (std::size_t k = 0; k < a.states.size(); k += 2 * d) {
        double dx = 0, dv = 0;
        for (int c = 0; c < d; ++c) {
            double u = wrap(a.states[k + c] - b.states[k + c]);
            double w = a.states[k + d + c] - b.states[k + d + c];
            dx += u * u;
            dv += w * w;
        }
        sup = std::max(sup, std::sqrt(dx) + std::sqrt(dv));
    }
    return sup;
}

namespace {

void plot_flow(const std::string& out) {
    auto rows = read_csv(out + "/ladder.csv");
    if (rows.empty()) return;
    Plot p;
    p.title = "Flow differences between dyadic radii";
    p.xlabel = "r (finer rung)";
    p.ylabel = "sup |dY| + |dW|";
    PlotSeries s{"difference"}, ref{"slope 1 guide"};
    ref.markers = false;
    for (const auto& r : rows) {
        s.x.push_back(num(r, "r_fine"));
        s.y.push_back(num(r, "difference"));
    }
    if (!s.x.empty()) {
        ref.x = {s.x.front(), s.x.back()};
        ref.y = {s.y.front(), s.y.front() * s.x.back() / s.x.front()};
    }
    p.series = {s, ref};
    ensure_dir(out + "/plots");
    plot_safely(out + "/plots/flow_rate.svg", p);
}

}  // namespace

FlowSummary run_flow_rate(const FlowPlan& plan, const RunOptions& opt) {
    plan.validate();
    const auto t_start = Clock::now();
    const Json cfg = plan.to_json();
    const std::string hash = fnv1a_hex(cfg.dump());
    const bool write = !opt.out.empty();
    if (write) ensure_dir(opt.out + "/blocks");

    InitialDatum f0;
    f0.dim = plan.dim;
    f0.theta = plan.theta;
    f0.amplitude = plan.amplitude;
    FlowSummary sum;
    const double cap = dt_policy(plan.radii.back(), f0.vmax(), plan.dt_max);
    sum.steps = static_cast<int>(std::ceil(plan.T / cap - 1e-9));
    sum.dt = plan.T / sum.steps;

    std::vector<FlowRung> rungs(plan.radii.size());
    const int threads = resolve_threads(opt.threads);
    parallel_for(plan.radii.size(), std::min<int>(threads, 2), [&](std::size_t k) {
        const std::string block = opt.out + "/blocks/" + hash + "-rung" + std::to_string(k) + ".bin";
        const std::size_t count =
            static_cast<std::size_t>(sum.steps + 1) * plan.probes * 2 * plan.dim;
        if (write && opt.resume && file_exists(block)) {
            std::ifstream in(block, std::ios::binary);
            FlowRung r;
            r.r = plan.radii[k];
            r.n = grid_policy(r.r, plan.grid_factor);
            r.states.resize(count);
            in.read(reinterpret_cast<char*>(r.states.data()), static_cast<std::streamsize>(count * sizeof(double)));
            if (in && in.peek() == EOF) {
                rungs[k] = std::move(r);
                return;
            }
        }
        rungs[k] = run_flow_rung(plan, plan.radii[k], sum.dt, sum.steps);
        if (write) {
            std::ofstream outb(block, std::ios::binary);
            outb.write(reinterpret_cast<const char*>(rungs[k].states.data()),
                       static_cast<std::streamsize>(count * sizeof(double)));
        }
    });

    std::ostringstream csv;
    csv << "r_coarse,r_fine,difference,ratio\n";
    Json diffs = Json::array();
    for (const FlowRung& r : rungs) sum.grids.push_back(r.n);
    for (std::size_t k = 0; k + 1 < rungs.size(); ++k) {
        double dk = flow_difference(rungs[k], rungs[k + 1], plan.dim);
        sum.differences.push_back(dk);
        double ratio = k > 0 ? dk / sum.differences[k - 1] : NAN;
        if (k > 0) sum.ratios.push_back(ratio);
        Json e;
        e["r_coarse"] = rungs[k].r;
        e["r_fine"] = rungs[k + 1].r;
        e["difference"] = dk;
        e["ratio"] = k > 0 ? Json(ratio) : Json(nullptr);
        diffs.push_back(e);
        csv << g17(rungs[k].r) << ',' << g17(rungs[k + 1].r) << ',' << g17(dk) << ','
            << (k > 0 ? g17(ratio) : std::string("")) << '\n';
    }
    sum.strictly_decreasing = true;
    for (std::size_t k = 1; k < sum.differences.size(); ++k)
        if (!(sum.differences[k] < sum.differences[k - 1])) sum.strictly_decreasing = false;
    sum.last_ratio = sum.ratios.empty() ? NAN : sum.ratios.back();

    Json& j = sum.json;
    j["kind"] = "flow-rate";
    j["plan_hash"] = hash;
    j["config"] = cfg;
    j["dt"] = sum.dt;
    j["steps"] = sum.steps;
    j["grids"] = sum.grids;
    j["differences"] = diffs;
    j["flags"] = {{"strictly_decreasing", sum.strictly_decreasing},
                  {"last_ratio", sum.ratios.empty() ? Json(nullptr) : Json(sum.last_ratio)}};
    if (write) {
        write_json(opt.out + "/summary.json", j);
        std::ofstream(opt.out + "/ladder.csv") << csv.str();
        Json extra;
        extra["threads"] = threads;
        write_meta(opt.out, "flow-rate", hash, seconds_since(t_start), extra);
        if (opt.plot) plot_flow(opt.out);
    }
    return sum;
}

// ---------------------------------------------------------------- LLN

namespace {

const char* kind_name(TestKind k) {
    switch (k) {
        case TestKind::Chi: return "chi";
        case TestKind::ScaledChi: return "r_chi";
        case TestKind::KernelComponent: return "kernel";
    }
    return "?";
}

void plot_tail(const std::string& out) {
    auto rows = read_csv(out + "/tail.csv");
    if (rows.empty()) return;
    Plot p;
    p.title = "Failure frequency and Bernstein bound";
    p.xlabel = "N";
    p.ylabel = "probability";
    PlotSeries f{"empirical"}, b{"Bernstein sum"};
    for (const auto& r : rows) {
        f.x.push_back(num(r, "N"));
        f.y.push_back(std::max(num(r, "failure_freq"), 1e-4));
        b.x.push_back(num(r, "N"));
        b.y.push_back(num(r, "bernstein"));
    }
    p.series = {f, b};
    ensure_dir(out + "/plots");
    plot_safely(out + "/plots/tail.svg", p);

    Plot q;
    q.title = "Mesh-point standard deviation";
    q.xlabel = "N";
    q.ylabel = "std of g*mu at mesh points";
    PlotSeries s{"mean pointwise std"}, h{"N^-1/2 guide"};
    h.markers = false;
    for (const auto& r : rows) {
        s.x.push_back(num(r, "N"));
        s.y.push_back(num(r, "mean_pointwise_std"));
    }
    if (!s.x.empty()) {
        h.x = {s.x.front(), s.x.back()};
        h.y = {s.y.front(), s.y.front() * std::sqrt(s.x.front() / s.x.back())};
    }
    q.series = {s, h};
    plot_safely(out + "/plots/lln_std.svg", q);
}

}  // namespace

Json LLNPlan::to_json() const {
    Json j;
    j["dim"] = cfg.dim;
    j["g"] = kind_name(cfg.kind);
    j["component"] = cfg.component;
    j["r"] = cfg.r;
    j["delta"] = cfg.delta;
    j["gamma"] = cfg.gamma;
    j["N"] = cfg.N;
    j["trials"] = cfg.trials;
    j["amplitude"] = cfg.amplitude;
    j["grid_factor"] = cfg.grid_factor;
    j["probe_sup"] = cfg.probe_sup;
    j["seed"] = cfg.seed;
    j["perturbed"] = perturbed;
    j["perturbation"] = perturbation;
    j["exact_suite"] = exact_suite;
    j["exact_N"] = exact_N;
    return j;
}

LLNPlan parse_lln(ConfigSection& s) {
    LLNPlan p;
    LLNConfig& c = p.cfg;
    c.dim = s.get_int("dim", c.dim);
    std::string g = s.get_string("g", "chi");
    if (g == "chi") c.kind = TestKind::Chi;
    else if (g == "r_chi") c.kind = TestKind::ScaledChi;
    else if (g == "kernel") c.kind = TestKind::KernelComponent;
    else throw ConfigError("[lln] g must be \"chi\", \"r_chi\" or \"kernel\"");
    c.component = s.get_int("component", c.component);
    c.r = s.get_double("r", c.r);
    c.delta = s.get_double("delta", c.delta);
    c.gamma = s.get_double("gamma", c.gamma);
    c.N = s.get_sizes("N", c.N);
    c.trials = s.get_int("trials", c.trials);
    c.amplitude = s.get_double("amplitude", c.amplitude);
    c.grid_factor = s.get_double("grid_factor", c.grid_factor);
    c.probe_sup = s.get_bool("probe_sup", c.probe_sup);
    c.seed = s.get_u64("seed", c.seed);
    p.perturbed = s.get_bool("perturbed", p.perturbed);
    p.perturbation = s.get_double("perturbation", p.perturbation);
    p.exact_suite = s.get_bool("exact_suite", p.exact_suite);
    p.exact_N = static_cast<std::size_t>(s.get_u64("exact_N", p.exact_N));
    s.finish();
    if (!(c.r > 0 && c.r < 0.25)) throw ConfigError("[lln] r must lie in (0, 1/4)");
    if (!(c.delta > 0 && c.delta < 1) || !(c.gamma > 0 && c.gamma < 1))
        throw ConfigError("[lln] delta and gamma must lie in (0, 1)");
    if (p.perturbed && !(p.perturbation >= 0 && p.perturbation < c.r))
        throw ConfigError("[lln] perturbation must lie in [0, r)");
    return p;
}

Json tail_json(const TailReport& t) {
    Json j;
    j["n"] = t.n;
    j["mesh_per_axis"] = t.mesh_per_axis;
    j["mesh_size"] = t.mesh_size;
    j["threshold"] = t.threshold;
    j["perturbation"] = t.perturbation;
    j["rho_sup"] = t.rho_sup;
    j["g_norms"] = {t.g_norms[0], t.g_norms[1], t.g_norms[2]};
    j["h_norms"] = {t.h_norms[0], t.h_norms[1], t.h_norms[2]};
    j["l_norms"] = {t.l_norms[0], t.l_norms[1], t.l_norms[2]};
    Json pts = Json::array();
    for (const LLNPoint& p : t.points) {
        Json e;
        e["N"] = p.N;
        e["trials"] = p.trials;
        e["failures"] = p.failures;
        e["failure_freq"] = p.failure_freq;
        e["bernstein"] = p.bernstein;
        e["vacuous"] = p.vacuous;
        e["median_mesh_err"] = p.median_mesh_err;
        e["median_probe_err"] = p.median_probe_err;
        e["median_mesh_err_h"] = p.median_mesh_err_h;
        e["mean_pointwise_std"] = p.mean_pointwise_std;
        e["fixed_point_std"] = p.fixed_point_std;
        e["err_quantiles"] = {p.err_quantiles[0], p.err_quantiles[1], p.err_quantiles[2]};
        pts.push_back(e);
    }
    j["points"] = pts;
    j["std_slope"] = t.std_slope;
    j["fixed_std_slope"] = t.fixed_std_slope;
    return j;
}

LLNSummary run_lln_experiment(const LLNPlan& plan, const RunOptions& opt) {
    const auto t_start = Clock::now();
    LLNConfig cfg = plan.cfg;
    cfg.threads = resolve_threads(opt.threads);
    const Json pj = plan.to_json();
    const std::string hash = fnv1a_hex(pj.dump());
    LLNSummary sum;
    sum.tail = plan.perturbed ? run_lln_perturbed(cfg, plan.perturbation) : run_lln(cfg);
    Json& j = sum.json;
    j["kind"] = "lln";
    j["plan_hash"] = hash;
    j["config"] = pj;
    j["tail"] = tail_json(sum.tail);
    bool envelope = true;
    for (const LLNPoint& p : sum.tail.points)
        if (!p.vacuous && p.failure_freq > p.bernstein) envelope = false;
    j["flags"] = {{"bernstein_envelope_holds", envelope}};
    if (plan.exact_suite) {
        LLNConfig ec = cfg;
        ec.N = {plan.exact_N};
        sum.exact = exact_inequality_suite(ec);
        sum.has_exact = true;
        j["exact_suite"] = {{"trials", sum.exact.trials},
                            {"approx_pass", sum.exact.approx_pass},
                            {"mesh_pass", sum.exact.mesh_pass},
                            {"worst_approx_ratio", sum.exact.worst_approx_ratio},
                            {"worst_mesh_ratio", sum.exact.worst_mesh_ratio}};
    }
    if (!opt.out.empty()) {
        ensure_dir(opt.out);
        write_json(opt.out + "/summary.json", j);
        std::ofstream csv(opt.out + "/tail.csv");
        csv << "N,trials,failures,failure_freq,bernstein,vacuous,median_mesh_err,median_probe_err,mean_pointwise_std,"
               "fixed_point_std\n";
        for (const LLNPoint& p : sum.tail.points)
            csv << p.N << ',' << p.trials << ',' << p.failures << ',' << g17(p.failure_freq) << ','
                << g17(p.bernstein) << ',' << (p.vacuous ? 1 : 0) << ',' << g17(p.median_mesh_err) << ','
                << g17(p.median_probe_err) << ',' << g17(p.mean_pointwise_std) << ',' << g17(p.fixed_point_std)
                << '\n';
        csv.close();
        std::ofstream tr(opt.out + "/trials.csv");
        tr << "N,trial,sup_error\n";
        for (const LLNPoint& p : sum.tail.points)
            for (std::size_t t = 0; t < p.sup_errors.size(); ++t) tr << p.N << ',' << t << ',' << g17(p.sup_errors[t]) << '\n';
        tr.close();
        Json extra;
        extra["threads"] = cfg.threads;
        write_meta(opt.out, "lln", hash, seconds_since(t_start), extra);
        if (opt.plot) plot_tail(opt.out);
    }
    return sum;
}

// ---------------------------------------------------------------- PB validation

Json PbPlan::to_json() const {
    Json j;
    j["dim"] = dim;
    j["n"] = n;
    j["densities"] = densities;
    j["tol"] = tol;
    j["seed"] = seed;
    return j;
}

PbPlan parse_pb(ConfigSection& s) {
    PbPlan p;
    p.dim = s.get_int("dim", p.dim);
    p.n = s.get_int("n", p.n);
    p.densities = s.get_int("densities", p.densities);
    p.tol = s.get_double("tol", p.tol);
    p.seed = s.get_u64("seed", p.seed);
    s.finish();
    if (p.dim < 1 || p.dim > 3) throw ConfigError("[pb-validate] dim must be 1, 2 or 3");
    if (p.densities < 1) throw ConfigError("[pb-validate] densities must be >= 1");
    return p;
}

ManufacturedResult pb_manufactured(int dim, int n, double tol) {
    const TorusGrid g = make_grid(dim, n);
    const double amp = 0.3;
    double m = 0;
    for (std::size_t i = 0; i < g.size(); ++i) m += std::exp(amp * std::cos(2.0 * M_PI * g.node(i)[0]));
    const double shift = -std::log(m / static_cast<double>(g.size()));
    ScalarField exact = sample(g, [&](const Point& x) { return amp * std::cos(2.0 * M_PI * x[0]) + shift; });
    ScalarField rho = sample(g, [&](const Point& x) {
        double c = std::cos(2.0 * M_PI * x[0]);
        return 4.0 * M_PI * M_PI * amp * c + std::exp(amp * c + shift);
    });
    PbOptions opt;
    opt.tol = tol;
    opt.clip_negative = false;
    PotentialSolution sol = solve_pb(rho, opt);
    ManufacturedResult res;
    for (std::size_t i = 0; i < g.size(); ++i) res.sup_error = std::max(res.sup_error, std::abs(sol.phi.v[i] - exact.v[i]));
    res.residual = sol.residual_sup;
    res.iterations = sol.iterations;
    PotentialSolution uni = solve_pb(ScalarField(g, 1.0), PbOptions{tol});
    res.uniform_phi_sup = uni.phi.lp_norm(INFINITY);
    return res;
}

ScalarField random_density(const TorusGrid& g, uint64_t seed, double strength) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> mode(-3, 3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int terms = 4;
    std::vector<std::array<int, 3>> ks;
    std::vector<double> amp, phase;
    double total = 0;
    for (int t = 0; t < terms; ++t) {
        std::array<int, 3> k{0, 0, 0};
        do {
            for (int a = 0; a < g.dim; ++a) k[a] = mode(rng);
        } while (k[0] == 0 && k[1] == 0 && k[2] == 0);
        ks.push_back(k);
        amp.push_back(unif(rng));
        phase.push_back(2.0 * M_PI * unif(rng));
        total += amp.back();
    }
    const double s = strength * (0.25 + 0.75 * unif(rng)) / total;
    ScalarField f = sample(g, [&](const Point& x) {
        double v = 1.0;
        for (int t = 0; t < terms; ++t) {
            double arg = phase[t];
            for (int a = 0; a < g.dim; ++a) arg += 2.0 * M_PI * ks[t][a] * x[a];
            v += s * amp[t] * std::cos(arg);
        }
        return v;
    });
    const double mean = f.mean();
    for (double& v : f.v) v /= mean;
    return f;
}

DensitySuiteResult pb_density_suite(const PbPlan& plan) {
    const TorusGrid g = make_grid(plan.dim, plan.n);
    DensitySuiteResult res;
    res.densities = plan.densities;
    for (int i = 0; i < plan.densities; ++i) {
        ScalarField rho = random_density(g, derive_seed(plan.seed, 5, i));
        PbOptions opt;
        opt.tol = plan.tol;
        PotentialSolution sol = solve_pb(rho, opt);
        bool lp = true;
        for (int k = 0; k < 3; ++k) {
            double e = sol.diag.exp_norms[k], r = sol.diag.rho_norms[k];
            res.worst_lp_ratio = std::max(res.worst_lp_ratio, e / r);
            if (!(e <= r * (1.0 + 1e-8))) lp = false;
        }
        res.lp_pass += lp ? 1 : 0;
        bool lb = lower_bound_check(sol, rho, 2.0).ok() && lower_bound_check(sol, rho, INFINITY).ok();
        res.lower_bound_pass += lb ? 1 : 0;
        double neutral = 0;
        for (std::size_t k = 0; k < g.size(); ++k) neutral += rho.v[k] - std::exp(sol.phi.v[k]);
        res.worst_neutrality = std::max(res.worst_neutrality, std::abs(neutral * g.cell_volume()));
        res.clamp_hits += sol.diag.clamp_hits;
    }
    return res;
}

Json run_pb_validate(const PbPlan& plan, const RunOptions& opt) {
    const auto t_start = Clock::now();
    const Json pj = plan.to_json();
    ManufacturedResult m = pb_manufactured(plan.dim, plan.n, plan.tol);
    DensitySuiteResult d = pb_density_suite(plan);
    Json j;
    j["kind"] = "pb-validate";
    j["plan_hash"] = fnv1a_hex(pj.dump());
    j["config"] = pj;
    j["manufactured"] = {{"sup_error", m.sup_error},
                         {"residual", m.residual},
                         {"iterations", m.iterations},
                         {"uniform_phi_sup", m.uniform_phi_sup}};
    j["densities"] = {{"count", d.densities},
                      {"lp_pass", d.lp_pass},
                      {"lower_bound_pass", d.lower_bound_pass},
                      {"worst_lp_ratio", d.worst_lp_ratio},
                      {"worst_neutrality", d.worst_neutrality},
                      {"clamp_hits", d.clamp_hits}};
    if (!opt.out.empty()) {
        ensure_dir(opt.out);
        write_json(opt.out + "/summary.json", j);
        write_meta(opt.out, "pb-validate", j["plan_hash"], seconds_since(t_start), Json::object());
    }
    return j;
}

// ---------------------------------------------------------------- simulate

SimulationConfig parse_simulate(ConfigSection& s) {
    SimulationConfig c;
    c.f0.dim = s.get_int("dim", c.f0.dim);
    c.f0.theta = s.get_double("theta", 0.01);
    c.f0.amplitude = s.get_double("amplitude", 0.2);
    c.N = static_cast<std::size_t>(s.get_u64("N", c.N));
    c.r = s.get_double("r", c.r);
    c.n = s.get_int("n", c.n);
    c.dt = s.get_double("dt", c.dt);
    c.T = s.get_double("T", c.T);
    c.kappa = s.get_int("kappa", c.kappa);
    c.tol = s.get_double("tol", c.tol);
    c.seed = s.get_u64("seed", c.seed);
    c.quiet_reference = s.get_bool("quiet_reference", c.quiet_reference);
    c.warm_start = s.get_bool("warm_start", c.warm_start);
    c.record_every = s.get_int("record_every", c.record_every);
    s.finish();
    try {
        SimulationConfig probe = c;
        probe.resolve();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("[simulate] ") + e.what());
    }
    return c;
}

Json run_simulate(SimulationConfig cfg, const RunOptions& opt) {
    const auto t_start = Clock::now();
    cfg.resolve();
    Json pj;
    pj["dim"] = cfg.f0.dim;
    pj["theta"] = cfg.f0.theta;
    pj["amplitude"] = cfg.f0.amplitude;
    pj["N"] = cfg.N;
    pj["r"] = cfg.r;
    pj["n"] = cfg.n;
    pj["dt"] = cfg.dt;
    pj["T"] = cfg.T;
    pj["kappa"] = cfg.kappa;
    pj["tol"] = cfg.tol;
    pj["seed"] = cfg.seed;
    pj["quiet_reference"] = cfg.quiet_reference;
    pj["record_every"] = cfg.record_every;
    PairedTrajectory tr = run_pair(cfg);
    Json j;
    j["kind"] = "simulate";
    j["plan_hash"] = fnv1a_hex(pj.dump());
    j["config"] = pj;
    j["steps"] = tr.steps;
    j["run_sup_x"] = tr.run_sup_x;
    j["run_sup_v"] = tr.run_sup_v;
    j["distance"] = tr.distance();
    j["max_field_diff"] = tr.max_field_diff;
    j["pb_iterations"] = tr.pb_iterations;

    KineticDistanceParams kp;
    kp.r = cfg.r;
    kp.alpha0 = 0.5 * cfg.r;
    kp.beta0 = 0.5 * cfg.r;
    bool uniform = cfg.record_every == 1;
    try {
        kp.validate();
    } catch (const DomainError&) {
        uniform = false;
    }
    if (uniform) {
        std::vector<double> sx, sv, fd;
        double mx = 0, mv = 0;
        for (const SeriesRow& r : tr.series) {
            mx = std::max(mx, r.supX);
            mv = std::max(mv, r.supV);
            sx.push_back(mx);
            sv.push_back(mv);
            fd.push_back(r.maxField);
        }
        std::vector<double> J = J_of_t(kp, sx, sv);
        GronwallAudit a = gronwall_audit(kp, J, fd, tr.dt);
        JBasicsReport b = check_jbasics(kp, J, sx, sv);
        j["kinetic_distance"] = {{"alpha0", kp.alpha0},
                                 {"beta0", kp.beta0},
                                 {"J_final", J.back()},
                                 {"jbasics_violations", b.violations},
                                 {"gronwall_violations", a.violations},
                                 {"max_field_ratio", a.max_ratio}};
    }
    if (!opt.out.empty()) {
        ensure_dir(opt.out);
        write_json(opt.out + "/summary.json", j);
        std::ofstream f(opt.out + "/series.csv");
        write_series_csv(f, tr);
        write_meta(opt.out, "simulate", j["plan_hash"], seconds_since(t_start), Json::object());
        if (opt.plot) regenerate_plots(opt.out);
    }
    return j;
}

int regenerate_plots(const std::string& out) {
    int made = 0;
    auto count = [&](const std::string& svg) {
        if (file_exists(out + "/plots/" + svg)) ++made;
    };
    if (file_exists(out + "/trials.csv") && file_exists(out + "/blocks")) {
        plot_converge(out);
        count("converge.svg");
    }
    if (file_exists(out + "/tail.csv")) {
        plot_tail(out);
        count("tail.svg");
    }
    if (file_exists(out + "/ladder.csv")) {
        plot_flow(out);
        count("flow_rate.svg");
    }
    if (file_exists(out + "/series.csv")) {
        auto rows = read_csv(out + "/series.csv");
        Plot p;
        p.title = "Paired run";
        p.xlabel = "t";
        p.ylabel = "distance";
        p.logx = false;
        PlotSeries x{"|X-Y|"}, v{"|V-W|"};
        x.markers = v.markers = false;
        for (const auto& r : rows) {
            x.x.push_back(num(r, "time"));
            x.y.push_back(num(r, "supX"));
            v.x.push_back(num(r, "time"));
            v.y.push_back(num(r, "supV"));
        }
        p.series = {x, v};
        ensure_dir(out + "/plots");
        plot_safely(out + "/plots/series.svg", p);
        count("series.svg");
    }
    return made;
}

}  // namespace vpme
