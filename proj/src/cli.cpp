#include "vpme/cli.hpp"

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "vpme/experiments.hpp"

namespace vpme {

namespace {

struct Common {
    std::string config;
    std::optional<uint64_t> seed;
    std::string out;
    int threads = 0;
    bool plot = false;
    bool no_resume = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "Plan file ([section] key = value)");
    sub->add_option("--seed", c.seed, "Master seed, overrides the plan");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--threads", c.threads, "Worker threads (0: all cores; VPME_THREADS overrides)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--plot", c.plot, "Emit SVG plots");
    sub->add_flag("--no-resume", c.no_resume, "Ignore completed blocks in the output directory");
}

const std::set<std::string> kSections{"converge", "flow-rate", "lln", "pb-validate", "simulate"};

ConfigSection load_section(const Common& c, const std::string& name) {
    if (c.config.empty()) return ConfigSection(name, {});
    return ConfigFile::load(c.config, kSections).section(name);
}

RunOptions options(const Common& c) {
    RunOptions o;
    o.out = c.out;
    o.threads = c.threads;
    o.plot = c.plot;
    o.resume = !c.no_resume;
    return o;
}

void print_summary(const Json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Particle and mean-field experiments on the torus with massless electrons"};
    app.require_subcommand(1);
    Common c;
    auto* pb = app.add_subcommand("pb-validate", "Manufactured solution and random density checks of the PB solver");
    auto* sim = app.add_subcommand("simulate", "One coupled particle / auxiliary run");
    auto* lln = app.add_subcommand("lln", "Concentration tails of g * mu_Y around g * rho");
    auto* conv = app.add_subcommand("converge", "Mean-field convergence ladder over N");
    auto* flow = app.add_subcommand("flow-rate", "Auxiliary flow differences down a dyadic r ladder");
    auto* rep = app.add_subcommand("report", "Regenerate plots from persisted CSV files");
    for (auto* s : {pb, sim, lln, conv, flow}) add_common(s, c);
    rep->add_option("--out", c.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const RunOptions opt = options(c);
        if (*pb) {
            ConfigSection s = load_section(c, "pb-validate");
            PbPlan p = parse_pb(s);
            if (c.seed) p.seed = *c.seed;
            print_summary(run_pb_validate(p, opt));
        } else if (*sim) {
            ConfigSection s = load_section(c, "simulate");
            SimulationConfig p = parse_simulate(s);
            if (c.seed) p.seed = *c.seed;
            print_summary(run_simulate(p, opt));
        } else if (*lln) {
            ConfigSection s = load_section(c, "lln");
            LLNPlan p = parse_lln(s);
            if (c.seed) p.cfg.seed = *c.seed;
            print_summary(run_lln_experiment(p, opt).json);
        } else if (*conv) {
            ConfigSection s = load_section(c, "converge");
            ConvergePlan p = parse_converge(s);
            if (c.seed) p.seed = *c.seed;
            print_summary(run_converge(p, opt).json);
        } else if (*flow) {
            ConfigSection s = load_section(c, "flow-rate");
            FlowPlan p = parse_flow(s);
            if (c.seed) p.seed = *c.seed;
            print_summary(run_flow_rate(p, opt).json);
        } else if (*rep) {
            int made = regenerate_plots(c.out);
            std::cout << made << " plot(s) written to " << c.out << "/plots\n";
            if (made == 0) {
                std::cerr << "no persisted CSV found in " << c.out << '\n';
                return 2;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

}  // namespace vpme
