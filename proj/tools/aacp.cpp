// aacp: run the simulation grid and summarize its traces.
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aacp/experiment.hpp"

using namespace aacp;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string format_greediness(double g) {
    std::ostringstream ss;
    ss << g;
    return ss.str();
}

int thread_count(int requested) {
    if (const char* env = std::getenv("AACP_THREADS")) {
        try {
            std::size_t used = 0;
            int n = std::stoi(env, &used);
            if (used == std::string(env).size() && n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(0, "AACP_THREADS must be a positive integer");
    }
    return requested;
}

struct RunOptions {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
    int replicates = 0;
    std::vector<std::string> scenarios;
    std::vector<std::string> policies;
    std::vector<double> greediness;
    bool quiet = false;
};

ExperimentConfig build_config(const RunOptions& o, bool seed_given) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig::defaults() : load_config(o.config);
    if (seed_given) cfg.seed = o.seed;
    if (o.replicates > 0) cfg.replicates = o.replicates;

    if (!o.scenarios.empty()) {
        std::vector<ScenarioEntry> picked;
        std::set<std::string> seen;
        for (const auto& name : o.scenarios) {
            if (!seen.insert(name).second) continue;
            auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                                   [&](const ScenarioEntry& e) { return e.name == name; });
            if (it != cfg.scenarios.end()) {
                picked.push_back(*it);
                continue;
            }
            try {
                picked.push_back(default_scenario_entry(parse_scenario_kind(name)));
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(0, ex.what());
            }
        }
        cfg.scenarios = std::move(picked);
    }

    if (!o.policies.empty()) {
        cfg.policies.clear();
        for (const auto& name : o.policies) {
            try {
                cfg.policies.push_back({parse_policy_kind(name), "", std::nullopt});
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(0, ex.what());
            }
        }
    }

    if (!o.greediness.empty()) {
        std::vector<PolicyEntry> expanded;
        for (const auto& p : cfg.policies) {
            if (p.kind != PolicyKind::Bac && p.kind != PolicyKind::Babr) {
                expanded.push_back(p);
                continue;
            }
            for (double g : o.greediness) {
                if (!(g > 0.0 && g <= 1.0)) throw ConfigError(0, "greediness must lie in (0,1]");
                PolicyEntry v = p;
                v.greediness = g;
                v.label = (p.label.empty() ? default_label(p.kind) : p.label) + "-" + format_greediness(g);
                expanded.push_back(v);
            }
        }
        cfg.policies = std::move(expanded);
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation laboratory for adaptive algorithm change protocols"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Simulate the scenario x policy x replicate grid");
    run_cmd->add_option("--config", run.config, "JSON experiment config (default: built-in grid)")->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    auto* seed_opt = run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_option("--replicates", run.replicates, "Replicates per scenario")->check(CLI::PositiveNumber);
    run_cmd->add_option("--scenario", run.scenarios, "Scenario names to run")->delimiter(',');
    run_cmd->add_option("--policy", run.policies, "Policies to run")->delimiter(',');
    run_cmd->add_option("--greediness", run.greediness, "Alpha-wealth greediness variants for BAC/BABR")
        ->delimiter(',');
    run_cmd->add_flag("--quiet", run.quiet, "No progress output");

    std::string report_out;
    auto* report_cmd = app.add_subcommand("report", "Summarize the traces in an output directory");
    report_cmd->add_option("--out", report_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*run_cmd) {
            auto cfg = build_config(run, seed_opt->count() > 0);
            int threads = thread_count(run.threads);
            run_experiment(cfg, run.out, threads, run.quiet ? nullptr : &std::cerr);
            std::cerr << "wrote " << (std::filesystem::path(run.out) / "summary.csv").string() << "\n";
        } else if (*report_cmd) {
            write_report(report_out);
            std::cerr << "wrote " << (std::filesystem::path(report_out) / "summary.csv").string() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
