// experiment.hpp: config parsing, single-run simulation, the run grid and the reporter.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aacp/gst.hpp"
#include "aacp/policies.hpp"
#include "aacp/scenarios.hpp"
#include "aacp/trace.hpp"

namespace aacp {

/// Invalid configuration. `line` is 1-based, or 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

/// Policy settings that a scenario entry may override.
struct PolicyOverrides {
    double alpha = 0.2;
    double alpha_prime = 0.2;
    int window = 15;
    double greediness = 0.5;
    BoundaryMode boundary_mode = BoundaryMode::GaussianRecursion;
};

struct ScenarioEntry {
    std::string name;
    ScenarioSpec spec;
    PolicyOverrides policy;
};

struct PolicyEntry {
    PolicyKind kind = PolicyKind::Bac;
    std::string label;                 // empty: default label
    std::optional<double> greediness;  // overrides the scenario setting
};

struct ExperimentConfig {
    std::uint64_t seed = 2021;
    int replicates = 50;
    std::vector<ScenarioEntry> scenarios;
    std::vector<PolicyEntry> policies;

    /// Default grid: every scenario with all six policies.
    static ExperimentConfig defaults();
};

ScenarioEntry default_scenario_entry(ScenarioKind kind);
std::vector<PolicyEntry> default_policies();

/// Parses JSON text; throws ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

PolicyConfig make_policy_config(const ScenarioEntry& scenario, const PolicyEntry& policy);

/// Seed of one replicate. Policies share it, so they see the same monitoring
/// patients and the same developer randomness.
std::uint64_t replicate_seed(std::uint64_t master, const std::string& scenario, int replicate);

/// Accumulating fits for a replicate, or null for scenarios that need none.
std::shared_ptr<const AccumulatingFits> replicate_fits(const ScenarioSpec& spec, std::uint64_t seed);

/// One (scenario, policy, replicate) run over steps t = 1..T-1.
RunTrace simulate_run(const ScenarioEntry& scenario, const PolicyConfig& policy, std::uint64_t master_seed,
                      int replicate, std::shared_ptr<const AccumulatingFits> fits = nullptr);

/// Runs the full grid, writing traces/<scenario>/<policy>/rep_NNNN.jsonl under `out`,
/// then writes the report. Output bytes do not depend on `threads`.
void run_experiment(const ExperimentConfig& config, const std::filesystem::path& out, int threads,
                    std::ostream* log = nullptr);

std::filesystem::path trace_path(const std::filesystem::path& out, const std::string& scenario,
                                 const std::string& policy, int replicate);

/// Reads every trace under `out` and writes summary.csv and figures/<scenario>.csv.
/// Throws std::runtime_error when no traces exist.
void write_report(const std::filesystem::path& out);

} // namespace aacp
