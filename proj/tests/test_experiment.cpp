#include <filesystem>
#include <fstream>
#include <sstream>

#include "aacp/experiment.hpp"
#include "aacp/metrics.hpp"
#include "doctest.h"

using namespace aacp;
namespace fs = std::filesystem;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("default grid") {
    auto c = ExperimentConfig::defaults();
    CHECK(c.replicates == 50);
    CHECK(c.scenarios.size() == 7);
    REQUIRE(c.policies.size() == 6);
    CHECK(c.policies[0].kind == PolicyKind::Blind);
    CHECK(c.policies[5].kind == PolicyKind::Babr);
    auto empty = parse_config("{}");
    CHECK(empty.scenarios.size() == 7);
    CHECK(empty.seed == c.seed);
}

TEST_CASE("config with scenarios, policies and overrides") {
    auto c = parse_config(R"({
  "seed": 9,
  "replicates": 3,
  "scenarios": ["periodic", {"name": "small", "kind": "incremental", "T": 30, "batch_sizes": 50}],
  "policies": ["reset", {"kind": "babr", "label": "BABR-fast", "greediness": 0.75}],
  "overrides": {
    "periodic": {"T": 40, "delta": 4, "delta_ratio": 3, "eps": [0.02, 0.03], "alpha": 0.1,
                 "window": 10, "boundary_mode": "bonferroni", "batch_sizes": {"base": 100, "increment": 2}}
  }
})");
    CHECK(c.seed == 9);
    CHECK(c.replicates == 3);
    REQUIRE(c.scenarios.size() == 2);
    const auto& p = c.scenarios[0];
    CHECK(p.spec.horizon == 40);
    CHECK(p.spec.wait == 4);
    CHECK(p.spec.superiority_wait() == 12);
    CHECK(p.spec.eps[1] == doctest::Approx(0.03));
    CHECK(p.spec.batch_size(3) == 104);
    CHECK(p.policy.alpha == doctest::Approx(0.1));
    CHECK(p.policy.window == 10);
    CHECK(p.policy.boundary_mode == BoundaryMode::Bonferroni);
    const auto& s = c.scenarios[1];
    CHECK(s.name == "small");
    CHECK(s.spec.kind == ScenarioKind::Incremental);
    CHECK(s.spec.horizon == 30);
    CHECK(s.spec.batch_size(5) == 50);
    REQUIRE(c.policies.size() == 2);
    auto pc = make_policy_config(p, c.policies[1]);
    CHECK(pc.display_label() == "BABR-fast");
    CHECK(pc.greediness == doctest::Approx(0.75));
    CHECK(pc.window == 10);
}

TEST_CASE("config errors carry the offending line") {
    CHECK(error_line("{\n  \"seed\": 1,\n  \"replicates\": ,\n}") == 3);
    CHECK(error_line("{\n  \"seed\": 1,\n  \"colour\": 2\n}") == 3);
    CHECK(error_line("{\n  \"scenarios\": [\n    \"incremental\",\n    \"sideways\"\n  ]\n}") == 4);
    CHECK(error_line("{\n  \"overrides\": {\n    \"periodic\": {\n      \"T\": 1\n    }\n  }\n}") == 4);
    CHECK(error_line("{\n  \"policies\": [\"bac\",\n    \"bac\"]\n}") > 0);
    CHECK(error_line("{\"overrides\": {\"nowhere\": {}}}") == 1);
    CHECK(error_line("[1, 2]") == 1);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("replicate seeds are shared across policies and differ across replicates") {
    CHECK(replicate_seed(1, "incremental", 0) == replicate_seed(1, "incremental", 0));
    CHECK(replicate_seed(1, "incremental", 0) != replicate_seed(1, "incremental", 1));
    CHECK(replicate_seed(1, "incremental", 0) != replicate_seed(1, "periodic", 0));
    CHECK(replicate_seed(1, "incremental", 0) != replicate_seed(2, "incremental", 0));
}

TEST_CASE("simulate_run is reproducible and covers t = 1..T-1") {
    auto e = default_scenario_entry(ScenarioKind::Significant);
    auto pc = make_policy_config(e, {PolicyKind::Babr, "", std::nullopt});
    auto a = simulate_run(e, pc, 3, 2);
    auto b = simulate_run(e, pc, 3, 2);
    CHECK(a == b);
    CHECK(a.steps.size() == static_cast<std::size_t>(e.spec.horizon - 1));
    CHECK(a.steps.front().t == 1);
    CHECK(a.policy == "BABR");
    auto c = simulate_run(e, pc, 3, 3);
    CHECK_FALSE(a == c);
}

TEST_CASE("run_experiment writes traces, a summary and figures") {
    fs::path out = fs::temp_directory_path() / "aacp_test_experiment";
    fs::remove_all(out);
    ExperimentConfig cfg;
    cfg.seed = 4;
    cfg.replicates = 2;
    auto sig = default_scenario_entry(ScenarioKind::Significant);
    auto gc = default_scenario_entry(ScenarioKind::TimeTrendChanging);
    gc.spec.horizon = 12;
    cfg.scenarios = {sig, gc};
    cfg.policies = {{PolicyKind::Fixed, "", std::nullopt}, {PolicyKind::Bac, "BAC, v2", std::nullopt}};
    run_experiment(cfg, out, 2);

    CHECK(fs::exists(trace_path(out, "significant", "Fixed", 1)));
    CHECK(fs::exists(trace_path(out, "graph-changing", "BAC, v2", 0)));
    auto summary = slurp(out / "summary.csv");
    CHECK(summary.find("significant,Fixed,0.000000,1.000000,") != std::string::npos);
    CHECK(summary.find("graph-changing,\"BAC, v2\",---,") != std::string::npos);
    auto fig = slurp(out / "figures" / "significant.csv");
    CHECK(fig.starts_with("policy,t,sensitivity_mean,sensitivity_sd,specificity_mean,specificity_sd\r\n"));

    // the report is a pure function of the traces
    fs::remove(out / "summary.csv");
    write_report(out);
    CHECK(slurp(out / "summary.csv") == summary);

    // a single-threaded rerun is byte-identical
    fs::path again = out.string() + "_1";
    fs::remove_all(again);
    run_experiment(cfg, again, 1);
    CHECK(slurp(again / "summary.csv") == summary);
    CHECK(slurp(trace_path(again, "significant", "BAC, v2", 1)) == slurp(trace_path(out, "significant", "BAC, v2", 1)));

    CHECK_THROWS_AS(write_report(out / "nothing"), std::runtime_error);
    fs::remove_all(out);
    fs::remove_all(again);
}
