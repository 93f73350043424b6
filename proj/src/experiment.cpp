#include "aacp/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "aacp/metrics.hpp"
#include "aacp/monitoring.hpp"
#include "aacp/rng.hpp"
#include "json.hpp"

namespace aacp {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

ScenarioEntry default_scenario_entry(ScenarioKind kind) {
    ScenarioEntry e;
    e.name = std::string(to_string(kind));
    e.spec = ScenarioSpec::defaults(kind);
    return e;
}

std::vector<PolicyEntry> default_policies() {
    std::vector<PolicyEntry> out;
    for (auto k : {PolicyKind::Blind, PolicyKind::Reset, PolicyKind::Baseline, PolicyKind::Fixed, PolicyKind::Bac,
                   PolicyKind::Babr}) {
        out.push_back({k, "", std::nullopt});
    }
    return out;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    for (auto k : {ScenarioKind::Incremental, ScenarioKind::Periodic, ScenarioKind::Accumulating,
                   ScenarioKind::Significant, ScenarioKind::TimeTrendNone, ScenarioKind::TimeTrendConstant,
                   ScenarioKind::TimeTrendChanging}) {
        c.scenarios.push_back(default_scenario_entry(k));
    }
    c.policies = default_policies();
    return c;
}

namespace {

using json = nlohmann::json;

int line_at(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Locates semantic errors by the first occurrence of a quoted key at or after `from`.
class Locator {
public:
    explicit Locator(const std::string& text) : text_(text) {}

    std::size_t find(const std::string& key, std::size_t from = 0) const {
        auto pos = text_.find('"' + key + '"', from);
        return pos == std::string::npos ? from : pos;
    }
    [[noreturn]] void fail(std::size_t pos, const std::string& msg) const { throw ConfigError(line_at(text_, pos), msg); }

private:
    const std::string& text_;
};

double number(const json& v, const Locator& loc, std::size_t pos, const std::string& key) {
    if (!v.is_number()) loc.fail(pos, "'" + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& v, const Locator& loc, std::size_t pos, const std::string& key, int min) {
    if (!v.is_number_integer()) loc.fail(pos, "'" + key + "' must be an integer");
    auto x = v.get<std::int64_t>();
    if (x < min || x > 1000000000) loc.fail(pos, "'" + key + "' must be at least " + std::to_string(min));
    return static_cast<int>(x);
}

std::vector<double> numbers(const json& v, const Locator& loc, std::size_t pos, const std::string& key,
                            std::size_t endpoints) {
    if (v.is_number()) return std::vector<double>(endpoints, v.get<double>());
    if (!v.is_array() || v.empty()) loc.fail(pos, "'" + key + "' must be a number or a nonempty array");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, loc, pos, key));
    return out;
}

void apply_accumulating(AccumulatingParams& a, const json& obj, const Locator& loc, std::size_t pos) {
    if (!obj.is_object()) loc.fail(pos, "'accumulating' must be an object");
    for (const auto& [key, v] : obj.items()) {
        const std::size_t at = loc.find(key, pos);
        if (key == "num_covariates") a.num_covariates = integer(v, loc, at, key, 1);
        else if (key == "num_active") a.num_active = integer(v, loc, at, key, 1);
        else if (key == "coef_scale") a.coef_scale = number(v, loc, at, key);
        else if (key == "coef_decay") a.coef_decay = number(v, loc, at, key);
        else if (key == "intercept") a.intercept = number(v, loc, at, key);
        else if (key == "train_start") a.train_start = integer(v, loc, at, key, 2);
        else if (key == "train_increment") a.train_increment = integer(v, loc, at, key, 0);
        else if (key == "cv_folds") a.cv_folds = integer(v, loc, at, key, 2);
        else if (key == "lambda_count") a.lambda_count = integer(v, loc, at, key, 1);
        else if (key == "lambda_min_ratio") a.lambda_min_ratio = number(v, loc, at, key);
        else if (key == "mc_samples") a.mc_samples = integer(v, loc, at, key, 1);
        else loc.fail(at, "unknown accumulating key '" + key + "'");
    }
    if (a.train_start < a.cv_folds) loc.fail(pos, "accumulating train_start must be at least cv_folds");
}

// Applies override keys to a scenario entry; "name" and "kind" are handled by the caller.
void apply_overrides(ScenarioEntry& e, const json& obj, const Locator& loc, std::size_t pos) {
    if (!obj.is_object()) loc.fail(pos, "overrides for '" + e.name + "' must be an object");
    auto& s = e.spec;
    for (const auto& [key, v] : obj.items()) {
        const std::size_t at = loc.find(key, pos);
        if (key == "name" || key == "kind") continue;
        if (key == "T") s.horizon = integer(v, loc, at, key, 2);
        else if (key == "delta") s.wait = integer(v, loc, at, key, 1);
        else if (key == "delta_ratio") s.delta_ratio = integer(v, loc, at, key, 1);
        else if (key == "batch_sizes") {
            if (v.is_object()) {
                for (const auto& [bk, bv] : v.items()) {
                    if (bk == "base") s.batch_base = integer(bv, loc, at, bk, 1);
                    else if (bk == "increment") s.batch_increment = integer(bv, loc, at, bk, 0);
                    else loc.fail(loc.find(bk, at), "unknown batch_sizes key '" + bk + "'");
                }
            } else {
                s.batch_base = integer(v, loc, at, key, 1);
                s.batch_increment = 0;
            }
        } else if (key == "eps") {
            auto eps = numbers(v, loc, at, key, s.eps.size());
            for (double x : eps) {
                if (!(x >= 0.0)) loc.fail(at, "'eps' must be nonnegative");
            }
            if (eps.size() != s.initial.size()) loc.fail(at, "'eps' needs one margin per endpoint");
            s.eps = NIMargin(eps);
        } else if (key == "initial") {
            auto init = numbers(v, loc, at, key, s.initial.size());
            if (init.size() != s.initial.size()) loc.fail(at, "'initial' needs one value per endpoint");
            for (double x : init) {
                if (!(x >= 0.0 && x <= 1.0)) loc.fail(at, "'initial' values must lie in [0,1]");
            }
            s.initial = EndpointVector(init);
        } else if (key == "coupling") {
            s.coupling = number(v, loc, at, key);
            if (!(s.coupling >= 0.0 && s.coupling <= 1.0)) loc.fail(at, "'coupling' must lie in [0,1]");
        } else if (key == "alpha" || key == "alpha_prime") {
            double x = number(v, loc, at, key);
            if (!(x > 0.0 && x < 1.0)) loc.fail(at, "'" + key + "' must lie in (0,1)");
            (key == "alpha" ? e.policy.alpha : e.policy.alpha_prime) = x;
        } else if (key == "window") e.policy.window = integer(v, loc, at, key, 1);
        else if (key == "greediness") {
            double x = number(v, loc, at, key);
            if (!(x > 0.0 && x <= 1.0)) loc.fail(at, "'greediness' must lie in (0,1]");
            e.policy.greediness = x;
        } else if (key == "boundary_mode") {
            if (!v.is_string()) loc.fail(at, "'boundary_mode' must be a string");
            try {
                e.policy.boundary_mode = parse_boundary_mode(v.get<std::string>());
            } catch (const std::invalid_argument& ex) {
                loc.fail(at, ex.what());
            }
        } else if (key == "accumulating") apply_accumulating(s.accumulating, v, loc, at);
        else loc.fail(at, "unknown override '" + key + "'");
    }
}

ScenarioKind scenario_kind(const std::string& name, const Locator& loc, std::size_t pos) {
    try {
        return parse_scenario_kind(name);
    } catch (const std::invalid_argument& ex) {
        loc.fail(pos, ex.what());
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ConfigError(line_at(text, ex.byte == 0 ? 0 : ex.byte - 1), "invalid JSON: " + std::string(ex.what()));
    }
    Locator loc(text);
    if (!doc.is_object()) loc.fail(0, "top level must be an object");

    ExperimentConfig cfg = ExperimentConfig::defaults();
    for (const auto& [key, v] : doc.items()) {
        const std::size_t at = loc.find(key);
        if (key == "seed") {
            if (!v.is_number_unsigned()) loc.fail(at, "'seed' must be a nonnegative integer");
            cfg.seed = v.get<std::uint64_t>();
        } else if (key == "replicates") {
            cfg.replicates = integer(v, loc, at, key, 1);
        } else if (key != "scenarios" && key != "policies" && key != "overrides") {
            loc.fail(at, "unknown key '" + key + "'");
        }
    }

    if (doc.contains("scenarios")) {
        const std::size_t at = loc.find("scenarios");
        const auto& list = doc["scenarios"];
        if (!list.is_array() || list.empty()) loc.fail(at, "'scenarios' must be a nonempty array");
        cfg.scenarios.clear();
        std::set<std::string> names;
        for (const auto& item : list) {
            ScenarioEntry e;
            std::size_t pos = at;
            if (item.is_string()) {
                e.name = item.get<std::string>();
                pos = loc.find(e.name, at);
                e = default_scenario_entry(scenario_kind(e.name, loc, pos));
            } else if (item.is_object()) {
                if (!item.contains("name") || !item["name"].is_string()) loc.fail(at, "scenario objects need a 'name'");
                std::string name = item["name"].get<std::string>();
                pos = loc.find(name, at);
                std::string kind = name;
                if (item.contains("kind")) {
                    if (!item["kind"].is_string()) loc.fail(pos, "'kind' must be a string");
                    kind = item["kind"].get<std::string>();
                }
                e = default_scenario_entry(scenario_kind(kind, loc, pos));
                e.name = name;
                apply_overrides(e, item, loc, pos);
            } else {
                loc.fail(at, "scenario entries must be strings or objects");
            }
            if (e.name.empty()) loc.fail(pos, "scenario names must be nonempty");
            if (!names.insert(e.name).second) loc.fail(pos, "duplicate scenario '" + e.name + "'");
            cfg.scenarios.push_back(std::move(e));
        }
    }

    if (doc.contains("policies")) {
        const std::size_t at = loc.find("policies");
        const auto& list = doc["policies"];
        if (!list.is_array() || list.empty()) loc.fail(at, "'policies' must be a nonempty array");
        cfg.policies.clear();
        std::set<std::string> labels;
        for (const auto& item : list) {
            PolicyEntry p;
            std::string kind;
            if (item.is_string()) {
                kind = item.get<std::string>();
            } else if (item.is_object()) {
                if (!item.contains("kind") || !item["kind"].is_string()) loc.fail(at, "policy objects need a 'kind'");
                kind = item["kind"].get<std::string>();
                for (const auto& [key, v] : item.items()) {
                    const std::size_t kat = loc.find(key, at);
                    if (key == "kind") continue;
                    if (key == "label") {
                        if (!v.is_string()) loc.fail(kat, "'label' must be a string");
                        p.label = v.get<std::string>();
                    } else if (key == "greediness") {
                        double x = number(v, loc, kat, key);
                        if (!(x > 0.0 && x <= 1.0)) loc.fail(kat, "'greediness' must lie in (0,1]");
                        p.greediness = x;
                    } else {
                        loc.fail(kat, "unknown policy key '" + key + "'");
                    }
                }
            } else {
                loc.fail(at, "policy entries must be strings or objects");
            }
            const std::size_t pos = loc.find(kind, at);
            try {
                p.kind = parse_policy_kind(kind);
            } catch (const std::invalid_argument& ex) {
                loc.fail(pos, ex.what());
            }
            std::string label = p.label.empty() ? default_label(p.kind) : p.label;
            if (!labels.insert(label).second) loc.fail(pos, "duplicate policy label '" + label + "'");
            cfg.policies.push_back(std::move(p));
        }
    }

    if (doc.contains("overrides")) {
        const std::size_t at = loc.find("overrides");
        const auto& obj = doc["overrides"];
        if (!obj.is_object()) loc.fail(at, "'overrides' must be an object");
        for (const auto& [name, v] : obj.items()) {
            const std::size_t pos = loc.find(name, at);
            auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                                   [&](const ScenarioEntry& e) { return e.name == name; });
            if (it == cfg.scenarios.end()) loc.fail(pos, "overrides name unknown scenario '" + name + "'");
            apply_overrides(*it, v, loc, pos);
        }
    }

    for (const auto& e : cfg.scenarios) {
        const std::size_t pos = loc.find(e.name);
        if (e.spec.eps.size() != e.spec.initial.size()) loc.fail(pos, "'" + e.name + "': eps and initial differ in size");
        if (e.spec.kind == ScenarioKind::Accumulating && e.spec.eps.size() != 2) {
            loc.fail(pos, "'" + e.name + "': the accumulating scenario has two endpoints");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

PolicyConfig make_policy_config(const ScenarioEntry& scenario, const PolicyEntry& policy) {
    PolicyConfig p;
    p.kind = policy.kind;
    p.label = policy.label;
    p.alpha = scenario.policy.alpha;
    p.alpha_prime = scenario.policy.alpha_prime;
    p.window = scenario.policy.window;
    p.greediness = policy.greediness.value_or(scenario.policy.greediness);
    p.boundary_mode = scenario.policy.boundary_mode;
    p.eps = scenario.spec.eps;
    p.validate();
    return p;
}

std::uint64_t replicate_seed(std::uint64_t master, const std::string& scenario, int replicate) {
    return derive_seed(master, {hash_label(scenario), static_cast<std::uint64_t>(replicate)});
}

std::shared_ptr<const AccumulatingFits> replicate_fits(const ScenarioSpec& spec, std::uint64_t seed) {
    if (spec.kind != ScenarioKind::Accumulating) return nullptr;
    return std::make_shared<AccumulatingFits>(fit_accumulating_developer(spec, seed));
}

RunTrace simulate_run(const ScenarioEntry& scenario, const PolicyConfig& policy, std::uint64_t master_seed,
                      int replicate, std::shared_ptr<const AccumulatingFits> fits) {
    const std::uint64_t seed = replicate_seed(master_seed, scenario.name, replicate);
    if (!fits) fits = replicate_fits(scenario.spec, seed);
    Scenario sc(scenario.spec, seed, fits);
    ApprovalPolicy pol(policy);
    MonitoringArchive archive;
    archive.add(MonitoringBatch{});
    Rng monitor(derive_seed(seed, {hash_label("monitoring")}));

    RunTrace trace;
    trace.scenario = scenario.name;
    trace.policy = policy.display_label();
    trace.replicate = replicate;
    trace.seed = seed;
    trace.horizon = scenario.spec.horizon;
    trace.window = policy.window;
    trace.eps = policy.eps;
    trace.graph_changing = graph_changing(scenario.spec.kind);

    const auto& timeline = sc.timeline();
    for (TimeIndex t = 1; t < scenario.spec.horizon; ++t) {
        pol.begin_step(t, archive, timeline, trace.events);
        TraceStep step;
        step.t = t;
        step.approved = pol.approved();
        step.benchmark = pol.benchmark();
        for (ModelId id : pol.approved_ids()) step.truths.push_back({id, timeline.truth(id, t)});

        ProposalContext ctx;
        ctx.t = t;
        ctx.approved = pol.approved();
        ctx.approved_ids = pol.approved_ids();
        const SyntheticModel& model = sc.propose(ctx);
        pol.on_proposal(t, model, trace.events);
        step.truths.push_back({t, timeline.truth(t, t)});
        trace.steps.push_back(std::move(step));

        archive.add(sample_monitoring_batch(t, scenario.spec.batch_size(t), timeline.prevalence(), monitor,
                                                    scenario.spec.coupling));
    }
    return trace;
}

namespace {

namespace fs = std::filesystem;

constexpr const char* kManifest = "manifest.json";

std::string path_component(const std::string& label) {
    std::string out;
    for (unsigned char c : label) out += std::isalnum(c) || c == '-' || c == '_' || c == '.' ? static_cast<char>(c) : '_';
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct Manifest {
    int replicates = 0;
    std::vector<std::string> scenarios;
    std::vector<std::string> policies;
};

void write_manifest(const fs::path& out, const ExperimentConfig& config, const std::vector<std::string>& labels) {
    json j;
    j["schema"] = "aacp-manifest";
    j["version"] = 1;
    j["seed"] = config.seed;
    j["replicates"] = config.replicates;
    j["scenarios"] = json::array();
    for (const auto& s : config.scenarios) j["scenarios"].push_back(s.name);
    j["policies"] = labels;
    write_text_file(out / kManifest, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& out) {
    std::ifstream in(out / kManifest, std::ios::binary);
    if (!in) throw std::runtime_error("no traces found under " + out.string() + " (missing " + kManifest + ")");
    Manifest m;
    try {
        json j = json::parse(in);
        if (j.value("schema", "") != "aacp-manifest") throw std::runtime_error("not a run manifest");
        m.replicates = j.at("replicates").get<int>();
        m.scenarios = j.at("scenarios").get<std::vector<std::string>>();
        m.policies = j.at("policies").get<std::vector<std::string>>();
    } catch (const json::exception& ex) {
        throw std::runtime_error("bad manifest: " + std::string(ex.what()));
    }
    return m;
}

} // namespace

fs::path trace_path(const fs::path& out, const std::string& scenario, const std::string& policy, int replicate) {
    char name[32];
    std::snprintf(name, sizeof name, "rep_%04d.jsonl", replicate);
    return out / "traces" / path_component(scenario) / path_component(policy) / name;
}

void run_experiment(const ExperimentConfig& config, const fs::path& out, int threads, std::ostream* log) {
    if (config.scenarios.empty() || config.policies.empty()) throw std::invalid_argument("empty run grid");
    if (config.replicates < 1) throw std::invalid_argument("replicates must be positive");

    struct Cell {
        std::vector<PolicyConfig> policies;
    };
    std::vector<Cell> cells;
    std::vector<std::string> labels;
    for (const auto& p : config.policies) labels.push_back(make_policy_config(config.scenarios.front(), p).display_label());
    std::set<std::string> dirs;
    for (const auto& l : labels) {
        if (!dirs.insert(path_component(l)).second) throw std::invalid_argument("policy labels collide: " + l);
    }
    dirs.clear();
    for (const auto& sc : config.scenarios) {
        if (!dirs.insert(path_component(sc.name)).second) throw std::invalid_argument("scenario names collide: " + sc.name);
        Cell c;
        for (const auto& p : config.policies) c.policies.push_back(make_policy_config(sc, p));
        cells.push_back(std::move(c));
        for (const auto& l : labels) fs::create_directories(trace_path(out, sc.name, l, 0).parent_path());
    }
    write_manifest(out, config, labels);

    const std::size_t jobs = config.scenarios.size() * static_cast<std::size_t>(config.replicates);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    std::size_t done = 0;

    auto worker = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs || failed) return;
            const std::size_t si = job / static_cast<std::size_t>(config.replicates);
            const int rep = static_cast<int>(job % static_cast<std::size_t>(config.replicates));
            const auto& sc = config.scenarios[si];
            try {
                auto fits = replicate_fits(sc.spec, replicate_seed(config.seed, sc.name, rep));
                for (std::size_t pi = 0; pi < labels.size(); ++pi) {
                    auto trace = simulate_run(sc, cells[si].policies[pi], config.seed, rep, fits);
                    std::ostringstream text;
                    write_trace(text, trace);
                    write_text_file(trace_path(out, sc.name, labels[pi], rep), text.str());
                }
                std::lock_guard lock(mu);
                ++done;
                if (log) *log << "[" << done << "/" << jobs << "] " << sc.name << " replicate " << rep << "\n";
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    write_report(out);
}

void write_report(const fs::path& out) {
    Manifest m = read_manifest(out);
    std::vector<ErrorSummary> rows;
    fs::create_directories(out / "figures");
    for (const auto& sc : m.scenarios) {
        std::vector<FigureSeries> series;
        for (const auto& pol : m.policies) {
            std::vector<RunTrace> traces;
            for (int r = 0; r < m.replicates; ++r) {
                auto path = trace_path(out, sc, pol, r);
                std::ifstream in(path, std::ios::binary);
                if (!in) throw std::runtime_error("missing trace " + path.string());
                try {
                    traces.push_back(read_trace(in));
                } catch (const std::exception& ex) {
                    throw std::runtime_error(path.string() + ": " + ex.what());
                }
            }
            rows.push_back(aggregate(traces));
            series.push_back(figure_series(traces));
        }
        std::ostringstream fig;
        write_figure_csv(fig, series);
        write_text_file(out / "figures" / (path_component(sc) + ".csv"), fig.str());
    }
    if (rows.empty()) throw std::runtime_error("no traces found under " + out.string());
    std::ostringstream summary;
    write_summary_csv(summary, rows);
    write_text_file(out / "summary.csv", summary.str());
}

} // namespace aacp
