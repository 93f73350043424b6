// scenarios.hpp: model developers, population timelines and batch schedules
// for the simulation studies.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aacp/core.hpp"
#include "aacp/lasso.hpp"
#include "aacp/rng.hpp"

namespace aacp {

enum class ScenarioKind {
    Incremental,
    Periodic,
    Accumulating,
    Significant,
    TimeTrendNone,
    TimeTrendConstant,
    TimeTrendChanging,
    PureNull,
};

ScenarioKind parse_scenario_kind(std::string_view name);
std::string_view to_string(ScenarioKind kind);
/// Scenarios whose acceptability graph changes over time report no error rates.
bool graph_changing(ScenarioKind kind);

struct AccumulatingParams {
    int num_covariates = 30;
    int num_active = 5;        // beta_j = 0 for j >= num_active
    double coef_scale = 50.0;  // c in beta_j = c * decay^j * (-1)^j
    double coef_decay = 1.0;
    double intercept = -3.0;   // b0 of the true logistic model
    int train_start = 20;
    int train_increment = 5;
    int cv_folds = 5;
    int lambda_count = 15;
    double lambda_min_ratio = 0.01;
    int mc_samples = 200000;
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Incremental;
    int horizon = 200;        // T
    int wait = 5;             // Δ
    int delta_ratio = 2;      // Δ′ / Δ
    int batch_base = 200;     // batch size at t = 1
    int batch_increment = 0;  // added per step
    NIMargin eps{0.05, 0.05};
    double coupling = 0.0;    // monitoring: probability a model reads the shared latent uniform
    EndpointVector initial{0.788, 0.787};

    // incremental / pure-null
    double deterioration = 0.025;
    double improvement = 0.0125;
    // periodic
    double periodic_peak = 0.803;
    double periodic_trough = 0.71;
    int periodic_rise = 15;
    int periodic_block = 10;
    // significant
    double step_gain = 0.04;
    double cap = 0.803;
    // time trends
    double trend_mean = 0.712;
    double amplitude = 0.06;
    double period = 50.0;
    double gap = 0.02;

    AccumulatingParams accumulating;

    /// Defaults for one scenario (horizon, wait, batch sizes, anchors).
    static ScenarioSpec defaults(ScenarioKind kind);

    int superiority_wait() const { return wait * delta_ratio; }
    /// Monitoring observations collected at time t >= 1 (zero at t = 0).
    int batch_size(TimeIndex t) const;
};

/// What the developer sees when proposing the model for time t.
struct ProposalContext {
    TimeIndex t = 0;
    ModelId approved = 0;                   // Â just before the proposal
    std::vector<ModelId> approved_ids{0};   // every distinct approved id, ascending
};

/// Non-adaptive lasso fits for the accumulating-data developer: truth of the
/// model trained on train_start + train_increment * t observations, t = 0..T.
struct AccumulatingFits {
    double prevalence = 0.5;
    std::vector<EndpointVector> truth; // indexed by model id
    std::vector<LassoFit> fits;
};

AccumulatingFits fit_accumulating_developer(const ScenarioSpec& spec, std::uint64_t seed);

/// Sensitivity and specificity of the classifier 1{x·beta_hat + b_hat > 0} when
/// P(y = 1 | x) = sigmoid(b0 + x·beta), x ~ N(0, I). Conditioning on x·beta is
/// analytic; x·beta itself is averaged over the given standard-normal draws.
struct LogisticTruth {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double prevalence = 0.0;
};
LogisticTruth logistic_classifier_truth(std::span<const double> beta, double b0, std::span<const double> beta_hat,
                                        double b_hat, std::span<const double> z_draws);

/// True coefficient vector of the accumulating scenario.
std::vector<double> accumulating_true_coef(const AccumulatingParams& p);

/// Per-time truth of the periodic developer's proposals.
double periodic_value(const ScenarioSpec& spec, TimeIndex t);

/// One replicate of a scenario: the timeline with the initial model (id 0)
/// and a developer that proposes the model for each later time step.
class Scenario {
public:
    Scenario(ScenarioSpec spec, std::uint64_t seed,
             std::shared_ptr<const AccumulatingFits> fits = nullptr);

    const ScenarioSpec& spec() const { return spec_; }
    PopulationTimeline& timeline() { return timeline_; }
    const PopulationTimeline& timeline() const { return timeline_; }

    /// Builds the trajectory of the model proposed at ctx.t and adds it to the timeline.
    const SyntheticModel& propose(const ProposalContext& ctx);

private:
    struct Wave {
        double sign = 1.0;
        double offset = 0.0;
    };

    Trajectory make_proposal(const ProposalContext& ctx);
    Trajectory tabulate(const std::function<EndpointVector(TimeIndex)>& f) const;
    Trajectory wave_trajectory(Wave w) const;
    void add(Trajectory traj);

    ScenarioSpec spec_;
    std::shared_ptr<const AccumulatingFits> fits_;
    PopulationTimeline timeline_;
    std::vector<Wave> waves_; // time-trend scenarios: phase and gap of each model
};

} // namespace aacp
