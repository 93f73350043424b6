#include "aacp/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aacp {

namespace {

struct KindName {
    ScenarioKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ScenarioKind::Incremental, "incremental"},
    {ScenarioKind::Periodic, "periodic"},
    {ScenarioKind::Accumulating, "accumulating"},
    {ScenarioKind::Significant, "significant"},
    {ScenarioKind::TimeTrendNone, "no-trend"},
    {ScenarioKind::TimeTrendConstant, "graph-constant"},
    {ScenarioKind::TimeTrendChanging, "graph-changing"},
    {ScenarioKind::PureNull, "pure-null"},
};

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

bool is_time_trend(ScenarioKind k) {
    return k == ScenarioKind::TimeTrendNone || k == ScenarioKind::TimeTrendConstant ||
           k == ScenarioKind::TimeTrendChanging;
}

} // namespace

ScenarioKind parse_scenario_kind(std::string_view name) {
    for (const auto& kn : kKindNames) {
        if (kn.name == name) return kn.kind;
    }
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioKind kind) {
    for (const auto& kn : kKindNames) {
        if (kn.kind == kind) return kn.name;
    }
    return "unknown";
}

bool graph_changing(ScenarioKind kind) { return kind == ScenarioKind::TimeTrendChanging; }

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind) {
    ScenarioSpec s;
    s.kind = kind;
    switch (kind) {
    case ScenarioKind::Incremental:
        s.horizon = 200;
        s.wait = 5;
        s.batch_base = 200;
        s.batch_increment = 10;
        s.initial = EndpointVector{0.788, 0.787};
        break;
    case ScenarioKind::Periodic:
        s.horizon = 100;
        s.wait = 5;
        s.batch_base = 200;
        s.initial = EndpointVector{0.697, 0.697};
        break;
    case ScenarioKind::Accumulating:
        s.horizon = 40;
        s.wait = 10;
        s.batch_base = 200;
        break;
    case ScenarioKind::Significant:
        s.horizon = 20;
        s.wait = 3;
        s.batch_base = 650;
        s.initial = EndpointVector{0.682, 0.681};
        break;
    case ScenarioKind::TimeTrendNone:
    case ScenarioKind::TimeTrendConstant:
    case ScenarioKind::TimeTrendChanging:
        s.horizon = 100;
        s.wait = 5;
        s.batch_base = 300;
        if (kind == ScenarioKind::TimeTrendNone) s.amplitude = 0.0;
        break;
    case ScenarioKind::PureNull:
        s.horizon = 61;
        s.wait = 5;
        s.batch_base = 200;
        s.initial = EndpointVector{0.8, 0.8};
        break;
    }
    return s;
}

int ScenarioSpec::batch_size(TimeIndex t) const {
    if (t <= 0) return 0;
    return batch_base + batch_increment * (t - 1);
}

double periodic_value(const ScenarioSpec& spec, TimeIndex t) {
    const double start = spec.initial[0];
    if (t <= spec.periodic_rise) {
        return start + (spec.periodic_peak - start) * static_cast<double>(t) / spec.periodic_rise;
    }
    const int s = t - spec.periodic_rise;
    const int block = s / spec.periodic_block;
    const int pos = s % spec.periodic_block;
    const double step = (spec.periodic_peak - spec.periodic_trough) / spec.periodic_block;
    return block % 2 == 0 ? spec.periodic_peak - step * pos : spec.periodic_trough + step * pos;
}

std::vector<double> accumulating_true_coef(const AccumulatingParams& p) {
    std::vector<double> beta(static_cast<std::size_t>(p.num_covariates));
    for (int j = 0; j < std::min(p.num_active, p.num_covariates); ++j) {
        beta[static_cast<std::size_t>(j)] = p.coef_scale * std::pow(p.coef_decay, j) * (j % 2 == 0 ? 1.0 : -1.0);
    }
    return beta;
}

LogisticTruth logistic_classifier_truth(std::span<const double> beta, double b0, std::span<const double> beta_hat,
                                        double b_hat, std::span<const double> z_draws) {
    if (beta.size() != beta_hat.size()) throw std::invalid_argument("coefficient dimensions differ");
    if (z_draws.empty()) throw std::invalid_argument("no Monte Carlo draws");
    double var_u = 0.0, var_v = 0.0, cov = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        var_u += beta[j] * beta[j];
        var_v += beta_hat[j] * beta_hat[j];
        cov += beta[j] * beta_hat[j];
    }
    const double sd_u = std::sqrt(var_u);
    const double slope = var_u > 0 ? cov / var_u : 0.0;
    const double resid_var = std::max(0.0, var_v - (var_u > 0 ? cov * cov / var_u : 0.0));
    const double resid_sd = std::sqrt(resid_var);

    double pos = 0.0, neg = 0.0, true_pos = 0.0, true_neg = 0.0;
    for (double z : z_draws) {
        const double u = sd_u * z;
        const double p1 = sigmoid(b0 + u);
        const double mean_v = slope * u + b_hat;
        double p_pred;
        if (resid_sd < 1e-12) {
            p_pred = mean_v > 0 ? 1.0 : 0.0;
        } else {
            p_pred = 0.5 * std::erfc(-mean_v / (resid_sd * std::numbers::sqrt2));
        }
        pos += p1;
        neg += 1.0 - p1;
        true_pos += p1 * p_pred;
        true_neg += (1.0 - p1) * (1.0 - p_pred);
    }
    LogisticTruth out;
    out.sensitivity = true_pos / pos;
    out.specificity = true_neg / neg;
    out.prevalence = pos / static_cast<double>(z_draws.size());
    return out;
}

AccumulatingFits fit_accumulating_developer(const ScenarioSpec& spec, std::uint64_t seed) {
    const auto& p = spec.accumulating;
    if (p.num_covariates < 1 || p.num_active < 1 || p.train_start < p.cv_folds) {
        throw std::invalid_argument("accumulating scenario needs covariates and at least cv_folds training rows");
    }
    const auto beta = accumulating_true_coef(p);
    const int max_rows = p.train_start + p.train_increment * spec.horizon;

    Rng data_rng(derive_seed(seed, {hash_label("training-data")}));
    Matrix pool(static_cast<std::size_t>(max_rows), beta.size());
    std::vector<int> labels(static_cast<std::size_t>(max_rows));
    for (int i = 0; i < max_rows; ++i) {
        double eta = p.intercept;
        for (std::size_t j = 0; j < beta.size(); ++j) {
            double x = data_rng.normal();
            pool(static_cast<std::size_t>(i), j) = x;
            eta += beta[j] * x;
        }
        labels[static_cast<std::size_t>(i)] = data_rng.uniform() < sigmoid(eta) ? 1 : 0;
    }

    Rng mc_rng(derive_seed(seed, {hash_label("truth-draws")}));
    std::vector<double> draws(static_cast<std::size_t>(p.mc_samples));
    for (double& z : draws) z = mc_rng.normal();

    Rng cv_rng(derive_seed(seed, {hash_label("cross-validation")}));
    AccumulatingFits out;
    std::vector<double> zero(beta.size(), 0.0);
    out.prevalence = logistic_classifier_truth(beta, p.intercept, zero, 0.0, draws).prevalence;
    for (int t = 0; t <= spec.horizon; ++t) {
        const auto n = static_cast<std::size_t>(p.train_start + p.train_increment * t);
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        Matrix X = pool.select_rows(rows);
        std::vector<int> y(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
        auto grid = lambda_grid(X, y, p.lambda_count, p.lambda_min_ratio);
        double lam = cv_select_lambda(X, y, grid, p.cv_folds, cv_rng);
        LassoFit fit = train_lasso_logistic(X, y, lam);
        auto truth = logistic_classifier_truth(beta, p.intercept, fit.coef, fit.intercept, draws);
        out.truth.push_back(EndpointVector{truth.sensitivity, truth.specificity});
        out.fits.push_back(std::move(fit));
    }
    return out;
}

Scenario::Scenario(ScenarioSpec spec, std::uint64_t seed, std::shared_ptr<const AccumulatingFits> fits)
    : spec_(std::move(spec)), fits_(std::move(fits)), timeline_(spec_.horizon, 1, 0.5) {
    if (spec_.wait < 1 || spec_.delta_ratio < 1) throw std::invalid_argument("wait times must be positive");
    if (spec_.kind == ScenarioKind::Accumulating) {
        if (!fits_) fits_ = std::make_shared<AccumulatingFits>(fit_accumulating_developer(spec_, seed));
        if (fits_->truth.size() < static_cast<std::size_t>(spec_.horizon)) {
            throw std::invalid_argument("accumulating fits do not cover the horizon");
        }
        timeline_ = PopulationTimeline(spec_.horizon, 1, fits_->prevalence);
        add(Trajectory::constant(fits_->truth[0]));
    } else if (is_time_trend(spec_.kind)) {
        Wave w;
        w.sign = spec_.kind == ScenarioKind::TimeTrendChanging ? 1.0 : -1.0;
        waves_.push_back(w);
        add(wave_trajectory(w));
    } else {
        add(Trajectory::constant(spec_.initial));
    }
}

void Scenario::add(Trajectory traj) {
    SyntheticModel m;
    m.id = static_cast<ModelId>(timeline_.num_models());
    m.trajectory = std::move(traj);
    m.wait = spec_.wait;
    m.superiority_wait = spec_.superiority_wait();
    timeline_.add_model(std::move(m));
}

Trajectory Scenario::tabulate(const std::function<EndpointVector(TimeIndex)>& f) const {
    std::vector<EndpointVector> v;
    for (TimeIndex t = 0; t <= spec_.horizon + timeline_.smoothing_window(); ++t) v.push_back(f(t));
    return Trajectory::tabulated(std::move(v));
}

Trajectory Scenario::wave_trajectory(Wave w) const {
    return tabulate([&](TimeIndex t) {
        double x = spec_.trend_mean + w.sign * spec_.amplitude * std::cos(2.0 * std::numbers::pi * t / spec_.period) -
                   w.offset;
        x = clamp01(x);
        return EndpointVector{x, x};
    });
}

Trajectory Scenario::make_proposal(const ProposalContext& ctx) {
    const auto& tl = timeline_;
    switch (spec_.kind) {
    case ScenarioKind::Incremental: {
        // alternate which endpoint gives way, keyed by the approvals so far
        const auto base = tl.truth(ctx.approved, ctx.t);
        const bool sens_down = (ctx.approved_ids.size() - 1) % 2 == 0;
        const double ds = sens_down ? -spec_.deterioration : spec_.improvement;
        const double dc = sens_down ? spec_.improvement : -spec_.deterioration;
        return Trajectory::constant(EndpointVector{clamp01(base[0] + ds), clamp01(base[1] + dc)});
    }
    case ScenarioKind::PureNull: {
        double min_sens = 1.0, max_spec = 0.0;
        for (ModelId id : ctx.approved_ids) {
            const auto v = tl.truth(id, ctx.t);
            min_sens = std::min(min_sens, v[0]);
            max_spec = std::max(max_spec, v[1]);
        }
        return Trajectory::constant(
            EndpointVector{clamp01(min_sens - spec_.eps[0] - 0.005), clamp01(max_spec + spec_.eps[1])});
    }
    case ScenarioKind::Periodic: {
        const double v = periodic_value(spec_, ctx.t);
        return Trajectory::constant(EndpointVector{v, v});
    }
    case ScenarioKind::Significant: {
        // full gain while it fits under the cap, then half of the remaining gap
        const auto base = tl.truth(ctx.approved, ctx.t);
        auto next = [&](double v) {
            return v + spec_.step_gain <= spec_.cap ? v + spec_.step_gain : v + std::max(0.0, spec_.cap - v) / 2.0;
        };
        return Trajectory::constant(EndpointVector{next(base[0]), next(base[1])});
    }
    case ScenarioKind::Accumulating:
        return Trajectory::constant(fits_->truth.at(static_cast<std::size_t>(ctx.t)));
    case ScenarioKind::TimeTrendNone:
    case ScenarioKind::TimeTrendConstant:
    case ScenarioKind::TimeTrendChanging: {
        Wave w = waves_.at(static_cast<std::size_t>(ctx.approved));
        if (spec_.kind == ScenarioKind::TimeTrendChanging) w.sign = -w.sign; // half a period apart
        w.offset += spec_.gap;
        waves_.push_back(w);
        return wave_trajectory(w);
    }
    }
    throw std::logic_error("unhandled scenario kind");
}

const SyntheticModel& Scenario::propose(const ProposalContext& ctx) {
    if (ctx.t != static_cast<TimeIndex>(timeline_.num_models())) {
        throw std::logic_error("proposals must arrive once per time step in order");
    }
    if (!timeline_.has_model(ctx.approved)) throw std::logic_error("approved model does not exist");
    add(make_proposal(ctx));
    return timeline_.model(ctx.t);
}

} // namespace aacp
