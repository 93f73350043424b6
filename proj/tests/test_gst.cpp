#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aacp/gst.hpp"
#include "aacp/rng.hpp"

using namespace aacp;

namespace {

// Chi-square upper tail with even degrees of freedom 2m: exp(-x/2) * sum_{i<m} (x/2)^i / i!
double chisq_even_tail(double x, int m) {
    double term = 1.0, sum = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i > 0) term *= (x / 2.0) / i;
        sum += term;
    }
    return std::exp(-x / 2.0) * sum;
}

// Monte Carlo first-crossing probability of a standardized partial-sum process.
double simulated_crossing(const std::vector<double>& z, int paths, std::uint64_t seed) {
    Rng rng(seed);
    int hits = 0;
    for (int p = 0; p < paths; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            s += rng.normal();
            if (s / std::sqrt(double(k + 1)) > z[k]) {
                ++hits;
                break;
            }
        }
    }
    return double(hits) / paths;
}

PairedSampleStats single(double mean, double se, long n = 1000) {
    // builds sums that reproduce the requested mean and standard error
    PairedSampleStats s(1);
    auto& e = s.endpoints[0];
    e.n = n;
    e.sum = mean * n;
    double var = se * se * n;
    e.sum_sq = var * (n - 1) + mean * mean * n;
    return s;
}

PairedSampleStats two(double m0, double se0, double m1, double se1) {
    PairedSampleStats s(2);
    s.endpoints[0] = single(m0, se0).endpoints[0];
    s.endpoints[1] = single(m1, se1).endpoints[0];
    return s;
}

} // namespace

TEST_CASE("pocock spending closed form") {
    CHECK(pocock_cumulative_alpha(0.05, 0.0) == 0.0);
    CHECK(pocock_cumulative_alpha(0.05, 1.0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(pocock_cumulative_alpha(0.05, 0.5) == doctest::Approx(0.0310).epsilon(0.004));
    CHECK(std::abs(pocock_cumulative_alpha(0.05, 0.5) - 0.05 * std::log(1.0 + (std::exp(1.0) - 1.0) / 2.0)) <
          1e-12);
    CHECK_THROWS_AS(pocock_cumulative_alpha(0.05, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(pocock_cumulative_alpha(0.05, -0.1), std::invalid_argument);

    auto s = SpendingSchedule::pocock(0.2, 7);
    CHECK(s.cumulative_alpha.back() == 0.2);
    for (std::size_t k = 1; k < s.cumulative_alpha.size(); ++k) CHECK(s.cumulative_alpha[k] >= s.cumulative_alpha[k - 1]);
}

TEST_CASE("boundary examples") {
    for (auto mode : {BoundaryMode::Bonferroni, BoundaryMode::GaussianRecursion}) {
        auto z = boundaries_from_schedule(SpendingSchedule::pocock(0.05, 1), mode);
        REQUIRE(z.size() == 1);
        CHECK(z[0] == doctest::Approx(1.6449).epsilon(1e-3 / 1.6449));
    }
    SpendingSchedule s{0.05, {0.025, 0.05}};
    auto z = boundaries_from_schedule(s, BoundaryMode::Bonferroni);
    CHECK(z[0] == doctest::Approx(1.9600).epsilon(1e-3 / 1.96));
    CHECK(z[1] == doctest::Approx(1.9600).epsilon(1e-3 / 1.96));

    SpendingSchedule bad{0.05, {0.03, 0.02}};
    CHECK_THROWS_AS(boundaries_from_schedule(bad, BoundaryMode::Bonferroni), std::invalid_argument);
}

TEST_CASE("bonferroni increments sum to total alpha") {
    for (int K : {1, 3, 5, 10, 20}) {
        for (double a : {0.01, 0.05, 0.2}) {
            auto z = boundaries_from_schedule(SpendingSchedule::pocock(a, K), BoundaryMode::Bonferroni);
            double total = 0.0;
            for (double x : z) total += normal_upper_tail(x);
            CHECK(std::abs(total - a) < 1e-10);
        }
    }
}

TEST_CASE("recursion boundaries are finite, below bonferroni, and exact by simulation") {
    for (int K : {2, 5, 10}) {
        auto sched = SpendingSchedule::pocock(0.05, K);
        auto zr = boundaries_from_schedule(sched, BoundaryMode::GaussianRecursion);
        auto zb = boundaries_from_schedule(sched, BoundaryMode::Bonferroni);
        for (int k = 0; k < K; ++k) {
            CHECK(std::isfinite(zr[k]));
            CHECK(zr[k] <= zb[k] + 1e-9);
        }
        CHECK(crossing_probability(zr) == doctest::Approx(0.05).epsilon(1e-3));
        const int paths = 200000;
        double mc = simulated_crossing(zr, paths, 100 + K);
        double se = std::sqrt(0.05 * 0.95 / paths);
        CHECK(std::abs(mc - 0.05) < 3.5 * se);
    }
}

TEST_CASE("paired statistics") {
    std::vector<PairedOutcome> same{{0, true, true}, {0, false, false}, {1, true, true}};
    auto s0 = paired_endpoint_stats(same);
    CHECK(s0.endpoints[0].mean() == 0.0);
    CHECK(s0.endpoints[0].se() == 0.0);
    CHECK(s0.endpoints[1].mean() == 0.0);

    std::vector<PairedOutcome> diffs{{0, false, true}, {0, true, true}, {0, false, false}, {0, false, true},
                                     {1, true, true}};
    auto s = paired_endpoint_stats(diffs);
    CHECK(s.endpoints[0].mean() == doctest::Approx(0.5));
    CHECK(s.endpoints[0].se() == doctest::Approx(0.2887).epsilon(1e-4 / 0.2887));

    std::vector<PairedOutcome> healthy_only{{1, true, false}};
    CHECK_FALSE(paired_endpoint_stats(healthy_only).sufficient());
}

TEST_CASE("pooled batch statistics match per-patient enumeration") {
    Rng rng(3);
    MonitoringArchive archive;
    for (int t = 0; t <= 6; ++t) archive.add(sample_monitoring_batch(t, 150, 0.5, rng));
    PopulationTimeline tl(10);
    tl.add_model({0, Trajectory::constant({0.70, 0.75}), 5, 10});
    tl.add_model({1, Trajectory::constant({0.66, 0.80}), 5, 10});
    tl.add_model({2, Trajectory::constant({0.73, 0.71}), 5, 10});

    auto fast = paired_endpoint_stats(archive, tl, 0, 2, 5);
    std::vector<PairedOutcome> outcomes;
    for (int t = 2; t <= 5; ++t) {
        const auto& b = archive.at(t);
        for (std::size_t k = 0; k < 2; ++k) {
            for (double u : b.stratum(k)) {
                outcomes.push_back({k, correct_prediction(u, tl.truth(0, t)[k]), correct_prediction(u, tl.truth(2, t)[k])});
            }
        }
    }
    auto slow = paired_endpoint_stats(outcomes);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(fast.endpoints[k].n == slow.endpoints[k].n);
        CHECK(fast.endpoints[k].sum == slow.endpoints[k].sum);
        CHECK(fast.endpoints[k].sum_sq == slow.endpoints[k].sum_sq);
    }
    auto ident = paired_endpoint_stats(archive, tl, 1, 1, 5);
    CHECK(ident.endpoints[0].sum == 0.0);
    CHECK(ident.endpoints[1].se() == 0.0);
}

TEST_CASE("interim decision examples") {
    NIMargin eps{0.05, 0.05};
    double z = 1.645;
    double zs = normal_upper_quantile(0.025);
    CHECK(rejects_null(two(0.10, 0.01, 0.10, 0.01), eps, z, zs));
    CHECK_FALSE(rejects_null(two(-0.06, 0.001, 0.10, 0.001), eps, z, zs));

    GstState st;
    st.num_interims = 3;
    for (int k = 0; k < 2; ++k) {
        CHECK(gst_interim(st, two(-0.06, 0.001, 0.10, 0.001), eps, z, zs) == InterimOutcome::Continue);
    }
    CHECK(gst_interim(st, two(-0.06, 0.001, 0.10, 0.001), eps, z, zs) == InterimOutcome::Expired);
    CHECK_THROWS_AS(gst_interim(st, two(0.1, 0.01, 0.1, 0.01), eps, z, zs), std::logic_error);

    // zero standard error: sign of the mean against the margin decides, ties do not reject
    CHECK(rejects_null(two(0.0, 0.0, 0.02, 0.0), eps, z, zs));
    CHECK_FALSE(rejects_null(two(-0.05, 0.0, 0.02, 0.0), eps, z, zs));
    CHECK_FALSE(rejects_null(two(0.0, 0.0, 0.0, 0.0), eps, z, zs));
    // superiority null
    auto zero = NIMargin::zero(2);
    CHECK(rejects_null(two(0.0, 0.0, 0.02, 0.0), zero, z, zs));
    CHECK_FALSE(rejects_null(two(-0.001, 0.0, 0.05, 0.0), zero, z, zs));
}

TEST_CASE("interim decision is monotone in evidence") {
    Rng rng(17);
    NIMargin eps{0.05, 0.05};
    for (int i = 0; i < 5000; ++i) {
        double m0 = rng.uniform() * 0.3 - 0.15, m1 = rng.uniform() * 0.3 - 0.15;
        double s0 = rng.uniform() * 0.05, s1 = rng.uniform() * 0.05;
        double z = 1.0 + rng.uniform() * 2.0, zs = z + rng.uniform();
        double bump0 = rng.uniform() * 0.1, bump1 = rng.uniform() * 0.1;
        if (rejects_null(two(m0, s0, m1, s1), eps, z, zs)) {
            CHECK(rejects_null(two(m0 + bump0, s0, m1 + bump1, s1), eps, z, zs));
        }
    }
}

TEST_CASE("GST type-I error at the boundary null of the binding endpoint") {
    // endpoint 0 has true paired difference exactly -eps; endpoint 1 is clearly
    // superior, so only the non-inferiority bound on endpoint 0 can block rejection
    const double eps = 0.05;
    const int looks = 5, per_look = 250, sims = 2000; // per-look size of the simulation scenarios
    const double alpha = 0.05;
    for (auto mode : {BoundaryMode::Bonferroni, BoundaryMode::GaussianRecursion}) {
        auto fb = FamilyBoundaries::make(alpha, looks, 2, mode);
        Rng rng(mode == BoundaryMode::Bonferroni ? 21 : 22);
        int rejections = 0;
        for (int s = 0; s < sims; ++s) {
            GstState st;
            st.num_interims = looks;
            PairedSampleStats stats(2);
            for (int k = 0; k < looks; ++k) {
                for (int i = 0; i < per_look; ++i) {
                    stats.endpoints[0].add(-eps + 0.3 * rng.normal());
                    stats.endpoints[1].add(0.3 + 0.3 * rng.normal());
                }
                auto out = gst_interim(st, stats, NIMargin{eps, eps}, fb.z_all[k], fb.z_split[k]);
                if (out == InterimOutcome::Rejected) {
                    ++rejections;
                    break;
                }
                if (out == InterimOutcome::Expired) break;
            }
        }
        double rate = double(rejections) / sims;
        double bound = alpha + 2.0 * std::sqrt(alpha * (1 - alpha) / sims);
        MESSAGE("type-I (" << to_string(mode) << "): " << rate);
        CHECK(rate <= bound);
        CHECK(rate > 0.01); // the test is not vacuous
    }
}

TEST_CASE("gate family traces") {
    NIMargin eps{0.05, 0.05};
    auto fb = FamilyBoundaries::make(0.2, 4, 2, BoundaryMode::GaussianRecursion);

    SUBCASE("no gates passes vacuously") {
        GateFamily fam(0, 3, 0.2, 4, eps, fb, {});
        auto r = fam.step(1, [](ModelId, ModelId) { return PairedSampleStats(2); });
        CHECK(r.status == FamilyStatus::Passed);
    }
    SUBCASE("first gate expiring blocks the family") {
        GateFamily fam(0, 3, 0.2, 4, eps, fb, {0, 1});
        auto bad = [](ModelId, ModelId) { return two(-0.2, 0.001, 0.2, 0.001); };
        for (int t = 1; t <= 3; ++t) CHECK(fam.step(t, bad).status == FamilyStatus::Active);
        CHECK(fam.step(4, bad).status == FamilyStatus::Failed);
        CHECK(fam.gates()[0].status == GstStatus::Expired);
        CHECK(fam.gates()[1].status == GstStatus::Active);
    }
    SUBCASE("two gates rejecting at looks 2 and 3") {
        GateFamily fam(0, 3, 0.2, 4, eps, fb, {0, 1});
        auto provider = [&](int look) {
            return [look](ModelId ref, ModelId) {
                bool good = (ref == 0 && look >= 2) || (ref == 1 && look >= 3);
                return good ? two(0.1, 0.001, 0.1, 0.001) : two(-0.2, 0.001, 0.1, 0.001);
            };
        };
        CHECK(fam.step(1, provider(1)).status == FamilyStatus::Active);
        auto r2 = fam.step(2, provider(2));
        CHECK(r2.status == FamilyStatus::Active);
        CHECK(r2.newly_rejected == std::vector<ModelId>{0});
        auto r3 = fam.step(3, provider(3));
        CHECK(r3.status == FamilyStatus::Passed);
        CHECK(r3.newly_rejected == std::vector<ModelId>{1});
    }
    SUBCASE("several gates clear in one look") {
        GateFamily fam(0, 5, 0.2, 4, eps, fb, {0, 1, 2});
        auto r = fam.step(1, [](ModelId, ModelId) { return two(0.1, 0.001, 0.1, 0.001); });
        CHECK(r.status == FamilyStatus::Passed);
        CHECK(r.newly_rejected.size() == 3);
    }
    SUBCASE("append rules") {
        GateFamily fam(0, 3, 0.2, 4, eps, fb, {0});
        fam.append_gate(1);
        CHECK(fam.references() == std::vector<ModelId>{0, 1});
        CHECK_THROWS_AS(fam.append_gate(1), std::invalid_argument);
        CHECK_THROWS_AS(fam.append_gate(0), std::invalid_argument);
        fam.step(1, [](ModelId, ModelId) { return two(0.1, 0.001, 0.1, 0.001); });
        REQUIRE(fam.status() == FamilyStatus::Passed);
        fam.append_gate(2);
        CHECK(fam.status() == FamilyStatus::Passed);
    }
    SUBCASE("reopen tests the new gate") {
        GateFamily fam(0, 5, 0.2, 4, eps, fb, {0});
        fam.step(1, [](ModelId, ModelId) { return two(0.1, 0.001, 0.1, 0.001); });
        REQUIRE(fam.status() == FamilyStatus::Passed);
        fam.reopen(2);
        CHECK(fam.status() == FamilyStatus::Active);
        auto r = fam.step(2, [](ModelId, ModelId) { return two(0.1, 0.001, 0.1, 0.001); });
        CHECK(r.status == FamilyStatus::Passed);
        CHECK(r.newly_rejected == std::vector<ModelId>{2});
    }
}

TEST_CASE("gate-keeping family-wise error with all nulls true") {
    // three gates, each reference truly better than the candidate by exactly eps in endpoint 0
    const int sims = 2000, looks = 4, per_look = 80;
    const double level = 0.1, eps = 0.05;
    auto fb = FamilyBoundaries::make(level, looks, 2, BoundaryMode::GaussianRecursion);
    Rng rng(99);
    int any = 0;
    for (int s = 0; s < sims; ++s) {
        GateFamily fam(0, 9, level, looks, NIMargin{eps, eps}, fb, {0, 1, 2});
        std::vector<PairedSampleStats> pooled(3, PairedSampleStats(2));
        bool rejected = false;
        for (int t = 1; t <= looks && fam.status() == FamilyStatus::Active; ++t) {
            for (int g = 0; g < 3; ++g) {
                for (int i = 0; i < per_look; ++i) {
                    pooled[g].endpoints[0].add(-eps + 0.3 * rng.normal());
                    pooled[g].endpoints[1].add(0.1 + 0.3 * rng.normal());
                }
            }
            auto r = fam.step(t, [&](ModelId ref, ModelId) { return pooled[std::size_t(ref)]; });
            if (!r.newly_rejected.empty()) rejected = true;
        }
        any += rejected;
    }
    double rate = double(any) / sims;
    MESSAGE("gate-keeping FWER: " << rate);
    CHECK(rate <= level + 2.0 * std::sqrt(level * (1 - level) / sims));
}

TEST_CASE("combination tests") {
    std::vector<double> halves{0.5, 0.5};
    CHECK(combine_pvalues(halves, CombinationMethod::InverseNormal) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(combine_pvalues(halves, CombinationMethod::Fisher) == doctest::Approx(0.5966).epsilon(1e-3));
    std::vector<double> one{1.0};
    CHECK(combine_pvalues(one, CombinationMethod::Fisher) == 1.0);
    std::vector<double> bad{0.3, 0.0};
    CHECK_THROWS_AS(combine_pvalues(bad, CombinationMethod::Fisher), std::invalid_argument);
    std::vector<double> empty;
    CHECK_THROWS_AS(combine_pvalues(empty, CombinationMethod::Fisher), std::invalid_argument);

    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        int m = 1 + int(rng.below(8));
        std::vector<double> p(m);
        double stat = 0.0;
        for (auto& x : p) {
            x = 1e-6 + rng.uniform() * (1 - 1e-6);
            stat += -2.0 * std::log(x);
        }
        CHECK(std::abs(combine_pvalues(p, CombinationMethod::Fisher) - chisq_even_tail(stat, m)) < 1e-9);
    }
}
