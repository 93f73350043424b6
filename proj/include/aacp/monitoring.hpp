// monitoring.hpp: prospectively collected monitoring batches.
//
// Each patient carries a class label and a latent uniform u. A model with true
// sensitivity s classifies a diseased patient correctly iff its latent value is
// <= s, and likewise for healthy patients and specificity. With coupling 1 every
// model uses u itself (comonotone). With coupling rho < 1 each (patient, model)
// pair uses u with probability rho and otherwise its own uniform, derived by
// hashing the batch seed, the patient and the model id.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aacp/core.hpp"
#include "aacp/rng.hpp"

namespace aacp {

struct MonitoringBatch {
    TimeIndex time = 0;
    std::vector<double> diseased_u; // sorted ascending
    std::vector<double> healthy_u;  // sorted ascending
    std::uint64_t seed = 0;
    double coupling = 1.0;

    std::size_t size() const { return diseased_u.size() + healthy_u.size(); }

    /// Latent uniforms of the stratum that determines endpoint k
    /// (sensitivity: diseased, specificity: healthy).
    std::span<const double> stratum(std::size_t endpoint) const;

    /// Number of patients in the stratum of `endpoint` with u <= threshold,
    /// i.e. correctly classified by a model whose endpoint value is `threshold`.
    std::size_t count_correct(std::size_t endpoint, double threshold) const;

    /// Latent value of patient i of the stratum of `endpoint` as seen by `model`.
    double latent(std::size_t endpoint, std::size_t i, ModelId model) const;

    struct Discordant {
        long n = 0;     // patients in the stratum
        long plus = 0;  // candidate correct, reference wrong
        long minus = 0; // reference correct, candidate wrong
    };
    Discordant discordant(std::size_t endpoint, ModelId ref, double ref_value, ModelId cand,
                          double cand_value) const;
};

MonitoringBatch sample_monitoring_batch(TimeIndex t, int size, double prevalence, Rng& rng,
                                        double coupling = 1.0);

inline bool correct_prediction(double u, double endpoint_value) { return u <= endpoint_value; }

/// All monitoring batches observed so far in one run, indexed by time.
class MonitoringArchive {
public:
    void add(MonitoringBatch batch);
    bool has(TimeIndex t) const;
    const MonitoringBatch& at(TimeIndex t) const;
    /// Latest time with a batch, or -1.
    TimeIndex latest() const { return static_cast<TimeIndex>(batches_.size()) - 1; }

private:
    std::vector<MonitoringBatch> batches_; // batches_[t] holds time t
};

} // namespace aacp
