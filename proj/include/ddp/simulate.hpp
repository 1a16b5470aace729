#pragma once

#include "ddp/intensity.hpp"

namespace ddp {

// Where a simulated sequence's context vector comes from.
struct ContextSpec {
    enum class Mode { kFixed, kNormal, kBernoulli };
    Mode mode = Mode::kFixed;
    std::vector<double> values;  // kFixed
    int dim = 0;                 // sampled modes
    double mean = 0.0, sd = 1.0; // kNormal
    double p = 0.5;              // kBernoulli

    std::vector<double> sample(Rng& rng) const;
    int feature_count() const { return mode == Mode::kFixed ? static_cast<int>(values.size()) : dim; }
};

struct SimConfig {
    double horizon_T = 100.0;
    int max_events = 200;
    uint64_t seed = 0;
    ContextSpec context;

    void validate() const;
};

// Thinning diagnostics; every acceptance ratio must stay in (0, 1].
struct SimStats {
    long proposals = 0;
    long accepts = 0;
    double max_ratio = 0.0;
};

// Exact sampling by Ogata-style thinning. Between events the exponential-
// kernel intensity with fixed influence factors is nonincreasing, so the
// right limit at the current time dominates everything ahead of it. For ddp
// the influence trace grows with each accepted event, making the generative
// model exactly the fitted model.
EventSequence simulate_sequence(const ModelParams& model, const SimConfig& config, uint64_t seq_index,
                                SimStats* stats = nullptr);

Dataset simulate_dataset(const ModelParams& model, const SimConfig& config, int n_sequences);

// Compensator increments Lambda(t_i) - Lambda(t_{i-1}) with t_0 = 0; i.i.d.
// Exp(1) under the generating model (time-rescaling theorem).
std::vector<double> time_rescale(const ModelParams& model, const EventSequence& seq,
                                 const InfluenceTrace* trace = nullptr);

}  // namespace ddp
