#include "ddp/simulate.hpp"

#include <cmath>

namespace ddp {

std::vector<double> ContextSpec::sample(Rng& rng) const {
    switch (mode) {
        case Mode::kFixed: return values;
        case Mode::kNormal: {
            std::vector<double> f(static_cast<size_t>(dim));
            for (auto& x : f) x = rng.normal(mean, sd);
            return f;
        }
        case Mode::kBernoulli: {
            std::vector<double> f(static_cast<size_t>(dim));
            for (auto& x : f) x = rng.uniform() < p ? 1.0 : 0.0;
            return f;
        }
    }
    fail("ContextSpec: bad mode");
}

void SimConfig::validate() const {
    require(horizon_T > 0.0, "SimConfig: horizon_T must be positive");
    require(max_events >= 1, "SimConfig: max_events must be >= 1");
}

EventSequence simulate_sequence(const ModelParams& model, const SimConfig& config, uint64_t seq_index,
                                SimStats* stats) {
    config.validate();
    Rng rng(splitmix64(config.seed ^ seq_index));

    EventSequence seq;
    seq.patient_id = "sim-" + std::to_string(seq_index);
    seq.horizon_T = config.horizon_T;
    if (model.kind != ModelKind::kHawkes) seq.context = config.context.sample(rng);
    require(static_cast<int>(seq.context.size()) == model.context_dim,
            "simulate_sequence: context spec emits " + std::to_string(seq.context.size()) +
                " features, model expects " + std::to_string(model.context_dim));

    InfluenceTrace trace;
    if (model.is_ddp()) trace.state = RecurrentState::zeros(model.neural.H);
    const InfluenceTrace* trace_ptr = model.is_ddp() ? &trace : nullptr;

    double t = 0.0;
    double bound = total_intensity_right(model, t, seq, trace_ptr);
    while (true) {
        t += rng.exponential(bound);
        if (t >= config.horizon_T) break;
        const double lam = total_intensity(model, t, seq, trace_ptr);
        if (stats) {
            ++stats->proposals;
            stats->max_ratio = std::max(stats->max_ratio, lam / bound);
        }
        require(lam <= bound * (1.0 + 1e-9), "simulate_sequence: thinning bound violated");
        if (rng.uniform() * bound <= lam) {
            // Accept: draw the type from the per-type intensity split.
            double u = rng.uniform() * lam;
            int type = model.K() - 1;
            for (int v = 0; v < model.K(); ++v) {
                u -= intensity(model, v, t, seq, trace_ptr);
                if (u <= 0.0) {
                    type = v;
                    break;
                }
            }
            seq.events.push_back({t, type});
            if (model.is_ddp()) influence_extend(model.neural, trace, type, t);
            if (stats) ++stats->accepts;
            if (seq.n_events() >= config.max_events) break;
            bound = total_intensity_right(model, t, seq, trace_ptr);
        } else {
            // Reject: the intensity only decays until the next event, so the
            // current value is a valid tighter bound.
            bound = lam;
        }
    }
    return seq;
}

Dataset simulate_dataset(const ModelParams& model, const SimConfig& config, int n_sequences) {
    require(n_sequences >= 1, "simulate_dataset: need at least one sequence");
    Dataset data;
    data.catalog = model.catalog;
    data.context_dim = model.context_dim;
    data.sequences.reserve(static_cast<size_t>(n_sequences));
    for (int i = 0; i < n_sequences; ++i)
        data.sequences.push_back(simulate_sequence(model, config, static_cast<uint64_t>(i)));
    return data;
}

std::vector<double> time_rescale(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace) {
    require(is_canonical(seq), "time_rescale: sequence is not canonical");
    std::vector<double> gaps;
    gaps.reserve(seq.events.size());
    double prev = 0.0;
    for (const auto& e : seq.events) {
        gaps.push_back(total_compensator(model, prev, e.t, seq, trace));
        prev = e.t;
    }
    return gaps;
}

}  // namespace ddp
