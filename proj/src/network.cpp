#include "ddp/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ddp {

GraphSnapshot dynamic_graph(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace,
                            double t, double prune_eps) {
    require(model.has_excitation(), "dynamic_graph: poisson model has no network semantics");
    if (model.is_ddp())
        require(trace != nullptr && trace->size() >= seq.events.size(),
                "dynamic_graph: ddp model needs an influence trace");

    const int K = model.K();
    GraphSnapshot g;
    g.t = t;
    g.labels = occurrence_labels(seq, t, K);

    Matrix w(K, K);
    for (size_t i = 0; i < seq.events.size(); ++i) {
        const auto& e = seq.events[i];
        if (e.t > t) break;
        const double wi = model.is_ddp() ? trace->factors[i] : 1.0;
        const int v = e.type_idx;
        for (int u = 0; u < K; ++u)
            w(v, u) += model.excitation.alpha(v, u) * kernel_eval(model.kernel.beta(v, u), t - e.t) * wi;
    }
    for (int v = 0; v < K; ++v)
        for (int u = 0; u < K; ++u)
            if (w(v, u) > 0.0 && w(v, u) >= prune_eps) g.edges[{v, u}] = w(v, u);
    return g;
}

GraphSnapshot static_graph(const ModelParams& model, const Dataset& data) {
    require(model.has_excitation(), "static_graph: poisson model has no network semantics");
    require(!data.sequences.empty(), "static_graph: empty dataset");
    const int K = model.K();

    std::vector<double> mean_w(static_cast<size_t>(K), 1.0);
    if (model.is_ddp()) {
        std::vector<double> sum(static_cast<size_t>(K), 0.0);
        std::vector<long> count(static_cast<size_t>(K), 0);
        for (const auto& seq : data.sequences) {
            const InfluenceTrace trace = influence_forward(model.neural, seq);
            for (size_t i = 0; i < seq.events.size(); ++i) {
                sum[static_cast<size_t>(seq.events[i].type_idx)] += trace.factors[i];
                ++count[static_cast<size_t>(seq.events[i].type_idx)];
            }
        }
        for (int v = 0; v < K; ++v)
            mean_w[static_cast<size_t>(v)] =
                count[static_cast<size_t>(v)] > 0
                    ? sum[static_cast<size_t>(v)] / static_cast<double>(count[static_cast<size_t>(v)])
                    : 0.5;  // neutral prior for unseen types
    }

    GraphSnapshot g;
    g.labels.assign(static_cast<size_t>(K), 1);
    for (int v = 0; v < K; ++v)
        for (int u = 0; u < K; ++u) {
            const double w = model.excitation.alpha(v, u) * mean_w[static_cast<size_t>(v)];
            if (w > 0.0) g.edges[{v, u}] = w;
        }
    return g;
}

GraphSnapshot cooccurrence_graph(const Dataset& data) {
    require(!data.sequences.empty(), "cooccurrence_graph: empty dataset");
    const int K = data.catalog.size();
    GraphSnapshot g;
    g.labels.assign(static_cast<size_t>(K), 0);
    for (const auto& seq : data.sequences) {
        std::vector<char> present(static_cast<size_t>(K), 0);
        for (const auto& e : seq.events) present[static_cast<size_t>(e.type_idx)] = 1;
        for (int u = 0; u < K; ++u) {
            if (!present[static_cast<size_t>(u)]) continue;
            g.labels[static_cast<size_t>(u)] = 1;
            for (int v = u + 1; v < K; ++v)
                if (present[static_cast<size_t>(v)]) g.edges[{u, v}] += 1.0;
        }
    }
    return g;
}

double weighted_jaccard(const GraphSnapshot& a, const GraphSnapshot& b) {
    require(a.K() == b.K(), "weighted_jaccard: graphs over different catalogs");
    double min_sum = 0.0, max_sum = 0.0;
    auto ia = a.edges.begin();
    auto ib = b.edges.begin();
    while (ia != a.edges.end() || ib != b.edges.end()) {
        double wa = 0.0, wb = 0.0;
        if (ib == b.edges.end() || (ia != a.edges.end() && ia->first < ib->first)) {
            wa = (ia++)->second;
        } else if (ia == a.edges.end() || ib->first < ia->first) {
            wb = (ib++)->second;
        } else {
            wa = (ia++)->second;
            wb = (ib++)->second;
        }
        min_sum += std::min(wa, wb);
        max_sum += std::max(wa, wb);
    }
    if (max_sum == 0.0) return 1.0;  // both graphs empty
    return min_sum / max_sum;
}

double heterogeneity(const std::vector<GraphSnapshot>& graphs) {
    require(graphs.size() >= 2, "heterogeneity: need at least two graphs");
    double sum = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < graphs.size(); ++i)
        for (size_t j = i + 1; j < graphs.size(); ++j) {
            sum += 1.0 - weighted_jaccard(graphs[i], graphs[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

namespace {

// J_avg with the pair budget applied: exact all-pairs when feasible, seeded
// pair subsampling otherwise (an unbiased estimator of the full mean).
double heterogeneity_budgeted(const std::vector<GraphSnapshot>& graphs, long pair_budget, Rng& rng) {
    const long n = static_cast<long>(graphs.size());
    if (n < 2) return 0.0;
    const long total_pairs = n * (n - 1) / 2;
    if (total_pairs <= pair_budget) return heterogeneity(graphs);
    double sum = 0.0;
    for (long k = 0; k < pair_budget; ++k) {
        const int i = rng.uniform_int(static_cast<int>(n));
        int j = rng.uniform_int(static_cast<int>(n) - 1);
        if (j >= i) ++j;
        sum += 1.0 - weighted_jaccard(graphs[static_cast<size_t>(i)], graphs[static_cast<size_t>(j)]);
    }
    return sum / static_cast<double>(pair_budget);
}

std::vector<size_t> seeded_sample(size_t population, size_t want, Rng& rng) {
    std::vector<size_t> idx(population);
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (want >= population) return idx;
    for (size_t i = 0; i < want; ++i)
        std::swap(idx[i], idx[i + static_cast<size_t>(rng.uniform_int(static_cast<int>(population - i)))]);
    idx.resize(want);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

HeterogeneityCurve heterogeneity_over_time(const ModelParams& model, const Dataset& data,
                                           const std::vector<double>& grid, int subsample_n, uint64_t seed,
                                           long pair_budget) {
    require(!grid.empty(), "heterogeneity_over_time: empty grid");
    for (size_t k = 1; k < grid.size(); ++k)
        require(grid[k] > grid[k - 1], "heterogeneity_over_time: grid must be strictly increasing");

    // Patients need a first-diagnosis anchor; event-free ones are skipped.
    std::vector<size_t> with_events;
    for (size_t i = 0; i < data.sequences.size(); ++i)
        if (!data.sequences[i].events.empty()) with_events.push_back(i);
    require(with_events.size() >= 2, "heterogeneity_over_time: need at least two patients with events");

    Rng rng(mix_seed(seed, 0x686574ULL));  // "het"
    const auto chosen = seeded_sample(with_events.size(), static_cast<size_t>(std::max(subsample_n, 2)), rng);

    std::vector<const EventSequence*> patients;
    std::vector<InfluenceTrace> traces;
    patients.reserve(chosen.size());
    traces.reserve(chosen.size());
    for (size_t k : chosen) {
        patients.push_back(&data.sequences[with_events[k]]);
        traces.push_back(make_trace(model, *patients.back()));
    }

    HeterogeneityCurve curve;
    curve.grid = grid;
    curve.population = static_cast<int>(patients.size());
    for (double rel_t : grid) {
        std::vector<GraphSnapshot> graphs;
        graphs.reserve(patients.size());
        for (size_t p = 0; p < patients.size(); ++p) {
            const double anchor = patients[p]->events.front().t;
            graphs.push_back(dynamic_graph(model, *patients[p], model.is_ddp() ? &traces[p] : nullptr,
                                           anchor + rel_t));
        }
        curve.values.push_back(heterogeneity_budgeted(graphs, pair_budget, rng));
    }
    return curve;
}

InfluencerCurve influencer_curve(const ModelParams& model, const Dataset& data, int disease,
                                 const std::vector<double>& rel_grid, uint64_t seed, int baseline_sample_n) {
    require(disease >= 0 && disease < data.catalog.size(), "influencer_curve: disease index out of range");
    require(!rel_grid.empty(), "influencer_curve: empty grid");

    struct Onset {
        size_t idx;
        double t0;
    };
    std::vector<Onset> onset;
    for (size_t i = 0; i < data.sequences.size(); ++i)
        for (const auto& e : data.sequences[i].events)
            if (e.type_idx == disease) {
                onset.push_back({i, e.t});
                break;
            }
    require(onset.size() >= 2, "influencer_curve: fewer than two patients have the disease");
    const size_t m = onset.size();

    Rng rng(mix_seed(seed, 0x696e666cULL));  // "infl"
    std::vector<size_t> pool;
    for (size_t i = 0; i < data.sequences.size(); ++i)
        if (!data.sequences[i].events.empty()) pool.push_back(i);
    if (pool.size() > static_cast<size_t>(std::max(baseline_sample_n, 2))) {
        const auto keys = seeded_sample(pool.size(), static_cast<size_t>(baseline_sample_n), rng);
        std::vector<size_t> capped;
        capped.reserve(keys.size());
        for (size_t k : keys) capped.push_back(pool[k]);
        pool = std::move(capped);
    }

    // The onset group pairs graphs taken at different absolute times (each
    // patient at their own onset + rel_t), and graphs drift apart over
    // calendar time regardless of the disease. The baseline therefore has to
    // reproduce the same time structure: random population members assigned
    // the actual onset times. Several seeded assignments are averaged.
    const int repetitions = 10;
    std::vector<std::vector<size_t>> assignments;
    for (int r = 0; r < repetitions; ++r) {
        std::vector<size_t> shuffled = pool;
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
        std::vector<size_t> pick;
        for (size_t k = 0; k < m; ++k) pick.push_back(shuffled[k % shuffled.size()]);
        assignments.push_back(std::move(pick));
    }

    std::vector<InfluenceTrace> traces(data.sequences.size());
    std::vector<char> have_trace(data.sequences.size(), 0);
    auto trace_of = [&](size_t i) -> const InfluenceTrace* {
        if (!model.is_ddp()) return nullptr;
        if (!have_trace[i]) {
            traces[i] = make_trace(model, data.sequences[i]);
            have_trace[i] = 1;
        }
        return &traces[i];
    };

    InfluencerCurve curve;
    curve.disease = disease;
    curve.rel_grid = rel_grid;
    for (double rel_t : rel_grid) {
        std::vector<GraphSnapshot> onset_graphs;
        onset_graphs.reserve(m);
        for (const auto& o : onset)
            onset_graphs.push_back(dynamic_graph(model, data.sequences[o.idx], trace_of(o.idx), o.t0 + rel_t));
        const double j_onset = heterogeneity(onset_graphs);

        double baseline = 0.0;
        for (const auto& pick : assignments) {
            std::vector<GraphSnapshot> base_graphs;
            base_graphs.reserve(m);
            for (size_t k = 0; k < m; ++k)
                base_graphs.push_back(
                    dynamic_graph(model, data.sequences[pick[k]], trace_of(pick[k]), onset[k].t0 + rel_t));
            baseline += heterogeneity(base_graphs);
        }
        baseline /= static_cast<double>(repetitions);
        curve.delta.push_back(j_onset - baseline);
    }
    return curve;
}

}  // namespace ddp
