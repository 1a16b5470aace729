#pragma once

#include <map>
#include <utility>

#include "ddp/intensity.hpp"

namespace ddp {

// A comorbidity network at one moment: occurrence flags per type plus
// weighted directed edges. Timeless graphs (static, co-occurrence) carry
// t = 0 and, for undirected graphs, one entry per unordered pair (u < v).
struct GraphSnapshot {
    double t = 0.0;
    std::vector<char> labels;                       // K occurrence flags
    std::map<std::pair<int, int>, double> edges;    // (src, dst) -> weight >= 0

    int K() const { return static_cast<int>(labels.size()); }
};

constexpr double kDefaultPruneEps = 1e-6;
constexpr long kDefaultPairBudget = 50000;

// Edge weights W_{v->u}(t) = sum over events of type v at t_i <= t of
// alpha_{v,u} * gamma_{v,u}(t - t_i) * w_i (w_i = 1 for non-ddp models).
// Edges below prune_eps are omitted; analytics call this with prune_eps = 0.
GraphSnapshot dynamic_graph(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace,
                            double t, double prune_eps = 0.0);

// Population-level static graph W_{v->u} = alpha_{v,u} * E[w_i | v_i = v],
// the empirical mean influence factor over all type-v events in the dataset.
// Types with no occurrences fall back to the neutral 0.5. For hawkes/chawkes
// the factor is identically 1 and the graph is alpha itself.
GraphSnapshot static_graph(const ModelParams& model, const Dataset& data);

// Undirected co-occurrence counts: edge (u,v) = number of patients with both
// types anywhere in their sequence.
GraphSnapshot cooccurrence_graph(const Dataset& data);

// Weighted Jaccard similarity sum(min)/sum(max) over the union of edge keys;
// defined as 1 when both graphs are empty.
double weighted_jaccard(const GraphSnapshot& a, const GraphSnapshot& b);

// Mean Jaccard distance 1 - J over all unordered pairs.
double heterogeneity(const std::vector<GraphSnapshot>& graphs);

struct HeterogeneityCurve {
    std::vector<double> grid;
    std::vector<double> values;  // J_avg(t), each in [0,1]
    int population = 0;
};

// J_avg over a (seeded) patient subsample at each grid time. Grid times are
// relative to each patient's first event; patients without events are
// skipped. When the pair count exceeds pair_budget, pairs are subsampled with
// the same seed, an unbiased estimate of the full mean.
HeterogeneityCurve heterogeneity_over_time(const ModelParams& model, const Dataset& data,
                                           const std::vector<double>& grid, int subsample_n, uint64_t seed,
                                           long pair_budget = kDefaultPairBudget);

struct InfluencerCurve {
    int disease = 0;
    std::vector<double> rel_grid;  // 0 = onset
    std::vector<double> delta;     // onset-group J_avg minus matched baseline
};

// Change in population heterogeneity around the onset of one disease. For
// patients with the disease, graphs are evaluated at onset-relative times;
// the baseline is the J_avg of a seeded population sample evaluated at each
// onset patient's matched absolute times, averaged over onset patients.
InfluencerCurve influencer_curve(const ModelParams& model, const Dataset& data, int disease,
                                 const std::vector<double>& rel_grid, uint64_t seed, int baseline_sample_n = 100);

}  // namespace ddp
