// Shared test utilities: independent oracles (quadrature likelihood, finite
// differences, KS test, rank correlation) and randomized model/sequence
// generators. Everything here recomputes results from first principles so the
// checks stay independent of the closed forms they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ddp/inference.hpp"
#include "ddp/simulate.hpp"

namespace ddp::test {

inline double rel_err(double got, double want) {
    const double denom = std::max(std::abs(want), 1e-12);
    return std::abs(got - want) / denom;
}

// ---------------------------------------------------------------------------
// Quadrature likelihood oracle: trapezoid integration of the total intensity
// over each inter-event interval, replacing every closed-form compensator.

inline double trapezoid_total_intensity(const ModelParams& model, const EventSequence& seq,
                                        const InfluenceTrace* trace, double a, double b, int points) {
    if (b <= a) return 0.0;
    const double h = (b - a) / static_cast<double>(points - 1);
    // Open-interval limits at the endpoints: right limit at a, left limit at b.
    double sum = 0.5 * (total_intensity_right(model, a, seq, trace) + total_intensity(model, b, seq, trace));
    for (int k = 1; k < points - 1; ++k)
        sum += total_intensity(model, a + h * static_cast<double>(k), seq, trace);
    return sum * h;
}

inline double quadrature_log_likelihood(const ModelParams& model, const EventSequence& seq,
                                        const InfluenceTrace* trace, int points_per_interval) {
    double ll = 0.0;
    double prev = 0.0;
    for (const auto& e : seq.events) {
        ll += std::log(intensity(model, e.type_idx, e.t, seq, trace));
        ll -= trapezoid_total_intensity(model, seq, trace, prev, e.t, points_per_interval);
        prev = e.t;
    }
    ll -= trapezoid_total_intensity(model, seq, trace, prev, seq.horizon_T, points_per_interval);
    return ll;
}

// ---------------------------------------------------------------------------
// Central finite differences of the training objective along one coordinate.

inline double fd_objective_derivative(const ModelParams& model, const Dataset& data, const TrainConfig& config,
                                      size_t coord, double step = 1e-5) {
    std::vector<double> packed = pack_params(model);
    ModelParams work = model;
    packed[coord] += step;
    unpack_params(work, packed);
    const double up = objective(work, data, config);
    packed[coord] -= 2.0 * step;
    unpack_params(work, packed);
    const double down = objective(work, data, config);
    packed[coord] += step;
    return (up - down) / (2.0 * step);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov test against Exp(1).

inline double ks_statistic_exp1(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = 1.0 - std::exp(-samples[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    return d;
}

// Asymptotic Kolmogorov distribution tail (Stephens' small-sample correction).
inline double ks_pvalue_exp1(const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    const double d = ks_statistic_exp1(samples);
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

// Two-sample KS test (asymptotic p-value with the effective sample size).
inline double ks_pvalue_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] <= b[ib]) ++ia;
        else ++ib;
        const double fa = static_cast<double>(ia) / static_cast<double>(a.size());
        const double fb = static_cast<double>(ib) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                      static_cast<double>(a.size() + b.size());
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Spearman rank correlation with average ranks over ties.

inline std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<size_t> order(x.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    size_t i = 0;
    while (i < x.size()) {
        size_t j = i;
        while (j < x.size() && x[order[j]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Randomized fixtures.

inline DiseaseCatalog toy_catalog(int K) {
    DiseaseCatalog cat;
    for (int v = 0; v < K; ++v) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "C%02d", v);
        cat.codes.push_back(buf);
    }
    return cat;
}

// Random parameters in stable ranges: mapped mu in [0.05, 0.5], alpha scaled
// subcritical, beta in [0.5, 2], small context weights, randomized readout so
// ddp influence factors actually vary.
inline ModelParams random_model(ModelKind kind, int K, int F, uint64_t seed, int D = 3, int H = 4) {
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    ModelParams m = make_model(kind, toy_catalog(K), kind == ModelKind::kHawkes ? 0 : F, 0.1, 0.1, 1.0, D, H, seed);
    for (int v = 0; v < K; ++v) {
        m.background.bias[static_cast<size_t>(v)] = softplus_inv(rng.uniform(0.05, 0.5));
        for (int k = 0; k < m.context_dim; ++k) m.background.theta(v, k) = rng.uniform(-0.3, 0.3);
    }
    if (m.has_excitation()) {
        for (auto& raw : m.excitation.raw.data)
            raw = softplus_inv(rng.uniform(0.05, 0.6) / static_cast<double>(K));
        for (auto& raw : m.kernel.raw.data) raw = softplus_inv(rng.uniform(0.5, 2.0) - kBetaFloor);
    }
    if (m.is_ddp()) {
        for (auto& w : m.neural.readout_w) w = rng.uniform(-0.8, 0.8);
        m.neural.readout_b = rng.uniform(-0.5, 0.5);
    }
    return m;
}

inline EventSequence random_sequence(int K, int F, int n_events, double T, uint64_t seed) {
    Rng rng(mix_seed(seed, 0x736571ULL));
    EventSequence seq;
    seq.patient_id = "p" + std::to_string(seed);
    seq.horizon_T = T;
    for (int k = 0; k < F; ++k) seq.context.push_back(rng.normal(0.0, 1.0));
    std::vector<double> times;
    for (int i = 0; i < n_events; ++i) times.push_back(rng.uniform(0.0, T * 0.95));
    std::sort(times.begin(), times.end());
    for (int i = 0; i < n_events; ++i) seq.events.push_back({times[static_cast<size_t>(i)], rng.uniform_int(K)});
    return canonicalize_sequence(std::move(seq));
}

inline Dataset random_dataset(const ModelParams& model, int n_seqs, int max_events, double T, uint64_t seed) {
    Dataset data;
    data.catalog = model.catalog;
    data.context_dim = model.context_dim;
    Rng rng(mix_seed(seed, 0x64617461ULL));
    for (int s = 0; s < n_seqs; ++s) {
        const int n = 1 + rng.uniform_int(max_events);
        data.sequences.push_back(
            random_sequence(model.K(), model.context_dim, n, T, mix_seed(seed, 1000 + static_cast<uint64_t>(s))));
    }
    return data;
}

}  // namespace ddp::test
