#include "ddp/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace ddp {

void TrainConfig::validate() const {
    require(eta >= 0.0, "TrainConfig: eta must be >= 0");
    require(l1_weight >= 0.0, "TrainConfig: l1_weight must be >= 0");
    require(learning_rate > 0.0, "TrainConfig: learning_rate must be > 0");
    require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(validation_fraction > 0.0 && validation_fraction < 1.0,
            "TrainConfig: validation_fraction must be in (0,1)");
    require(early_stop_patience >= 1, "TrainConfig: early_stop_patience must be >= 1");
}

// ---------------------------------------------------------------------------
// Parameter packing

namespace {

struct Layout {
    size_t bias = 0, theta = 0, raw_alpha = 0, raw_beta = 0;
    size_t embedding = 0, wx = 0, wh = 0, gate_bias = 0, readout_w = 0, readout_b = 0;
    size_t total = 0;
};

Layout layout_of(const ModelParams& m) {
    Layout l;
    const size_t K = static_cast<size_t>(m.K());
    size_t at = 0;
    l.bias = at;
    at += K;
    l.theta = at;
    at += K * static_cast<size_t>(m.context_dim);
    if (m.has_excitation()) {
        l.raw_alpha = at;
        at += K * K;
        l.raw_beta = at;
        at += K * K;
    }
    if (m.is_ddp()) {
        const auto& n = m.neural;
        l.embedding = at;
        at += n.embedding.size();
        l.wx = at;
        at += n.wx.size();
        l.wh = at;
        at += n.wh.size();
        l.gate_bias = at;
        at += n.b.size();
        l.readout_w = at;
        at += n.readout_w.size();
        l.readout_b = at;
        at += 1;
    }
    l.total = at;
    return l;
}

}  // namespace

std::vector<double> pack_params(const ModelParams& m) {
    const Layout l = layout_of(m);
    std::vector<double> out(l.total);
    auto put = [&](size_t at, const std::vector<double>& v) { std::copy(v.begin(), v.end(), out.begin() + at); };
    put(l.bias, m.background.bias);
    put(l.theta, m.background.theta.data);
    if (m.has_excitation()) {
        put(l.raw_alpha, m.excitation.raw.data);
        put(l.raw_beta, m.kernel.raw.data);
    }
    if (m.is_ddp()) {
        put(l.embedding, m.neural.embedding.data);
        put(l.wx, m.neural.wx.data);
        put(l.wh, m.neural.wh.data);
        put(l.gate_bias, m.neural.b);
        put(l.readout_w, m.neural.readout_w);
        out[l.readout_b] = m.neural.readout_b;
    }
    return out;
}

void unpack_params(ModelParams& m, std::span<const double> packed) {
    const Layout l = layout_of(m);
    require(packed.size() == l.total, "unpack_params: size mismatch");
    auto get = [&](size_t at, std::vector<double>& v) { std::copy_n(packed.begin() + at, v.size(), v.begin()); };
    get(l.bias, m.background.bias);
    get(l.theta, m.background.theta.data);
    if (m.has_excitation()) {
        get(l.raw_alpha, m.excitation.raw.data);
        get(l.raw_beta, m.kernel.raw.data);
    }
    if (m.is_ddp()) {
        get(l.embedding, m.neural.embedding.data);
        get(l.wx, m.neural.wx.data);
        get(l.wh, m.neural.wh.data);
        get(l.gate_bias, m.neural.b);
        get(l.readout_w, m.neural.readout_w);
        m.neural.readout_b = packed[l.readout_b];
    }
}

std::vector<ParamBlock> param_blocks(const ModelParams& m) {
    const Layout l = layout_of(m);
    const size_t K = static_cast<size_t>(m.K());
    std::vector<ParamBlock> blocks;
    blocks.push_back({"bias", l.bias, K});
    if (m.context_dim > 0) blocks.push_back({"theta", l.theta, K * static_cast<size_t>(m.context_dim)});
    if (m.has_excitation()) {
        blocks.push_back({"raw_alpha", l.raw_alpha, K * K});
        blocks.push_back({"raw_beta", l.raw_beta, K * K});
    }
    if (m.is_ddp()) {
        blocks.push_back({"embedding", l.embedding, m.neural.embedding.size()});
        blocks.push_back({"wx", l.wx, m.neural.wx.size()});
        blocks.push_back({"wh", l.wh, m.neural.wh.size()});
        blocks.push_back({"gate_bias", l.gate_bias, m.neural.b.size()});
        blocks.push_back({"readout", l.readout_w, m.neural.readout_w.size() + 1});
    }
    return blocks;
}

// ---------------------------------------------------------------------------
// Likelihood and prediction quantities

double log_likelihood(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace) {
    require(is_canonical(seq), "log_likelihood: sequence is not canonical");
    double ll = 0.0;
    double prev = 0.0;
    for (const auto& e : seq.events) {
        ll += std::log(intensity(model, e.type_idx, e.t, seq, trace));
        ll -= total_compensator(model, prev, e.t, seq, trace);
        prev = e.t;
    }
    ll -= total_compensator(model, prev, seq.horizon_T, seq, trace);
    return ll;
}

std::vector<double> next_type_probability(const ModelParams& model, const EventSequence& prefix,
                                          const InfluenceTrace* trace, double t_next) {
    require(prefix.events.empty() || t_next > prefix.events.back().t,
            "next_type_probability: query time inside history");
    std::vector<double> p(static_cast<size_t>(model.K()));
    double total = 0.0;
    for (int v = 0; v < model.K(); ++v) {
        p[static_cast<size_t>(v)] = intensity(model, v, t_next, prefix, trace);
        total += p[static_cast<size_t>(v)];
    }
    for (auto& x : p) x /= total;
    return p;
}

double next_time_density(const ModelParams& model, const EventSequence& prefix, const InfluenceTrace* trace,
                         double t) {
    const double t_last = prefix.events.empty() ? 0.0 : prefix.events.back().t;
    require(t > t_last, "next_time_density: t must be after the last event");
    const double lam = total_intensity(model, t, prefix, trace);
    return lam * std::exp(-total_compensator(model, t_last, t, prefix, trace));
}

double prediction_loss(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace) {
    const int n = seq.n_events();
    if (n < 2) return 0.0;
    double loss = 0.0;
    for (int i = 1; i < n; ++i) {
        const auto& e = seq.events[static_cast<size_t>(i)];
        // lambda sums over t_j < t_i, so passing the full sequence evaluates
        // exactly the prefix before event i.
        const double lam_true = intensity(model, e.type_idx, e.t, seq, trace);
        const double lam_tot = total_intensity(model, e.t, seq, trace);
        loss += -std::log(lam_true / lam_tot);
    }
    return loss / static_cast<double>(n - 1);
}

// ---------------------------------------------------------------------------
// Analytic gradient

namespace {

struct MappedPair {
    Matrix a;     // softplus(raw_alpha)
    Matrix beta;  // softplus(raw_beta) + floor
};

MappedPair map_pairwise(const ModelParams& m) {
    MappedPair mp;
    if (!m.has_excitation()) return mp;
    const int K = m.K();
    mp.a = Matrix(K, K);
    mp.beta = Matrix(K, K);
    for (int u = 0; u < K; ++u)
        for (int v = 0; v < K; ++v) {
            mp.a(u, v) = m.excitation.alpha(u, v);
            mp.beta(u, v) = m.kernel.beta(u, v);
        }
    return mp;
}

double l1_alpha_sum(const ModelParams& m) {
    if (!m.has_excitation()) return 0.0;
    double s = 0.0;
    for (double raw : m.excitation.raw.data) s += softplus(raw);
    return s;
}

// Per-sequence objective piece ll - eta * pl and its gradient. The gradient
// flows through the coefficients q_{i,v} = dS/dlambda_v(t_i): the likelihood
// and the prediction-loss numerator touch only v = v_i, while the
// prediction-loss normalizer touches every type. Everything is then chained
// into the raw parameterization and (for ddp) through BPTT via dS/dw_j.
double seq_objective_impl(const ModelParams& model, const MappedPair& mp, const EventSequence& seq,
                          const InfluenceTrace* trace, double eta, std::vector<double>* grad_out) {
    const int n = seq.n_events();
    const int K = model.K();
    const double T = seq.horizon_T;
    const auto f = model.context_view(seq);
    const bool excite = model.has_excitation();
    const bool ddp = model.is_ddp();
    if (ddp) require(trace != nullptr && trace->size() == seq.events.size(), "ddp objective needs a full trace");

    std::vector<double> mu(static_cast<size_t>(K));
    for (int v = 0; v < K; ++v) mu[static_cast<size_t>(v)] = background_rate(model.background, v, f);

    auto event_w = [&](int j) { return ddp ? trace->factors[static_cast<size_t>(j)] : 1.0; };
    auto ev = [&](int i) -> const Event& { return seq.events[static_cast<size_t>(i)]; };

    // lam(i, v): left-limit intensity of type v at event i.
    Matrix lam(std::max(n, 1), K);
    std::vector<double> lam_tot(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int v = 0; v < K; ++v) lam(i, v) = mu[static_cast<size_t>(v)];
        if (excite) {
            for (int j = 0; j < i; ++j) {
                const int u = ev(j).type_idx;
                const double dt = ev(i).t - ev(j).t;
                const double w = event_w(j);
                for (int v = 0; v < K; ++v) lam(i, v) += mp.a(u, v) * mp.beta(u, v) * std::exp(-mp.beta(u, v) * dt) * w;
            }
        }
        for (int v = 0; v < K; ++v) lam_tot[static_cast<size_t>(i)] += lam(i, v);
    }

    double ll = 0.0;
    for (int i = 0; i < n; ++i) ll += std::log(lam(i, ev(i).type_idx));
    for (int v = 0; v < K; ++v) ll -= mu[static_cast<size_t>(v)] * T;
    if (excite) {
        for (int j = 0; j < n; ++j) {
            const int u = ev(j).type_idx;
            const double w = event_w(j);
            const double dT = T - ev(j).t;
            for (int v = 0; v < K; ++v) ll -= mp.a(u, v) * w * (1.0 - std::exp(-mp.beta(u, v) * dT));
        }
    }

    const int m_pred = n - 1;
    double pl = 0.0;
    if (n >= 2) {
        for (int i = 1; i < n; ++i)
            pl += -std::log(lam(i, ev(i).type_idx) / lam_tot[static_cast<size_t>(i)]);
        pl /= static_cast<double>(m_pred);
    }
    const double value = ll - eta * pl;
    if (grad_out == nullptr) return value;

    std::vector<double> q_pos(static_cast<size_t>(n), 0.0);  // coefficient at v = v_i
    std::vector<double> q_neg(static_cast<size_t>(n), 0.0);  // coefficient at every v
    for (int i = 0; i < n; ++i) {
        double c = 1.0;
        if (n >= 2 && i >= 1) {
            c += eta / static_cast<double>(m_pred);
            q_neg[static_cast<size_t>(i)] = -(eta / static_cast<double>(m_pred)) / lam_tot[static_cast<size_t>(i)];
        }
        q_pos[static_cast<size_t>(i)] = c / lam(i, ev(i).type_idx);
    }

    const Layout lay = layout_of(model);
    std::vector<double>& g = *grad_out;
    if (g.size() != lay.total) g.assign(lay.total, 0.0);

    // Background: dS/dmu_v = sum_i q_{i,v} - T, chained through softplus.
    for (int v = 0; v < K; ++v) {
        double qsum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (ev(i).type_idx == v) qsum += q_pos[static_cast<size_t>(i)];
            qsum += q_neg[static_cast<size_t>(i)];
        }
        const double s = dot(model.background.theta.row(v), f) + model.background.bias[static_cast<size_t>(v)];
        const double chain = (qsum - T) * sigmoid(s);
        g[lay.bias + static_cast<size_t>(v)] += chain;
        for (size_t k = 0; k < f.size(); ++k)
            g[lay.theta + static_cast<size_t>(v) * f.size() + k] += chain * f[k];
    }

    if (!excite) return value;

    Matrix ga(K, K);  // dS / d alpha (mapped)
    Matrix gb(K, K);  // dS / d beta (mapped)
    std::vector<double> dw(static_cast<size_t>(n), 0.0);

    for (int i = 0; i < n; ++i) {
        const int vi = ev(i).type_idx;
        const double qp = q_pos[static_cast<size_t>(i)];
        const double qn = q_neg[static_cast<size_t>(i)];
        for (int j = 0; j < i; ++j) {
            const int u = ev(j).type_idx;
            const double dt = ev(i).t - ev(j).t;
            const double w = event_w(j);
            {
                const double beta = mp.beta(u, vi);
                const double decay = std::exp(-beta * dt);
                const double gam = beta * decay;
                ga(u, vi) += qp * gam * w;
                gb(u, vi) += qp * mp.a(u, vi) * w * decay * (1.0 - beta * dt);
                dw[static_cast<size_t>(j)] += qp * mp.a(u, vi) * gam;
            }
            if (qn != 0.0) {
                for (int v = 0; v < K; ++v) {
                    const double beta = mp.beta(u, v);
                    const double decay = std::exp(-beta * dt);
                    const double gam = beta * decay;
                    ga(u, v) += qn * gam * w;
                    gb(u, v) += qn * mp.a(u, v) * w * decay * (1.0 - beta * dt);
                    dw[static_cast<size_t>(j)] += qn * mp.a(u, v) * gam;
                }
            }
        }
    }

    // Survival term over [t_j, T] for every source event.
    for (int j = 0; j < n; ++j) {
        const int u = ev(j).type_idx;
        const double w = event_w(j);
        const double dT = T - ev(j).t;
        for (int v = 0; v < K; ++v) {
            const double beta = mp.beta(u, v);
            const double decay = std::exp(-beta * dT);
            ga(u, v) -= w * (1.0 - decay);
            gb(u, v) -= mp.a(u, v) * w * dT * decay;
            dw[static_cast<size_t>(j)] -= mp.a(u, v) * (1.0 - decay);
        }
    }

    // d alpha / d raw = sigmoid(raw); same for beta (the floor is additive).
    for (int u = 0; u < K; ++u)
        for (int v = 0; v < K; ++v) {
            const size_t idx = static_cast<size_t>(u) * static_cast<size_t>(K) + static_cast<size_t>(v);
            g[lay.raw_alpha + idx] += ga(u, v) * sigmoid(model.excitation.raw(u, v));
            g[lay.raw_beta + idx] += gb(u, v) * sigmoid(model.kernel.raw(u, v));
        }

    if (ddp && n > 0) {
        NeuralGrads ng = influence_backward(model.neural, seq, *trace, dw);
        auto add = [&](size_t at, const std::vector<double>& v) {
            for (size_t k = 0; k < v.size(); ++k) g[at + k] += v[k];
        };
        add(lay.embedding, ng.embedding.data);
        add(lay.wx, ng.wx.data);
        add(lay.wh, ng.wh.data);
        add(lay.gate_bias, ng.b);
        add(lay.readout_w, ng.readout_w);
        g[lay.readout_b] += ng.readout_b;
    }
    return value;
}

}  // namespace

double sequence_objective(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace, double eta,
                          std::vector<double>* grad_out) {
    return seq_objective_impl(model, map_pairwise(model), seq, trace, eta, grad_out);
}

double objective(const ModelParams& model, const Dataset& data, const TrainConfig& config) {
    config.validate();
    require(!data.sequences.empty(), "objective: empty dataset");
    const MappedPair mp = map_pairwise(model);
    auto vals = parallel_map<double>(data.sequences.size(), config.threads, [&](size_t i) {
        const auto& seq = data.sequences[i];
        const InfluenceTrace trace = make_trace(model, seq);
        return seq_objective_impl(model, mp, seq, model.is_ddp() ? &trace : nullptr, config.eta, nullptr);
    });
    double total = std::accumulate(vals.begin(), vals.end(), 0.0);
    return total / static_cast<double>(data.sequences.size()) - config.l1_weight * l1_alpha_sum(model);
}

namespace {

// Mean objective gradient over the given sequence indices, including the L1
// term. Per-sequence work runs in parallel; the reduction is ordered.
std::vector<double> batch_gradient(const ModelParams& model, const Dataset& data, std::span<const size_t> indices,
                                   const TrainConfig& config, double* obj_out) {
    const MappedPair mp = map_pairwise(model);
    const Layout lay = layout_of(model);
    struct Piece {
        double value = 0.0;
        std::vector<double> grad;
    };
    auto pieces = parallel_map<Piece>(indices.size(), config.threads, [&](size_t k) {
        Piece p;
        p.grad.assign(lay.total, 0.0);
        const auto& seq = data.sequences[indices[k]];
        const InfluenceTrace trace = make_trace(model, seq);
        p.value = seq_objective_impl(model, mp, seq, model.is_ddp() ? &trace : nullptr, config.eta, &p.grad);
        return p;
    });
    std::vector<double> g(lay.total, 0.0);
    double value = 0.0;
    for (const auto& p : pieces) {
        value += p.value;
        for (size_t k = 0; k < g.size(); ++k) g[k] += p.grad[k];
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (auto& x : g) x *= inv;
    value *= inv;
    if (config.l1_weight > 0.0 && model.has_excitation()) {
        const auto& raw = model.excitation.raw.data;
        for (size_t k = 0; k < raw.size(); ++k) g[lay.raw_alpha + k] -= config.l1_weight * sigmoid(raw[k]);
        value -= config.l1_weight * l1_alpha_sum(model);
    }
    if (obj_out) *obj_out = value;
    return g;
}

}  // namespace

std::vector<double> gradient(const ModelParams& model, const Dataset& data, const TrainConfig& config) {
    config.validate();
    require(!data.sequences.empty(), "gradient: empty dataset");
    std::vector<size_t> all(data.sequences.size());
    std::iota(all.begin(), all.end(), size_t{0});
    return batch_gradient(model, data, all, config, nullptr);
}

ModelParams default_init_model(ModelKind kind, const Dataset& data, int D, int H, uint64_t seed) {
    require(!data.sequences.empty(), "default_init_model: empty dataset");
    const int K = data.catalog.size();
    double total_time = 0.0;
    std::vector<double> counts(static_cast<size_t>(K), 0.0);
    double gap_sum = 0.0;
    long gap_n = 0;
    for (const auto& seq : data.sequences) {
        total_time += seq.horizon_T;
        double prev = 0.0;
        for (const auto& e : seq.events) {
            counts[static_cast<size_t>(e.type_idx)] += 1.0;
            if (e.t > prev) {
                gap_sum += e.t - prev;
                ++gap_n;
            }
            prev = e.t;
        }
    }
    require(total_time > 0.0, "default_init_model: zero total observation time");
    const double mean_gap = gap_n > 0 ? gap_sum / static_cast<double>(gap_n) : 1.0;
    const double beta0 = std::clamp(1.0 / mean_gap, 2.0 * kBetaFloor, 10.0);
    const double alpha0 = std::min(0.1, 0.5 / static_cast<double>(K));

    ModelParams m = make_model(kind, data.catalog, data.context_dim, 1.0, std::max(alpha0, 1e-3),
                               std::max(beta0, 2.0 * kBetaFloor), D, H, seed);
    // Start each background at roughly half the empirical rate, leaving room
    // for the triggering term to explain the rest.
    for (int v = 0; v < K; ++v) {
        const double rate = std::max(1e-6, 0.5 * counts[static_cast<size_t>(v)] / total_time);
        m.background.bias[static_cast<size_t>(v)] = softplus_inv(rate);
    }
    return m;
}

FitReport fit(const Dataset& data, const TrainConfig& config, const ModelParams& init_model) {
    config.validate();
    require(!data.sequences.empty(), "fit: empty dataset");
    const auto t_start = std::chrono::steady_clock::now();

    const size_t N = data.sequences.size();
    std::vector<size_t> perm(N);
    std::iota(perm.begin(), perm.end(), size_t{0});
    Rng split_rng(mix_seed(config.seed, 0x73706c6974ULL));  // "split"
    for (size_t i = N; i > 1; --i) std::swap(perm[i - 1], perm[split_rng.uniform_int(static_cast<int>(i))]);

    size_t val_n = static_cast<size_t>(std::lround(config.validation_fraction * static_cast<double>(N)));
    if (N >= 2) val_n = std::clamp<size_t>(val_n, 1, N - 1);
    std::vector<size_t> val_idx(perm.begin(), perm.begin() + val_n);
    std::vector<size_t> train_idx(perm.begin() + val_n, perm.end());
    if (train_idx.empty()) train_idx = val_idx;
    if (val_idx.empty()) val_idx = train_idx;

    auto split_objective = [&](const ModelParams& m, std::span<const size_t> idx) {
        const MappedPair mp = map_pairwise(m);
        auto vals = parallel_map<double>(idx.size(), config.threads, [&](size_t k) {
            const auto& seq = data.sequences[idx[k]];
            const InfluenceTrace trace = make_trace(m, seq);
            return seq_objective_impl(m, mp, seq, m.is_ddp() ? &trace : nullptr, config.eta, nullptr);
        });
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(idx.size());
        return mean - config.l1_weight * l1_alpha_sum(m);
    };

    ModelParams model = init_model;
    std::vector<double> params = pack_params(model);
    std::vector<double> adam_m(params.size(), 0.0), adam_v(params.size(), 0.0);
    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    FitReport report;
    report.best_params = model;
    double best_val = -std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, 0xe70c0000ULL + static_cast<uint64_t>(epoch)));
        std::vector<size_t> order = train_idx;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(static_cast<int>(i))]);

        for (size_t at = 0; at < order.size(); at += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(order.size(), at + static_cast<size_t>(config.batch_size));
            std::span<const size_t> batch(order.data() + at, end - at);
            const std::vector<double> g = batch_gradient(model, data, batch, config, nullptr);
            ++step;
            const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
            for (size_t k = 0; k < params.size(); ++k) {
                adam_m[k] = b1 * adam_m[k] + (1.0 - b1) * g[k];
                adam_v[k] = b2 * adam_v[k] + (1.0 - b2) * g[k] * g[k];
                params[k] += config.learning_rate * (adam_m[k] / corr1) /
                             (std::sqrt(adam_v[k] / corr2) + adam_eps);
            }
            unpack_params(model, params);
        }

        const double train_obj = split_objective(model, train_idx);
        const double val_obj = split_objective(model, val_idx);
        if (!std::isfinite(train_obj) || !std::isfinite(val_obj))
            fail("fit: objective diverged at epoch " + std::to_string(epoch));
        report.train_obj.push_back(train_obj);
        report.val_obj.push_back(val_obj);
        report.stopped_epoch = epoch;

        if (val_obj > best_val) {
            best_val = val_obj;
            report.best_epoch = epoch;
            report.best_params = model;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace ddp
