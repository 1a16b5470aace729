#include "ddp/neural.hpp"

#include <cmath>

namespace ddp {

NeuralParams NeuralParams::init(int K, int D, int H, uint64_t seed) {
    require(K >= 1 && D >= 1 && H >= 1, "NeuralParams::init: K, D, H must be >= 1");
    NeuralParams p;
    p.K = K;
    p.D = D;
    p.H = H;
    p.embedding = Matrix(K, D);
    p.wx = Matrix(4 * H, D + 1);
    p.wh = Matrix(4 * H, H);
    p.b.assign(static_cast<size_t>(4 * H), 0.0);
    p.readout_w.assign(static_cast<size_t>(H), 0.0);
    p.readout_b = 0.0;

    Rng rng(mix_seed(seed, 0x6e657572616cULL));  // "neural"
    const double bound = 1.0 / std::sqrt(static_cast<double>(H));
    for (auto& v : p.wx.data) v = rng.uniform(-bound, bound);
    for (auto& v : p.wh.data) v = rng.uniform(-bound, bound);
    for (auto& v : p.embedding.data) v = rng.normal(0.0, 0.1);
    for (int j = H; j < 2 * H; ++j) p.b[static_cast<size_t>(j)] = 1.0;  // forget gate bias
    return p;
}

NeuralGrads NeuralGrads::zeros(const NeuralParams& p) {
    NeuralGrads g;
    g.embedding = Matrix(p.K, p.D);
    g.wx = Matrix(4 * p.H, p.D + 1);
    g.wh = Matrix(4 * p.H, p.H);
    g.b.assign(static_cast<size_t>(4 * p.H), 0.0);
    g.readout_w.assign(static_cast<size_t>(p.H), 0.0);
    g.readout_b = 0.0;
    return g;
}

std::vector<double> embed(const NeuralParams& params, int type_idx) {
    require(type_idx >= 0 && type_idx < params.K, "embed: type index out of range");
    auto row = params.embedding.row(type_idx);
    return {row.begin(), row.end()};
}

namespace {

StepCache lstm_step(const NeuralParams& p, std::span<const double> x, const RecurrentState& state,
                    RecurrentState& next) {
    const int H = p.H;
    StepCache cache;
    cache.x.assign(x.begin(), x.end());
    cache.h_prev = state.hidden;
    cache.c_prev = state.cell;
    cache.gi.resize(H);
    cache.gf.resize(H);
    cache.go.resize(H);
    cache.gg.resize(H);
    cache.c.resize(H);
    cache.tanh_c.resize(H);

    next.hidden.resize(H);
    next.cell.resize(H);
    for (int j = 0; j < H; ++j) {
        const double zi = dot(p.wx.row(j), x) + dot(p.wh.row(j), state.hidden) + p.b[j];
        const double zf = dot(p.wx.row(H + j), x) + dot(p.wh.row(H + j), state.hidden) + p.b[H + j];
        const double zo = dot(p.wx.row(2 * H + j), x) + dot(p.wh.row(2 * H + j), state.hidden) + p.b[2 * H + j];
        const double zg = dot(p.wx.row(3 * H + j), x) + dot(p.wh.row(3 * H + j), state.hidden) + p.b[3 * H + j];
        cache.gi[j] = sigmoid(zi);
        cache.gf[j] = sigmoid(zf);
        cache.go[j] = sigmoid(zo);
        cache.gg[j] = std::tanh(zg);
        cache.c[j] = cache.gf[j] * state.cell[j] + cache.gi[j] * cache.gg[j];
        cache.tanh_c[j] = std::tanh(cache.c[j]);
        next.cell[j] = cache.c[j];
        next.hidden[j] = cache.go[j] * cache.tanh_c[j];
    }
    return cache;
}

}  // namespace

std::pair<std::vector<double>, RecurrentState> recurrent_step(const NeuralParams& params,
                                                              std::span<const double> event_input,
                                                              const RecurrentState& state) {
    require(static_cast<int>(event_input.size()) == params.D + 1, "recurrent_step: input size must be D+1");
    for (double v : event_input) require(std::isfinite(v), "recurrent_step: non-finite input");
    RecurrentState next;
    lstm_step(params, event_input, state, next);
    return {next.hidden, next};
}

void influence_extend(const NeuralParams& params, InfluenceTrace& trace, int type_idx, double t) {
    if (trace.factors.empty() && trace.state.hidden.empty()) trace.state = RecurrentState::zeros(params.H);
    const double dt = t - trace.last_t;
    require(dt >= 0.0, "influence_extend: time must not go backwards");

    std::vector<double> x = embed(params, type_idx);
    x.push_back(std::log1p(dt));

    RecurrentState next;
    StepCache cache = lstm_step(params, x, trace.state, next);
    cache.type_idx = type_idx;

    const double w = sigmoid(dot(std::span<const double>(params.readout_w), std::span<const double>(next.hidden)) +
                             params.readout_b);
    trace.factors.push_back(w);
    trace.hidden_states.push_back(next.hidden);
    trace.cache.push_back(std::move(cache));
    trace.state = std::move(next);
    trace.last_t = t;
}

InfluenceTrace influence_forward(const NeuralParams& params, const EventSequence& seq) {
    InfluenceTrace trace;
    trace.state = RecurrentState::zeros(params.H);
    for (const auto& e : seq.events) influence_extend(params, trace, e.type_idx, e.t);
    return trace;
}

NeuralGrads influence_backward(const NeuralParams& params, const EventSequence& seq, const InfluenceTrace& trace,
                               std::span<const double> upstream) {
    const size_t n = seq.events.size();
    require(trace.size() == n && trace.cache.size() == n, "influence_backward: trace does not cover the sequence");
    require(upstream.size() == n, "influence_backward: upstream gradient count mismatch");

    const int H = params.H;
    const int D = params.D;
    NeuralGrads g = NeuralGrads::zeros(params);
    if (n == 0) return g;

    std::vector<double> dh(H, 0.0);  // carried dL/dh
    std::vector<double> dc(H, 0.0);  // carried dL/dc
    std::vector<double> dz(4 * H, 0.0);

    for (size_t step = n; step-- > 0;) {
        const StepCache& s = trace.cache[step];
        const double w = trace.factors[step];
        const auto& h = trace.hidden_states[step];

        // Readout: w = sigmoid(h . W + b)
        const double du = upstream[step] * w * (1.0 - w);
        g.readout_b += du;
        for (int j = 0; j < H; ++j) {
            g.readout_w[j] += du * h[j];
            dh[j] += du * params.readout_w[j];
        }

        for (int j = 0; j < H; ++j) {
            const double d_out = dh[j] * s.tanh_c[j];
            dc[j] += dh[j] * s.go[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            const double d_in = dc[j] * s.gg[j];
            const double d_forget = dc[j] * s.c_prev[j];
            const double d_cand = dc[j] * s.gi[j];

            dz[j] = d_in * s.gi[j] * (1.0 - s.gi[j]);
            dz[H + j] = d_forget * s.gf[j] * (1.0 - s.gf[j]);
            dz[2 * H + j] = d_out * s.go[j] * (1.0 - s.go[j]);
            dz[3 * H + j] = d_cand * (1.0 - s.gg[j] * s.gg[j]);

            dc[j] *= s.gf[j];  // becomes the carried dc for step-1
        }

        for (int r = 0; r < 4 * H; ++r) {
            const double d = dz[r];
            if (d == 0.0) continue;
            g.b[r] += d;
            auto gx = g.wx.row(r);
            for (int c = 0; c <= D; ++c) gx[c] += d * s.x[c];
            auto gh = g.wh.row(r);
            for (int c = 0; c < H; ++c) gh[c] += d * s.h_prev[c];
        }

        // Input path: first D components of x are the embedding row.
        auto ge = g.embedding.row(s.type_idx);
        for (int c = 0; c < D; ++c) {
            double dx = 0.0;
            for (int r = 0; r < 4 * H; ++r) dx += params.wx(r, c) * dz[r];
            ge[c] += dx;
        }

        // Carried dh for the previous step.
        for (int j = 0; j < H; ++j) {
            double v = 0.0;
            for (int r = 0; r < 4 * H; ++r) v += params.wh(r, j) * dz[r];
            dh[j] = v;
        }
    }
    return g;
}

}  // namespace ddp
