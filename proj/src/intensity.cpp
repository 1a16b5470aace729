#include "ddp/intensity.hpp"

#include <cmath>

namespace ddp {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kPoisson: return "poisson";
        case ModelKind::kHawkes: return "hawkes";
        case ModelKind::kCHawkes: return "chawkes";
        case ModelKind::kDdp: return "ddp";
    }
    fail("to_string: bad model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "poisson") return ModelKind::kPoisson;
    if (s == "hawkes") return ModelKind::kHawkes;
    if (s == "chawkes") return ModelKind::kCHawkes;
    if (s == "ddp") return ModelKind::kDdp;
    fail("unknown model kind '" + s + "'");
}

std::span<const double> ModelParams::context_view(const EventSequence& seq) const {
    if (kind == ModelKind::kHawkes || context_dim == 0) return {};
    require(static_cast<int>(seq.context.size()) == context_dim,
            "context length mismatch: sequence has " + std::to_string(seq.context.size()) + ", model expects " +
                std::to_string(context_dim));
    return {seq.context.data(), seq.context.size()};
}

ModelParams make_model(ModelKind kind, DiseaseCatalog catalog, int context_dim, double mu0, double alpha0,
                       double beta0, int D, int H, uint64_t seed) {
    require(catalog.size() >= 1, "make_model: empty catalog");
    require(mu0 > 0.0, "make_model: mu0 must be positive");
    ModelParams m;
    m.kind = kind;
    m.catalog = std::move(catalog);
    m.context_dim = kind == ModelKind::kHawkes ? 0 : context_dim;
    const int K = m.K();
    m.background.theta = Matrix(K, m.context_dim);
    m.background.bias.assign(static_cast<size_t>(K), softplus_inv(mu0));
    if (kind != ModelKind::kPoisson) {
        require(alpha0 > 0.0 && beta0 > kBetaFloor, "make_model: alpha0/beta0 out of range");
        m.excitation.raw = Matrix(K, K, softplus_inv(alpha0));
        m.kernel.raw = Matrix(K, K, softplus_inv(beta0 - kBetaFloor));
    }
    if (kind == ModelKind::kDdp) m.neural = NeuralParams::init(K, D, H, seed);
    return m;
}

double kernel_eval(double beta_uv, double dt) {
    require(dt >= 0.0, "kernel_eval: dt must be >= 0");
    require(beta_uv > 0.0, "kernel_eval: beta must be positive");
    return beta_uv * std::exp(-beta_uv * dt);
}

double kernel_integral(double beta_uv, double dt0, double dt1) {
    require(0.0 <= dt0 && dt0 <= dt1, "kernel_integral: need 0 <= dt0 <= dt1");
    require(beta_uv > 0.0, "kernel_integral: beta must be positive");
    return std::exp(-beta_uv * dt0) - std::exp(-beta_uv * dt1);
}

double background_rate(const BackgroundParams& bg, int v, std::span<const double> f) {
    require(static_cast<int>(f.size()) == bg.theta.cols,
            "background_rate: context length " + std::to_string(f.size()) + " != F=" + std::to_string(bg.theta.cols));
    return softplus(dot(bg.theta.row(v), f) + bg.bias[static_cast<size_t>(v)]);
}

namespace {

// Shared triggering sum; `inclusive` selects t_i <= t (right limit) vs t_i < t.
double triggering_sum(const ModelParams& model, int v, double t, const EventSequence& seq,
                      const InfluenceTrace* trace, bool inclusive) {
    if (!model.has_excitation()) return 0.0;
    if (model.is_ddp()) {
        require(trace != nullptr && trace->size() >= seq.events.size(),
                "intensity: ddp model needs an influence trace covering the history");
    }
    double sum = 0.0;
    for (size_t i = 0; i < seq.events.size(); ++i) {
        const auto& e = seq.events[i];
        if (inclusive ? e.t > t : e.t >= t) break;
        const double w = model.is_ddp() ? trace->factors[i] : 1.0;
        const int u = e.type_idx;
        sum += model.excitation.alpha(u, v) * kernel_eval(model.kernel.beta(u, v), t - e.t) * w;
    }
    return sum;
}

}  // namespace

double intensity(const ModelParams& model, int v, double t, const EventSequence& seq, const InfluenceTrace* trace) {
    require(v >= 0 && v < model.K(), "intensity: type index out of range");
    return background_rate(model.background, v, model.context_view(seq)) +
           triggering_sum(model, v, t, seq, trace, /*inclusive=*/false);
}

double intensity_right(const ModelParams& model, int v, double t, const EventSequence& seq,
                       const InfluenceTrace* trace) {
    require(v >= 0 && v < model.K(), "intensity: type index out of range");
    return background_rate(model.background, v, model.context_view(seq)) +
           triggering_sum(model, v, t, seq, trace, /*inclusive=*/true);
}

double total_intensity(const ModelParams& model, double t, const EventSequence& seq, const InfluenceTrace* trace) {
    double sum = 0.0;
    for (int v = 0; v < model.K(); ++v) sum += intensity(model, v, t, seq, trace);
    return sum;
}

double total_intensity_right(const ModelParams& model, double t, const EventSequence& seq,
                             const InfluenceTrace* trace) {
    double sum = 0.0;
    for (int v = 0; v < model.K(); ++v) sum += intensity_right(model, v, t, seq, trace);
    return sum;
}

double compensator(const ModelParams& model, int v, double t0, double t1, const EventSequence& seq,
                   const InfluenceTrace* trace) {
    require(t0 <= t1, "compensator: need t0 <= t1");
    for (const auto& e : seq.events)
        require(!(e.t > t0 && e.t < t1), "compensator: event strictly inside the interval; split at event times");
    if (model.is_ddp()) {
        require(trace != nullptr && trace->size() >= seq.events.size(),
                "compensator: ddp model needs an influence trace covering the history");
    }

    double mass = background_rate(model.background, v, model.context_view(seq)) * (t1 - t0);
    if (model.has_excitation()) {
        for (size_t i = 0; i < seq.events.size(); ++i) {
            const auto& e = seq.events[i];
            if (e.t > t0) break;
            const double w = model.is_ddp() ? trace->factors[i] : 1.0;
            const int u = e.type_idx;
            mass += model.excitation.alpha(u, v) * w *
                    kernel_integral(model.kernel.beta(u, v), t0 - e.t, t1 - e.t);
        }
    }
    return mass;
}

double total_compensator(const ModelParams& model, double t0, double t1, const EventSequence& seq,
                         const InfluenceTrace* trace) {
    double sum = 0.0;
    for (int v = 0; v < model.K(); ++v) sum += compensator(model, v, t0, t1, seq, trace);
    return sum;
}

double cumulative_compensator(const ModelParams& model, double t, const EventSequence& seq,
                              const InfluenceTrace* trace) {
    double mass = 0.0;
    double prev = 0.0;
    for (const auto& e : seq.events) {
        if (e.t >= t) break;
        mass += total_compensator(model, prev, e.t, seq, trace);
        prev = e.t;
    }
    mass += total_compensator(model, prev, t, seq, trace);
    return mass;
}

InfluenceTrace make_trace(const ModelParams& model, const EventSequence& seq) {
    if (model.is_ddp()) return influence_forward(model.neural, seq);
    return {};
}

}  // namespace ddp
