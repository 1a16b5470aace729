#pragma once

#include <string>

#include "ddp/core.hpp"
#include "ddp/domain.hpp"
#include "ddp/neural.hpp"

namespace ddp {

enum class ModelKind { kPoisson, kHawkes, kCHawkes, kDdp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Positivity is enforced by reparameterization: stored parameters are
// unconstrained reals, mapped through softplus on access. This keeps SGD
// unconstrained while alpha >= 0 and beta > 0 hold everywhere.
constexpr double kBetaFloor = 1e-3;

// Background rate mu_v(f) = softplus(theta_v . f + bias_v).
struct BackgroundParams {
    Matrix theta;              // K x F
    std::vector<double> bias;  // K
};

// Pairwise instantaneous impact alpha_{u,v} = softplus(raw(u,v)).
struct ExcitationMatrix {
    Matrix raw;  // K x K

    double alpha(int u, int v) const { return softplus(raw(u, v)); }
    bool empty() const { return raw.empty(); }
};

// Exponential time-influence kernel, one rate per ordered type pair:
// gamma_{u,v}(dt) = beta exp(-beta dt), beta = softplus(raw) + kBetaFloor.
struct KernelParams {
    Matrix raw;  // K x K

    double beta(int u, int v) const { return softplus(raw(u, v)) + kBetaFloor; }
    bool empty() const { return raw.empty(); }
};

// Full parameter bundle for any model in the family. Poisson carries only the
// background; hawkes/chawkes add excitation + kernel; ddp adds the recurrent
// influence component. Hawkes is context-free (context_dim == 0).
struct ModelParams {
    ModelKind kind = ModelKind::kPoisson;
    DiseaseCatalog catalog;
    int context_dim = 0;  // F
    BackgroundParams background;
    ExcitationMatrix excitation;
    KernelParams kernel;
    NeuralParams neural;

    int K() const { return catalog.size(); }
    bool has_excitation() const { return kind != ModelKind::kPoisson; }
    bool is_ddp() const { return kind == ModelKind::kDdp; }

    // Context slice the background actually sees: hawkes ignores context.
    std::span<const double> context_view(const EventSequence& seq) const;
};

// Builds a model with neutral defaults: mu ~ mu0, alpha ~ alpha0, beta ~ beta0
// (all given in mapped units), theta = 0, neural freshly initialized for ddp.
ModelParams make_model(ModelKind kind, DiseaseCatalog catalog, int context_dim, double mu0, double alpha0,
                       double beta0, int D, int H, uint64_t seed);

// gamma_{u,v}(dt) = beta exp(-beta dt); dt >= 0.
double kernel_eval(double beta_uv, double dt);

// Integral of gamma over [dt0, dt1]: exp(-beta dt0) - exp(-beta dt1).
double kernel_integral(double beta_uv, double dt0, double dt1);

double background_rate(const BackgroundParams& bg, int v, std::span<const double> f);

// Conditional intensity lambda_v(t) given the events of seq before t.
// Events at exactly t are excluded, so this is the left limit at event times.
// For ddp a trace covering the sequence must be supplied.
double intensity(const ModelParams& model, int v, double t, const EventSequence& seq,
                 const InfluenceTrace* trace = nullptr);

// Same sum but inclusive of events at exactly t: the right limit lambda_v(t+).
double intensity_right(const ModelParams& model, int v, double t, const EventSequence& seq,
                       const InfluenceTrace* trace = nullptr);

double total_intensity(const ModelParams& model, double t, const EventSequence& seq,
                       const InfluenceTrace* trace = nullptr);

double total_intensity_right(const ModelParams& model, double t, const EventSequence& seq,
                             const InfluenceTrace* trace = nullptr);

// Exact integrated intensity of type v over [t0, t1]. No event of seq may lie
// strictly inside (t0, t1); callers split at event times.
double compensator(const ModelParams& model, int v, double t0, double t1, const EventSequence& seq,
                   const InfluenceTrace* trace = nullptr);

// Sum over types, same precondition.
double total_compensator(const ModelParams& model, double t0, double t1, const EventSequence& seq,
                         const InfluenceTrace* trace = nullptr);

// Integrated total intensity over [0, t], splitting at event times.
double cumulative_compensator(const ModelParams& model, double t, const EventSequence& seq,
                              const InfluenceTrace* trace = nullptr);

// Influence trace when the model needs one (ddp), empty otherwise.
InfluenceTrace make_trace(const ModelParams& model, const EventSequence& seq);

}  // namespace ddp
