#pragma once

#include <vector>

#include "ddp/intensity.hpp"

namespace ddp {

struct TrainConfig {
    double eta = 1.0;        // prediction-loss weight
    double l1_weight = 0.0;  // sparsity penalty on mapped alpha
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    uint64_t seed = 0;
    double validation_fraction = 0.2;
    int early_stop_patience = 10;
    int threads = 1;

    void validate() const;
};

// Log of Eq.-3-style sequence likelihood with right-censoring at horizon_T:
//   sum_i [log lambda_{v_i}(t_i-)] - integral_0^T lambda(tau) dtau.
// Intensities at event times are left limits (an event does not excite itself).
double log_likelihood(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace = nullptr);

// P(next type = v | history, next event at t_next) = lambda_v(t_next)/lambda(t_next).
std::vector<double> next_type_probability(const ModelParams& model, const EventSequence& prefix,
                                          const InfluenceTrace* trace, double t_next);

// Density of the next event time: lambda(t) exp(-int_{t_last}^{t} lambda).
double next_time_density(const ModelParams& model, const EventSequence& prefix, const InfluenceTrace* trace,
                         double t);

// Mean cross entropy of the realized type over events i >= 2, each scored on
// the prefix before it at its realized time. Sequences with < 2 events
// contribute 0.
double prediction_loss(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace = nullptr);

// Training objective (maximized): mean over sequences of
// [log_likelihood - eta * prediction_loss] - l1_weight * sum |alpha_{u,v}|.
double objective(const ModelParams& model, const Dataset& data, const TrainConfig& config);

// --------------------------------------------------------------------------
// Flat parameter vector. Raw (unconstrained) parameters are packed in a fixed
// block order so the optimizer and the finite-difference tests share one view.

std::vector<double> pack_params(const ModelParams& model);
void unpack_params(ModelParams& model, std::span<const double> packed);

struct ParamBlock {
    std::string name;
    size_t offset = 0;
    size_t size = 0;
};
std::vector<ParamBlock> param_blocks(const ModelParams& model);

// Exact analytic gradient of the objective with respect to every raw
// parameter, aligned with pack_params.
std::vector<double> gradient(const ModelParams& model, const Dataset& data, const TrainConfig& config);

// Per-sequence pieces (used by the batch loop; exposed for tests).
// Returns log_likelihood - eta * prediction_loss and, if grad_out != nullptr,
// accumulates its gradient there.
double sequence_objective(const ModelParams& model, const EventSequence& seq, const InfluenceTrace* trace, double eta,
                          std::vector<double>* grad_out);

struct FitReport {
    std::vector<double> train_obj;  // per epoch
    std::vector<double> val_obj;    // per epoch
    ModelParams best_params;        // best-validation snapshot
    int best_epoch = -1;            // 0-based
    int stopped_epoch = -1;         // last epoch run, 0-based
    double wall_seconds = 0.0;
};

// Minibatch Adam ascending the objective, early stopping on the validation
// objective. Deterministic given config.seed.
FitReport fit(const Dataset& data, const TrainConfig& config, const ModelParams& init_model);

// Data-driven starting point: per-type empirical background rates, gap-scale
// kernel rates, small uniform excitation.
ModelParams default_init_model(ModelKind kind, const Dataset& data, int D, int H, uint64_t seed);

}  // namespace ddp
