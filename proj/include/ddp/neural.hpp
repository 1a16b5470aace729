#pragma once

#include <utility>
#include <vector>

#include "ddp/core.hpp"
#include "ddp/domain.hpp"

namespace ddp {

// Parameters of the recurrent influence-factor component: a type embedding
// table, one LSTM layer over [embedding, log1p(time gap)] inputs, and a
// sigmoid readout that maps the hidden state to a per-event factor in (0,1).
//
// Gate weights are stacked in the row order [input, forget, output, candidate],
// i.e. rows [0,H) of wx/wh/b belong to the input gate, [H,2H) to the forget
// gate, and so on.
struct NeuralParams {
    int K = 0;  // type count
    int D = 0;  // embedding width
    int H = 0;  // hidden width

    Matrix embedding;               // K x D
    Matrix wx;                      // 4H x (D+1)
    Matrix wh;                      // 4H x H
    std::vector<double> b;          // 4H
    std::vector<double> readout_w;  // H
    double readout_b = 0.0;

    bool empty() const { return K == 0; }

    // Gate weights uniform in [-1/sqrt(H), 1/sqrt(H)], forget bias +1,
    // embedding N(0, 0.1^2), readout zero so training starts at w_i = 0.5.
    static NeuralParams init(int K, int D, int H, uint64_t seed);
};

struct RecurrentState {
    std::vector<double> hidden;  // H
    std::vector<double> cell;    // H

    static RecurrentState zeros(int H) { return {std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)}; }
};

// Everything the backward pass needs from one forward step.
struct StepCache {
    std::vector<double> x;       // D+1 input
    std::vector<double> gi, gf, go, gg;  // gate activations
    std::vector<double> c, tanh_c;
    std::vector<double> h_prev, c_prev;
    int type_idx = 0;
};

// Per-event influence factors w_i plus the cached recurrent states that make
// exact backpropagation through time possible.
struct InfluenceTrace {
    std::vector<double> factors;                    // w_i in (0,1), one per event
    std::vector<std::vector<double>> hidden_states; // h_i per event
    std::vector<StepCache> cache;
    RecurrentState state;                           // state after the last event
    double last_t = 0.0;                            // time of the last event folded in

    size_t size() const { return factors.size(); }
};

// Gradient bundle mirroring NeuralParams.
struct NeuralGrads {
    Matrix embedding, wx, wh;
    std::vector<double> b, readout_w;
    double readout_b = 0.0;

    static NeuralGrads zeros(const NeuralParams& p);
};

// Row type_idx of the embedding table.
std::vector<double> embed(const NeuralParams& params, int type_idx);

// One LSTM step: returns (output hidden vector, new state).
std::pair<std::vector<double>, RecurrentState> recurrent_step(const NeuralParams& params,
                                                              std::span<const double> event_input,
                                                              const RecurrentState& state);

// Runs the recurrence over the whole sequence. Input for event i is
// [embed(v_i), log1p(t_i - t_{i-1})] with t_0 = 0. Empty sequence -> empty trace.
InfluenceTrace influence_forward(const NeuralParams& params, const EventSequence& seq);

// Appends one event to an existing trace (used by the simulator, which grows
// sequences one accepted event at a time).
void influence_extend(const NeuralParams& params, InfluenceTrace& trace, int type_idx, double t);

// Exact gradients of sum_i upstream[i] * w_i with respect to every parameter,
// by full (untruncated) backpropagation through time.
NeuralGrads influence_backward(const NeuralParams& params, const EventSequence& seq, const InfluenceTrace& trace,
                               std::span<const double> upstream);

}  // namespace ddp
