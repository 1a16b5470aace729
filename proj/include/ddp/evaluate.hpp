#pragma once

#include "ddp/inference.hpp"

namespace ddp {

// One next-event prediction task: the model scores every type at the realized
// time of the next event, and the realized type is the label.
struct PredictionInstance {
    std::string patient_id;
    int prefix_len = 0;
    double t_query = 0.0;
    int true_type = 0;
    std::vector<double> scores;  // K probabilities, sum to 1
};

// One instance per event position i >= 1 per patient; patients with fewer
// than two events are skipped.
std::vector<PredictionInstance> build_instances(const ModelParams& model, const Dataset& data, int threads = 1);

// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(tie), exact via average ranks.
// Needs at least one positive and one negative label.
double auc(std::span<const double> scores, std::span<const char> labels);

struct AucEntry {
    std::string code;
    double auc = 0.0;
    double ci_halfwidth = 0.0;
    long n_pos = 0;
    long n_neg = 0;
};

// Point AUC for one target type (label = true next type equals target) plus a
// percentile-bootstrap 95% CI resampled over patients, which respects
// within-patient correlation.
AucEntry auc_report(const std::vector<PredictionInstance>& instances, int target_type, const std::string& code,
                    int n_boot = 1000, uint64_t seed = 0);

struct TransferReport {
    std::vector<AucEntry> entries;
    long dropped_events = 0;  // events whose code is not in the training catalog
};

// Scores an out-of-domain dataset with a fitted model, no parameter updates.
// Codes absent from the training catalog are dropped and counted.
TransferReport transfer_eval(const ModelParams& model, const std::vector<RawSequence>& ood_raw,
                             const std::vector<int>& target_types, int n_boot = 1000, uint64_t seed = 0,
                             int threads = 1);

}  // namespace ddp
