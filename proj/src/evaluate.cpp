#include "ddp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ddp {

std::vector<PredictionInstance> build_instances(const ModelParams& model, const Dataset& data, int threads) {
    auto per_patient = parallel_map<std::vector<PredictionInstance>>(
        data.sequences.size(), threads, [&](size_t s) {
            const auto& seq = data.sequences[s];
            std::vector<PredictionInstance> out;
            const int n = seq.n_events();
            if (n < 2) return out;
            const InfluenceTrace trace = make_trace(model, seq);
            const InfluenceTrace* tp = model.is_ddp() ? &trace : nullptr;
            for (int i = 1; i < n; ++i) {
                const auto& next = seq.events[static_cast<size_t>(i)];
                PredictionInstance inst;
                inst.patient_id = seq.patient_id;
                inst.prefix_len = i;
                inst.t_query = next.t;
                inst.true_type = next.type_idx;
                // The intensity sum over t_j < t_query sees exactly the prefix.
                inst.scores.resize(static_cast<size_t>(model.K()));
                double total = 0.0;
                for (int v = 0; v < model.K(); ++v) {
                    inst.scores[static_cast<size_t>(v)] = intensity(model, v, next.t, seq, tp);
                    total += inst.scores[static_cast<size_t>(v)];
                }
                for (auto& x : inst.scores) x /= total;
                out.push_back(std::move(inst));
            }
            return out;
        });
    std::vector<PredictionInstance> instances;
    for (auto& v : per_patient)
        for (auto& inst : v) instances.push_back(std::move(inst));
    return instances;
}

double auc(std::span<const double> scores, std::span<const char> labels) {
    require(scores.size() == labels.size(), "auc: scores/labels size mismatch");
    long n_pos = 0, n_neg = 0;
    for (char l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, "auc: undefined AUC, need both classes");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Rank sum of positives with average ranks over ties.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u_stat = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u_stat / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AucEntry auc_report(const std::vector<PredictionInstance>& instances, int target_type, const std::string& code,
                    int n_boot, uint64_t seed) {
    AucEntry entry;
    entry.code = code;

    // Group instances by patient so the bootstrap resamples whole patients.
    std::map<std::string, std::vector<size_t>> by_patient;
    std::vector<double> scores;
    std::vector<char> labels;
    scores.reserve(instances.size());
    labels.reserve(instances.size());
    for (size_t k = 0; k < instances.size(); ++k) {
        const auto& inst = instances[k];
        by_patient[inst.patient_id].push_back(k);
        scores.push_back(inst.scores[static_cast<size_t>(target_type)]);
        labels.push_back(inst.true_type == target_type ? 1 : 0);
    }
    for (char l : labels) (l ? entry.n_pos : entry.n_neg)++;
    require(entry.n_pos > 0 && entry.n_neg > 0,
            "auc_report: target '" + code + "' has a single class, AUC undefined");
    entry.auc = auc(scores, labels);

    std::vector<const std::vector<size_t>*> patients;
    patients.reserve(by_patient.size());
    for (const auto& [_, idx] : by_patient) patients.push_back(&idx);

    Rng rng(mix_seed(seed, 0x626f6f74ULL));  // "boot"
    std::vector<double> boot_aucs;
    boot_aucs.reserve(static_cast<size_t>(n_boot));
    std::vector<double> bs;
    std::vector<char> bl;
    for (int b = 0; b < n_boot; ++b) {
        bs.clear();
        bl.clear();
        for (size_t p = 0; p < patients.size(); ++p) {
            const auto& idx = *patients[static_cast<size_t>(rng.uniform_int(static_cast<int>(patients.size())))];
            for (size_t k : idx) {
                bs.push_back(scores[k]);
                bl.push_back(labels[k]);
            }
        }
        bool has_pos = false, has_neg = false;
        for (char l : bl) (l ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg) continue;  // degenerate replicate
        boot_aucs.push_back(auc(bs, bl));
    }
    if (boot_aucs.size() >= 10) {
        std::sort(boot_aucs.begin(), boot_aucs.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(boot_aucs.size() - 1);
            const size_t lo = static_cast<size_t>(pos);
            const size_t hi = std::min(lo + 1, boot_aucs.size() - 1);
            const double frac = pos - static_cast<double>(lo);
            return boot_aucs[lo] * (1.0 - frac) + boot_aucs[hi] * frac;
        };
        entry.ci_halfwidth = 0.5 * (quantile(0.975) - quantile(0.025));
    }
    return entry;
}

TransferReport transfer_eval(const ModelParams& model, const std::vector<RawSequence>& ood_raw,
                             const std::vector<int>& target_types, int n_boot, uint64_t seed, int threads) {
    TransferReport report;
    Dataset ood;
    ood.catalog = model.catalog;
    ood.context_dim = model.context_dim;
    for (const auto& raw : ood_raw) {
        EventSequence seq = encode_sequence(raw, model.catalog, /*drop_unknown=*/true, &report.dropped_events);
        if (seq.events.empty()) continue;
        ood.sequences.push_back(canonicalize_sequence(std::move(seq)));
    }
    require(!ood.sequences.empty(), "transfer_eval: no out-of-domain events map onto the training catalog");

    const auto instances = build_instances(model, ood, threads);
    require(!instances.empty(), "transfer_eval: out-of-domain dataset has no multi-event sequences after filtering");
    for (int target : target_types)
        report.entries.push_back(auc_report(instances, target, model.catalog.code(target), n_boot, seed));
    return report;
}

}  // namespace ddp
