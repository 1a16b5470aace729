#include "ddp/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ddp {

int DiseaseCatalog::index_of(const std::string& c) const {
    auto it = std::lower_bound(codes.begin(), codes.end(), c);
    if (it == codes.end() || *it != c) return -1;
    return static_cast<int>(it - codes.begin());
}

DiseaseCatalog build_catalog(const std::vector<RawSequence>& raws) {
    std::set<std::string> seen;
    for (const auto& r : raws)
        for (const auto& e : r.events) seen.insert(e.code);
    require(!seen.empty(), "build_catalog: no events");
    DiseaseCatalog cat;
    cat.codes.assign(seen.begin(), seen.end());
    return cat;
}

EventSequence encode_sequence(const RawSequence& raw, const DiseaseCatalog& catalog, bool drop_unknown,
                              long* dropped) {
    EventSequence seq;
    seq.patient_id = raw.patient_id;
    seq.context = raw.context;
    seq.horizon_T = raw.horizon_T;
    seq.events.reserve(raw.events.size());
    for (const auto& e : raw.events) {
        const int idx = catalog.index_of(e.code);
        if (idx < 0) {
            if (!drop_unknown) fail("encode_sequence: unknown code '" + e.code + "'");
            if (dropped) ++*dropped;
            continue;
        }
        seq.events.push_back({e.t, idx});
    }
    return seq;
}

EventSequence canonicalize_sequence(EventSequence raw, TiePolicy tie_policy, double jitter_eps) {
    require(jitter_eps > 0.0, "canonicalize_sequence: jitter_eps must be positive");
    require(std::isfinite(raw.horizon_T) && raw.horizon_T >= 0.0, "canonicalize_sequence: bad horizon_T");
    for (const auto& e : raw.events) {
        require(std::isfinite(e.t), "canonicalize_sequence: non-finite timestamp");
        require(e.t >= 0.0, "canonicalize_sequence: negative timestamp");
        require(e.t <= raw.horizon_T, "canonicalize_sequence: event after horizon_T");
    }
    for (double f : raw.context) require(std::isfinite(f), "canonicalize_sequence: non-finite context feature");

    auto& ev = raw.events;
    std::stable_sort(ev.begin(), ev.end(), [&](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (tie_policy == TiePolicy::kCatalogOrder) return a.type_idx < b.type_idx;
        return false;  // stable sort keeps input order
    });

    // Jitter only inside exact-tie groups, so already-strict input is untouched.
    size_t i = 0;
    while (i < ev.size()) {
        size_t j = i + 1;
        while (j < ev.size() && ev[j].t == ev[i].t) ++j;
        for (size_t k = i + 1; k < j; ++k) ev[k].t = ev[i].t + static_cast<double>(k - i) * jitter_eps;
        i = j;
    }
    for (size_t k = 1; k < ev.size(); ++k)
        require(ev[k - 1].t < ev[k].t, "canonicalize_sequence: jitter collided with a later event; reduce jitter_eps");

    if (!ev.empty() && ev.back().t > raw.horizon_T) raw.horizon_T = ev.back().t;
    return raw;
}

bool is_canonical(const EventSequence& seq) {
    for (size_t k = 0; k < seq.events.size(); ++k) {
        const auto& e = seq.events[k];
        if (!std::isfinite(e.t) || e.t < 0.0 || e.t > seq.horizon_T) return false;
        if (k > 0 && seq.events[k - 1].t >= e.t) return false;
    }
    return true;
}

EventSequence history_prefix(const EventSequence& seq, double t) {
    require(t >= 0.0 && t <= seq.horizon_T, "history_prefix: t outside observation window");
    EventSequence out;
    out.patient_id = seq.patient_id;
    out.context = seq.context;
    out.horizon_T = seq.horizon_T;
    for (const auto& e : seq.events) {
        if (e.t >= t) break;
        out.events.push_back(e);
    }
    return out;
}

std::vector<char> occurrence_labels(const EventSequence& seq, double t, int K) {
    std::vector<char> labels(static_cast<size_t>(K), 0);
    for (const auto& e : seq.events) {
        if (e.t > t) break;
        labels[static_cast<size_t>(e.type_idx)] = 1;
    }
    return labels;
}

}  // namespace ddp
