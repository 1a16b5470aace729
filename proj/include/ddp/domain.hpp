#pragma once

#include <string>
#include <vector>

#include "ddp/core.hpp"

namespace ddp {

// Ordered set of event-type codes. Codes are opaque strings (ICD-10 in the
// medical setting); indices 0..K-1 are stable for a given catalog.
struct DiseaseCatalog {
    std::vector<std::string> codes;  // unique, sorted lexicographically

    int size() const { return static_cast<int>(codes.size()); }
    const std::string& code(int idx) const { return codes.at(static_cast<size_t>(idx)); }
    // Index of a code, or -1 if absent.
    int index_of(const std::string& c) const;

    bool operator==(const DiseaseCatalog&) const = default;
};

struct Event {
    double t = 0.0;    // days from sequence origin
    int type_idx = 0;  // catalog index
};

// One patient's trajectory: strictly time-ordered events (after
// canonicalization), static context features and an observation window.
struct EventSequence {
    std::string patient_id;
    std::vector<Event> events;
    std::vector<double> context;
    double horizon_T = 0.0;

    int n_events() const { return static_cast<int>(events.size()); }
    double last_time() const { return events.empty() ? 0.0 : events.back().t; }
};

struct Dataset {
    DiseaseCatalog catalog;
    std::vector<EventSequence> sequences;
    int context_dim = 0;

    size_t size() const { return sequences.size(); }
};

// Pre-catalog form straight out of ingestion: codes are still strings.
struct RawEvent {
    double t = 0.0;
    std::string code;
};

struct RawSequence {
    std::string patient_id;
    std::vector<RawEvent> events;
    std::vector<double> context;
    double horizon_T = 0.0;
};

enum class TiePolicy {
    kCatalogOrder,  // ties broken by type index (catalog order == lexicographic code order)
    kInputOrder,    // ties keep their input order
};

constexpr double kDefaultJitterEps = 1e-6;  // days

// Collects every code seen across the inputs, deduplicated and sorted.
// Errors if no event exists at all.
DiseaseCatalog build_catalog(const std::vector<RawSequence>& raws);

// Maps codes to catalog indices. Unknown codes are an error unless
// drop_unknown is set, in which case they are skipped and counted.
EventSequence encode_sequence(const RawSequence& raw, const DiseaseCatalog& catalog, bool drop_unknown = false,
                              long* dropped = nullptr);

// Sorts events by time and breaks exact ties deterministically: tie groups
// are ordered by tie_policy, then separated by adding k * jitter_eps
// (k = 0,1,2,... within the group) so strict ordering holds. Idempotent.
EventSequence canonicalize_sequence(EventSequence raw, TiePolicy tie_policy = TiePolicy::kCatalogOrder,
                                    double jitter_eps = kDefaultJitterEps);

bool is_canonical(const EventSequence& seq);

// Events with t_i strictly before t; patient_id, context and horizon kept.
EventSequence history_prefix(const EventSequence& seq, double t);

// Occurrence flags over K types: labels[v] = true iff an event of type v
// happened at or before t.
std::vector<char> occurrence_labels(const EventSequence& seq, double t, int K);

}  // namespace ddp
