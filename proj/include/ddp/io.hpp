#pragma once

#include <string>
#include <vector>

#include "ddp/domain.hpp"

namespace ddp {

// One JSON object per line:
// {"patient_id": str, "events": [{"t": num, "code": str}], "context": [num], "horizon_T": num}
// Timestamps and horizons are divided by time_scale at ingestion.
// Parse errors name the offending line number.
std::vector<RawSequence> read_jsonl(const std::string& path, double time_scale = 1.0);

std::string sequence_to_jsonl_line(const EventSequence& seq, const DiseaseCatalog& catalog);
void write_jsonl(const std::string& path, const Dataset& data);

// Catalog build + encode + canonicalize in one step.
Dataset make_dataset(const std::vector<RawSequence>& raws, TiePolicy tie_policy = TiePolicy::kCatalogOrder,
                     double jitter_eps = kDefaultJitterEps);

// Encode against an existing catalog (transfer path); unknown codes are
// dropped and counted when drop_unknown is set.
Dataset make_dataset_with_catalog(const std::vector<RawSequence>& raws, const DiseaseCatalog& catalog,
                                  bool drop_unknown, long* dropped_events = nullptr,
                                  TiePolicy tie_policy = TiePolicy::kCatalogOrder,
                                  double jitter_eps = kDefaultJitterEps);

// Write-to-temp-then-rename; a failed run never leaves a partial file.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Doubles printed with shortest round-trip precision for CSV cells.
std::string format_double(double x);

}  // namespace ddp
