#include "ddp/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ddp {

using nlohmann::json;

std::vector<RawSequence> read_jsonl(const std::string& path, double time_scale) {
    require(time_scale > 0.0, "read_jsonl: time_scale must be positive");
    std::ifstream in(path);
    require(in.good(), "cannot open '" + path + "'");
    std::vector<RawSequence> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(path + ":" + std::to_string(line_no) + ": malformed JSON");
        try {
            RawSequence seq;
            seq.patient_id = j.at("patient_id").get<std::string>();
            seq.horizon_T = j.at("horizon_T").get<double>() / time_scale;
            if (j.contains("context")) seq.context = j.at("context").get<std::vector<double>>();
            for (const auto& je : j.at("events")) {
                RawEvent e;
                e.t = je.at("t").get<double>() / time_scale;
                e.code = je.at("code").get<std::string>();
                seq.events.push_back(std::move(e));
            }
            out.push_back(std::move(seq));
        } catch (const json::exception& ex) {
            fail(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

std::string sequence_to_jsonl_line(const EventSequence& seq, const DiseaseCatalog& catalog) {
    json j;
    j["patient_id"] = seq.patient_id;
    j["horizon_T"] = seq.horizon_T;
    j["context"] = seq.context;
    json events = json::array();
    for (const auto& e : seq.events) events.push_back({{"t", e.t}, {"code", catalog.code(e.type_idx)}});
    j["events"] = std::move(events);
    return j.dump();
}

void write_jsonl(const std::string& path, const Dataset& data) {
    std::ostringstream out;
    for (const auto& seq : data.sequences) out << sequence_to_jsonl_line(seq, data.catalog) << "\n";
    atomic_write(path, out.str());
}

Dataset make_dataset(const std::vector<RawSequence>& raws, TiePolicy tie_policy, double jitter_eps) {
    Dataset data;
    data.catalog = build_catalog(raws);
    data.context_dim = raws.empty() ? 0 : static_cast<int>(raws.front().context.size());
    for (const auto& raw : raws) {
        require(static_cast<int>(raw.context.size()) == data.context_dim,
                "make_dataset: patient '" + raw.patient_id + "' has a context of different length");
        data.sequences.push_back(canonicalize_sequence(encode_sequence(raw, data.catalog), tie_policy, jitter_eps));
    }
    return data;
}

Dataset make_dataset_with_catalog(const std::vector<RawSequence>& raws, const DiseaseCatalog& catalog,
                                  bool drop_unknown, long* dropped_events, TiePolicy tie_policy,
                                  double jitter_eps) {
    Dataset data;
    data.catalog = catalog;
    data.context_dim = raws.empty() ? 0 : static_cast<int>(raws.front().context.size());
    for (const auto& raw : raws) {
        EventSequence seq = encode_sequence(raw, catalog, drop_unknown, dropped_events);
        data.sequences.push_back(canonicalize_sequence(std::move(seq), tie_policy, jitter_eps));
    }
    return data;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), "cannot write '" + tmp + "'");
        out << content;
        out.flush();
        require(out.good(), "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail("rename failed for '" + path + "': " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double x) {
    // json's double printer emits the shortest string that round-trips.
    return json(x).dump();
}

}  // namespace ddp
