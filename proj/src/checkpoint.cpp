#include "ddp/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <ctime>

#include "ddp/io.hpp"

namespace ddp {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& name) {
    require(static_cast<int>(j.size()) == rows, "checkpoint: " + name + " has wrong row count");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<size_t>(r));
        require(static_cast<int>(row.size()) == cols, "checkpoint: " + name + " has wrong column count");
        for (int c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
    }
    return m;
}

json params_payload(const ModelParams& m) {
    json p;
    p["background"] = {{"bias", m.background.bias}, {"theta", matrix_to_json(m.background.theta)}};
    if (m.has_excitation()) {
        p["excitation"] = {{"raw_alpha", matrix_to_json(m.excitation.raw)}};
        p["kernel"] = {{"raw_beta", matrix_to_json(m.kernel.raw)}};
    }
    if (m.is_ddp()) {
        const auto& n = m.neural;
        p["neural"] = {{"dims", {{"K", n.K}, {"D", n.D}, {"H", n.H}}},
                       {"embedding", matrix_to_json(n.embedding)},
                       {"wx", matrix_to_json(n.wx)},
                       {"wh", matrix_to_json(n.wh)},
                       {"gate_bias", n.b},
                       {"readout_w", n.readout_w},
                       {"readout_b", n.readout_b}};
    }
    return p;
}

std::string hash_hex(const json& core) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(core.dump())));
    return buf;
}

}  // namespace

std::string creation_timestamp() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr) {
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json checkpoint_to_json(const ModelParams& model, const json& config_echo) {
    json core;
    core["format_version"] = kCheckpointVersion;
    core["kind"] = to_string(model.kind);
    core["catalog"] = model.catalog.codes;
    core["context_dim"] = model.context_dim;
    core["params"] = params_payload(model);

    json j = core;
    j["content_hash"] = hash_hex(core);
    j["created_at"] = creation_timestamp();
    if (!config_echo.is_null()) j["config_echo"] = config_echo;
    return j;
}

ModelParams checkpoint_from_json(const json& j) {
    require(j.contains("format_version"), "checkpoint: missing format_version");
    const int version = j.at("format_version").get<int>();
    require(version == kCheckpointVersion,
            "checkpoint: unsupported format_version " + std::to_string(version));

    json core;
    core["format_version"] = version;
    core["kind"] = j.at("kind");
    core["catalog"] = j.at("catalog");
    core["context_dim"] = j.at("context_dim");
    core["params"] = j.at("params");
    if (j.contains("content_hash"))
        require(j.at("content_hash").get<std::string>() == hash_hex(core),
                "checkpoint: content hash mismatch, file corrupted");

    ModelParams m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.catalog.codes = j.at("catalog").get<std::vector<std::string>>();
    m.context_dim = j.at("context_dim").get<int>();
    const int K = m.K();
    require(K >= 1, "checkpoint: empty catalog");

    const auto& p = j.at("params");
    m.background.bias = p.at("background").at("bias").get<std::vector<double>>();
    require(static_cast<int>(m.background.bias.size()) == K, "checkpoint: bias has wrong length");
    m.background.theta = matrix_from_json(p.at("background").at("theta"), K, m.context_dim, "theta");
    if (m.has_excitation()) {
        m.excitation.raw = matrix_from_json(p.at("excitation").at("raw_alpha"), K, K, "raw_alpha");
        m.kernel.raw = matrix_from_json(p.at("kernel").at("raw_beta"), K, K, "raw_beta");
    }
    if (m.is_ddp()) {
        const auto& n = p.at("neural");
        const auto& dims = n.at("dims");
        m.neural.K = dims.at("K").get<int>();
        m.neural.D = dims.at("D").get<int>();
        m.neural.H = dims.at("H").get<int>();
        require(m.neural.K == K, "checkpoint: neural K does not match catalog");
        m.neural.embedding = matrix_from_json(n.at("embedding"), m.neural.K, m.neural.D, "embedding");
        m.neural.wx = matrix_from_json(n.at("wx"), 4 * m.neural.H, m.neural.D + 1, "wx");
        m.neural.wh = matrix_from_json(n.at("wh"), 4 * m.neural.H, m.neural.H, "wh");
        m.neural.b = n.at("gate_bias").get<std::vector<double>>();
        m.neural.readout_w = n.at("readout_w").get<std::vector<double>>();
        m.neural.readout_b = n.at("readout_b").get<double>();
        require(static_cast<int>(m.neural.b.size()) == 4 * m.neural.H, "checkpoint: gate_bias has wrong length");
        require(static_cast<int>(m.neural.readout_w.size()) == m.neural.H,
                "checkpoint: readout_w has wrong length");
    }
    return m;
}

void save_checkpoint(const std::string& path, const ModelParams& model, const json& config_echo) {
    atomic_write(path, checkpoint_to_json(model, config_echo).dump(2) + "\n");
}

ModelParams load_checkpoint(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    require(!j.is_discarded(), "checkpoint '" + path + "' is not valid JSON");
    return checkpoint_from_json(j);
}

}  // namespace ddp
