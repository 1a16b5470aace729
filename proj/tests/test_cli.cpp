#include <doctest.h>
#include <nlohmann/json.hpp>

#include "ddp/checkpoint.hpp"
#include "ddp/inference.hpp"
#include "ddp/io.hpp"
#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace ddp;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

std::string cli_path() {
    if (const char* env = std::getenv("DDP_CLI")) return env;
    if (fs::exists("tools/ddp")) return "tools/ddp";
    return {};
}

// Runs the CLI under a fixed SOURCE_DATE_EPOCH so timestamps cannot differ.
int run_cli(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = "SOURCE_DATE_EPOCH=1700000000 " + cli_path() + " " + args + " 2>" + log;
    return std::system(cmd.c_str());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

const char* kToyConfig = R"({
  "simulate": {"kind": "chawkes", "K": 3, "n_sequences": 50, "horizon_T": 50.0,
               "mu": [0.04, 0.06, 0.05],
               "context": {"mode": "normal", "dim": 1}},
  "model": {"kind": "chawkes"},
  "train": {"epochs": 4, "learning_rate": 0.02, "batch_size": 25},
  "eval": {"n_boot": 80},
  "heterogeneity": {"grid": [0.0, 4.0, 12.0], "subsample_n": 25}
})";

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact for every kind") {
    TempDir dir("ddp_ckpt_test");
    const ModelKind kinds[] = {ModelKind::kPoisson, ModelKind::kHawkes, ModelKind::kCHawkes, ModelKind::kDdp};
    for (const ModelKind kind : kinds) {
        const ModelParams m = test::random_model(kind, 4, kind == ModelKind::kHawkes ? 0 : 2, 80);
        const std::string path = dir / ("ckpt_" + to_string(kind) + ".json");
        save_checkpoint(path, m, nlohmann::json{{"note", "test"}});
        const ModelParams back = load_checkpoint(path);
        CHECK(back.kind == m.kind);
        CHECK(back.catalog == m.catalog);
        CHECK(back.context_dim == m.context_dim);
        CHECK(pack_params(back) == pack_params(m));  // bit-identical tensors
    }
}

TEST_CASE("checkpoint rejects corruption and version drift") {
    TempDir dir("ddp_ckpt_bad");
    const ModelParams m = test::random_model(ModelKind::kHawkes, 2, 0, 81);
    const std::string path = dir / "ckpt.json";
    save_checkpoint(path, m, {});

    auto j = nlohmann::json::parse(read_file(path));
    j["params"]["background"]["bias"][0] = 123.0;
    CHECK_THROWS_WITH_AS(checkpoint_from_json(j), doctest::Contains("hash"), Error);

    auto j2 = nlohmann::json::parse(read_file(path));
    j2["format_version"] = 99;
    CHECK_THROWS_WITH_AS(checkpoint_from_json(j2), doctest::Contains("format_version"), Error);
}

TEST_CASE("simulate is byte-identical across reruns") {
    if (cli_path().empty()) return;  // CLI not built alongside
    TempDir dir("ddp_cli_det");
    write_text(dir / "cfg.json", kToyConfig);

    // Identical command, rerun into the same directory.
    const std::string cmd = "simulate --config " + (dir / "cfg.json") + " --out " + (dir / "a") + " --seed 7";
    REQUIRE(run_cli(cmd) == 0);
    const std::string dataset = read_file(dir / "a/dataset.jsonl");
    const std::string truth = read_file(dir / "a/truth_model.json");
    REQUIRE(run_cli(cmd) == 0);
    CHECK(read_file(dir / "a/dataset.jsonl") == dataset);
    CHECK(read_file(dir / "a/truth_model.json") == truth);

    REQUIRE(run_cli("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "c") + " --seed 8") == 0);
    CHECK(read_file(dir / "c/dataset.jsonl") != dataset);
}

TEST_CASE("pipeline smoke: simulate, fit, eval, network, heterogeneity") {
    if (cli_path().empty()) return;
    TempDir dir("ddp_cli_pipe");
    write_text(dir / "cfg.json", kToyConfig);
    const std::string cfg = " --config " + (dir / "cfg.json");

    REQUIRE(run_cli("simulate" + cfg + " --out " + (dir / "sim") + " --seed 1") == 0);
    REQUIRE(run_cli("fit" + cfg + " --data " + (dir / "sim/dataset.jsonl") + " --out " + (dir / "fit") +
                    " --seed 2") == 0);
    REQUIRE(run_cli("eval" + cfg + " --data " + (dir / "sim/dataset.jsonl") + " --model " + (dir / "fit/model.json") +
                    " --out " + (dir / "eval") + " --seed 3") == 0);
    REQUIRE(run_cli("network" + cfg + " --data " + (dir / "sim/dataset.jsonl") + " --model " +
                    (dir / "fit/model.json") + " --out " + (dir / "net") + " --at-times 5,20") == 0);
    REQUIRE(run_cli("heterogeneity" + cfg + " --data " + (dir / "sim/dataset.jsonl") + " --model " +
                    (dir / "fit/model.json") + " --out " + (dir / "het") + " --seed 4") == 0);

    for (const char* f : {"sim/dataset.jsonl", "sim/truth_model.json", "fit/model.json", "fit/fit_report.json",
                          "fit/fit_metrics.csv", "eval/auc_report.csv", "net/static_graph.json",
                          "net/cooccurrence_graph.json", "net/network_sim-0_0.json", "net/network_sim-0_1.json",
                          "het/heterogeneity.csv"}) {
        CAPTURE(f);
        CHECK(fs::exists(dir / f));
    }

    // Fitted checkpoint loads back to the exact in-memory parameters.
    const ModelParams fitted = load_checkpoint(dir / "fit/model.json");
    CHECK(fitted.kind == ModelKind::kCHawkes);

    // Outputs embed the config echo.
    CHECK(read_file(dir / "eval/auc_report.csv").rfind("# config: {", 0) == 0);
    CHECK(nlohmann::json::parse(read_file(dir / "fit/fit_report.json")).contains("config_echo"));
}

TEST_CASE("malformed input: line numbers, no partial outputs, nonzero exit") {
    if (cli_path().empty()) return;
    TempDir dir("ddp_cli_bad");
    write_text(dir / "cfg.json", kToyConfig);
    write_text(dir / "bad.jsonl",
               R"({"patient_id":"a","events":[{"t":1.0,"code":"X"}],"context":[],"horizon_T":10})"
               "\nnot json at all\n");

    const int rc = run_cli("fit --config " + (dir / "cfg.json") + " --data " + (dir / "bad.jsonl") + " --out " +
                               (dir / "out"),
                           dir / "err.log");
    CHECK(rc != 0);
    const std::string err = read_file(dir / "err.log");
    CHECK(err.find(":2") != std::string::npos);  // offending line is named
    CHECK(!fs::exists(dir / "out/model.json"));
    CHECK(!fs::exists(dir / "out/model.json.tmp"));
}

TEST_CASE("catalog mismatch between checkpoint and data errors out") {
    if (cli_path().empty()) return;
    TempDir dir("ddp_cli_cat");
    write_text(dir / "cfg.json", kToyConfig);
    REQUIRE(run_cli("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "sim") + " --seed 1") == 0);
    REQUIRE(run_cli("fit --config " + (dir / "cfg.json") + " --data " + (dir / "sim/dataset.jsonl") + " --out " +
                    (dir / "fit") + " --seed 2") == 0);

    write_text(dir / "other.jsonl",
               R"({"patient_id":"a","events":[{"t":1.0,"code":"ZZZ"},{"t":2.0,"code":"C00"}],"context":[0.1],"horizon_T":10})"
               "\n");
    const int rc = run_cli("eval --config " + (dir / "cfg.json") + " --data " + (dir / "other.jsonl") + " --model " +
                               (dir / "fit/model.json") + " --out " + (dir / "eval"),
                           dir / "err.log");
    CHECK(rc != 0);
    CHECK(read_file(dir / "err.log").find("catalog mismatch") != std::string::npos);
}

TEST_CASE("unknown flags are a usage error") {
    if (cli_path().empty()) return;
    TempDir dir("ddp_cli_flags");
    CHECK(run_cli("simulate --no-such-flag", dir / "err.log") != 0);
    CHECK(run_cli("frobnicate", dir / "err.log") != 0);
}

TEST_SUITE_END();
