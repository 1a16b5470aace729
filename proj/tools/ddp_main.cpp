// ddp: simulate, fit, evaluate and analyze dynamic comorbidity networks from
// timestamped event sequences. Subcommands wire the library into reproducible
// file-to-file pipelines; all randomness flows from one root seed per command.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "ddp/checkpoint.hpp"
#include "ddp/evaluate.hpp"
#include "ddp/inference.hpp"
#include "ddp/io.hpp"
#include "ddp/network.hpp"
#include "ddp/simulate.hpp"

using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string model_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed;
    std::optional<int> threads;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = json::parse(ddp::read_file(path), nullptr, false);
    ddp::require(!j.is_discarded(), "config '" + path + "' is not valid JSON");
    return j;
}

template <typename T>
T cfg_get(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

uint64_t effective_seed(const CommonArgs& args, const json& cfg) {
    if (args.seed) return *args.seed;
    return cfg_get<uint64_t>(cfg, "seed", 0);
}

int effective_threads(const CommonArgs& args, const json& cfg) {
    if (args.threads) return *args.threads;
    if (const char* env = std::getenv("DDP_THREADS")) return std::max(1, std::atoi(env));
    return cfg_get<int>(cfg, "threads", 1);
}

// Full provenance echo written into every output.
json make_echo(const CommonArgs& args, const json& cfg, uint64_t seed, int threads) {
    json echo = cfg;
    echo["seed"] = seed;
    echo["threads"] = threads;
    if (!args.data_path.empty()) echo["data"] = args.data_path;
    if (!args.model_path.empty()) echo["model"] = args.model_path;
    echo["out"] = args.out_dir;
    return echo;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    std::filesystem::create_directories(args.out_dir);
    return (std::filesystem::path(args.out_dir) / name).string();
}

std::string csv_header(const json& echo) { return "# config: " + echo.dump() + "\n"; }

ddp::Matrix matrix_from_cfg(const json& j, int rows, int cols, const std::string& name) {
    ddp::require(static_cast<int>(j.size()) == rows, name + ": expected " + std::to_string(rows) + " rows");
    ddp::Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<size_t>(r));
        ddp::require(static_cast<int>(row.size()) == cols, name + ": expected " + std::to_string(cols) + " columns");
        for (int c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
    }
    return m;
}

ddp::ContextSpec context_from_cfg(const json& j) {
    ddp::ContextSpec spec;
    if (j.is_null()) return spec;
    const std::string mode = cfg_get<std::string>(j, "mode", "fixed");
    if (mode == "fixed") {
        spec.mode = ddp::ContextSpec::Mode::kFixed;
        spec.values = cfg_get<std::vector<double>>(j, "values", {});
    } else if (mode == "normal") {
        spec.mode = ddp::ContextSpec::Mode::kNormal;
        spec.dim = cfg_get<int>(j, "dim", 1);
        spec.mean = cfg_get<double>(j, "mean", 0.0);
        spec.sd = cfg_get<double>(j, "sd", 1.0);
    } else if (mode == "bernoulli") {
        spec.mode = ddp::ContextSpec::Mode::kBernoulli;
        spec.dim = cfg_get<int>(j, "dim", 1);
        spec.p = cfg_get<double>(j, "p", 0.5);
    } else {
        ddp::fail("context.mode must be fixed, normal or bernoulli");
    }
    return spec;
}

// Generator model for `simulate`: either an existing checkpoint or a model
// built from the config block (values given in mapped units).
ddp::ModelParams generator_model(const json& sim, const std::string& model_path, uint64_t seed) {
    if (!model_path.empty()) return ddp::load_checkpoint(model_path);
    ddp::require(sim.contains("kind"), "simulate: config needs simulate.kind or --model");
    const ddp::ModelKind kind = ddp::model_kind_from_string(sim.at("kind").get<std::string>());

    ddp::DiseaseCatalog catalog;
    if (sim.contains("codes")) {
        catalog.codes = sim.at("codes").get<std::vector<std::string>>();
        std::sort(catalog.codes.begin(), catalog.codes.end());
    } else {
        const int K = cfg_get<int>(sim, "K", 3);
        for (int v = 0; v < K; ++v) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "C%02d", v);
            catalog.codes.push_back(buf);
        }
    }
    const int K = catalog.size();
    const ddp::ContextSpec context = context_from_cfg(sim.contains("context") ? sim.at("context") : json());
    const int F = kind == ddp::ModelKind::kHawkes ? 0 : context.feature_count();

    ddp::ModelParams m = ddp::make_model(kind, catalog, F, cfg_get<double>(sim, "mu0", 0.05),
                                         cfg_get<double>(sim, "alpha0", 0.1), cfg_get<double>(sim, "beta0", 0.1),
                                         cfg_get<int>(sim, "embedding_dim", 16), cfg_get<int>(sim, "hidden_dim", 32),
                                         ddp::mix_seed(seed, 0x67656eULL));
    if (sim.contains("mu")) {
        const auto mu = sim.at("mu").get<std::vector<double>>();
        ddp::require(static_cast<int>(mu.size()) == K, "simulate: mu must have K entries");
        for (int v = 0; v < K; ++v)
            m.background.bias[static_cast<size_t>(v)] = ddp::softplus_inv(mu[static_cast<size_t>(v)]);
    }
    if (sim.contains("theta") && F > 0) m.background.theta = matrix_from_cfg(sim.at("theta"), K, F, "theta");
    if (m.has_excitation()) {
        if (sim.contains("alpha")) {
            const auto a = matrix_from_cfg(sim.at("alpha"), K, K, "alpha");
            for (size_t i = 0; i < a.data.size(); ++i)
                m.excitation.raw.data[i] = a.data[i] <= 0.0 ? -1e9 : ddp::softplus_inv(a.data[i]);
        }
        if (sim.contains("beta")) {
            const auto b = matrix_from_cfg(sim.at("beta"), K, K, "beta");
            for (size_t i = 0; i < b.data.size(); ++i)
                m.kernel.raw.data[i] = ddp::softplus_inv(std::max(b.data[i] - ddp::kBetaFloor, 1e-9));
        }
    }
    if (m.is_ddp() && sim.contains("readout_b")) m.neural.readout_b = sim.at("readout_b").get<double>();
    return m;
}

int cmd_simulate(const CommonArgs& args, const json& cfg) {
    const json sim = cfg.contains("simulate") ? cfg.at("simulate") : json::object();
    const uint64_t seed = effective_seed(args, cfg);
    const json echo = make_echo(args, cfg, seed, effective_threads(args, cfg));

    const ddp::ModelParams model = generator_model(sim, args.model_path, seed);
    ddp::SimConfig sc;
    sc.horizon_T = cfg_get<double>(sim, "horizon_T", 100.0);
    sc.max_events = cfg_get<int>(sim, "max_events", 200);
    sc.seed = ddp::mix_seed(seed, 0x73696dULL);  // "sim"
    sc.context = context_from_cfg(sim.contains("context") ? sim.at("context") : json());
    const int n = cfg_get<int>(sim, "n_sequences", 100);

    const ddp::Dataset data = ddp::simulate_dataset(model, sc, n);
    ddp::write_jsonl(out_path(args, "dataset.jsonl"), data);
    ddp::save_checkpoint(out_path(args, "truth_model.json"), model, echo);
    long events = 0;
    for (const auto& s : data.sequences) events += s.n_events();
    std::cerr << "simulated " << n << " sequences, " << events << " events, K=" << model.K() << "\n";
    return 0;
}

int cmd_fit(const CommonArgs& args, const json& cfg) {
    ddp::require(!args.data_path.empty(), "fit: --data is required");
    const uint64_t seed = effective_seed(args, cfg);
    const int threads = effective_threads(args, cfg);
    const json echo = make_echo(args, cfg, seed, threads);

    const json model_cfg = cfg.contains("model") ? cfg.at("model") : json::object();
    const json train_cfg = cfg.contains("train") ? cfg.at("train") : json::object();

    const auto raws = ddp::read_jsonl(args.data_path, cfg_get<double>(cfg, "time_scale", 1.0));
    const ddp::Dataset data = ddp::make_dataset(raws);

    ddp::TrainConfig tc;
    tc.eta = cfg_get<double>(train_cfg, "eta", 1.0);
    tc.l1_weight = cfg_get<double>(train_cfg, "l1_weight", 0.0);
    tc.learning_rate = cfg_get<double>(train_cfg, "learning_rate", 1e-3);
    tc.epochs = cfg_get<int>(train_cfg, "epochs", 200);
    tc.batch_size = cfg_get<int>(train_cfg, "batch_size", 64);
    tc.validation_fraction = cfg_get<double>(train_cfg, "validation_fraction", 0.2);
    tc.early_stop_patience = cfg_get<int>(train_cfg, "early_stop_patience", 10);
    tc.seed = ddp::mix_seed(seed, 0x666974ULL);  // "fit"
    tc.threads = threads;

    const ddp::ModelKind kind = ddp::model_kind_from_string(cfg_get<std::string>(model_cfg, "kind", "ddp"));
    const ddp::ModelParams init =
        ddp::default_init_model(kind, data, cfg_get<int>(model_cfg, "embedding_dim", 16),
                                cfg_get<int>(model_cfg, "hidden_dim", 32), ddp::mix_seed(seed, 0x696e6974ULL));

    const ddp::FitReport report = ddp::fit(data, tc, init);
    ddp::save_checkpoint(out_path(args, "model.json"), report.best_params, echo);

    const bool fixed_clock = std::getenv("SOURCE_DATE_EPOCH") != nullptr;
    json jr;
    jr["train_obj"] = report.train_obj;
    jr["val_obj"] = report.val_obj;
    jr["best_epoch"] = report.best_epoch;
    jr["stopped_epoch"] = report.stopped_epoch;
    jr["wall_seconds"] = fixed_clock ? 0.0 : report.wall_seconds;
    jr["config_echo"] = echo;
    ddp::atomic_write(out_path(args, "fit_report.json"), jr.dump(2) + "\n");

    std::ostringstream csv;
    csv << csv_header(echo) << "epoch,train_obj,val_obj\n";
    for (size_t e = 0; e < report.train_obj.size(); ++e)
        csv << e << "," << ddp::format_double(report.train_obj[e]) << "," << ddp::format_double(report.val_obj[e])
            << "\n";
    ddp::atomic_write(out_path(args, "fit_metrics.csv"), csv.str());

    std::cerr << "fit " << ddp::to_string(kind) << ": best epoch " << report.best_epoch << ", val objective "
              << report.val_obj[static_cast<size_t>(report.best_epoch)] << "\n";
    return 0;
}

std::vector<int> resolve_targets(const ddp::ModelParams& model, const std::string& target_codes_flag,
                                 const json& eval_cfg, const std::vector<ddp::PredictionInstance>& instances) {
    std::vector<std::string> codes;
    if (!target_codes_flag.empty()) {
        std::stringstream ss(target_codes_flag);
        std::string item;
        while (std::getline(ss, item, ',')) codes.push_back(item);
    } else if (eval_cfg.contains("target_codes")) {
        codes = eval_cfg.at("target_codes").get<std::vector<std::string>>();
    }
    std::vector<int> targets;
    if (!codes.empty()) {
        for (const auto& c : codes) {
            const int idx = model.catalog.index_of(c);
            ddp::require(idx >= 0, "target code '" + c + "' is not in the model catalog");
            targets.push_back(idx);
        }
        return targets;
    }
    // Default: every code with both classes present.
    std::vector<long> pos(static_cast<size_t>(model.K()), 0);
    for (const auto& inst : instances) ++pos[static_cast<size_t>(inst.true_type)];
    for (int v = 0; v < model.K(); ++v)
        if (pos[static_cast<size_t>(v)] > 0 && pos[static_cast<size_t>(v)] < static_cast<long>(instances.size()))
            targets.push_back(v);
    ddp::require(!targets.empty(), "eval: no target code has both classes");
    return targets;
}

void write_auc_csv(const std::string& path, const json& echo, const std::string& model_name,
                   const std::vector<ddp::AucEntry>& entries, long dropped_events) {
    std::ostringstream csv;
    csv << csv_header(echo);
    if (dropped_events >= 0) csv << "# dropped_events: " << dropped_events << "\n";
    csv << "code,model,auc,ci_halfwidth,n_pos,n_neg\n";
    for (const auto& e : entries)
        csv << e.code << "," << model_name << "," << ddp::format_double(e.auc) << ","
            << ddp::format_double(e.ci_halfwidth) << "," << e.n_pos << "," << e.n_neg << "\n";
    ddp::atomic_write(path, csv.str());
}

int cmd_eval(const CommonArgs& args, const json& cfg, const std::string& transfer_path,
             const std::string& target_codes_flag) {
    ddp::require(!args.data_path.empty(), "eval: --data is required");
    ddp::require(!args.model_path.empty(), "eval: --model is required");
    const uint64_t seed = effective_seed(args, cfg);
    const int threads = effective_threads(args, cfg);
    const json echo = make_echo(args, cfg, seed, threads);
    const json eval_cfg = cfg.contains("eval") ? cfg.at("eval") : json::object();
    const int n_boot = cfg_get<int>(eval_cfg, "n_boot", 1000);

    const ddp::ModelParams model = ddp::load_checkpoint(args.model_path);
    const auto raws = ddp::read_jsonl(args.data_path, cfg_get<double>(cfg, "time_scale", 1.0));
    ddp::Dataset data;
    try {
        data = ddp::make_dataset_with_catalog(raws, model.catalog, /*drop_unknown=*/false);
    } catch (const ddp::Error& e) {
        ddp::fail(std::string("catalog mismatch between checkpoint and data: ") + e.what());
    }

    const auto instances = ddp::build_instances(model, data, threads);
    ddp::require(!instances.empty(), "eval: no sequence has two or more events");
    const auto targets = resolve_targets(model, target_codes_flag, eval_cfg, instances);

    std::vector<ddp::AucEntry> entries;
    for (int t : targets)
        entries.push_back(ddp::auc_report(instances, t, model.catalog.code(t), n_boot,
                                          ddp::mix_seed(seed, 0x61756300ULL + static_cast<uint64_t>(t))));
    write_auc_csv(out_path(args, "auc_report.csv"), echo, ddp::to_string(model.kind), entries, -1);
    std::cerr << "eval: " << entries.size() << " target codes, " << instances.size() << " instances\n";

    if (!transfer_path.empty()) {
        const auto ood_raws = ddp::read_jsonl(transfer_path, cfg_get<double>(cfg, "time_scale", 1.0));
        const auto report = ddp::transfer_eval(model, ood_raws, targets, n_boot,
                                               ddp::mix_seed(seed, 0x7472616eULL), threads);
        write_auc_csv(out_path(args, "auc_transfer.csv"), echo, ddp::to_string(model.kind), report.entries,
                      report.dropped_events);
        std::cerr << "transfer: dropped " << report.dropped_events << " events with unknown codes\n";
    }
    return 0;
}

json graph_to_json(const ddp::GraphSnapshot& g, const ddp::DiseaseCatalog& catalog, const json& echo) {
    json j;
    j["t"] = g.t;
    j["labels"] = json::array();
    for (char l : g.labels) j["labels"].push_back(static_cast<bool>(l));
    j["edges"] = json::array();
    for (const auto& [key, w] : g.edges) j["edges"].push_back({{"src", key.first}, {"dst", key.second}, {"w", w}});
    j["codes"] = catalog.codes;
    j["config_echo"] = echo;
    return j;
}

int cmd_network(const CommonArgs& args, const json& cfg, const std::string& at_times_flag) {
    ddp::require(!args.data_path.empty(), "network: --data is required");
    ddp::require(!args.model_path.empty(), "network: --model is required");
    const uint64_t seed = effective_seed(args, cfg);
    const json echo = make_echo(args, cfg, seed, effective_threads(args, cfg));
    const json net_cfg = cfg.contains("network") ? cfg.at("network") : json::object();
    const double prune_eps = cfg_get<double>(net_cfg, "prune_eps", ddp::kDefaultPruneEps);

    const ddp::ModelParams model = ddp::load_checkpoint(args.model_path);
    const auto raws = ddp::read_jsonl(args.data_path, cfg_get<double>(cfg, "time_scale", 1.0));
    const ddp::Dataset data = ddp::make_dataset_with_catalog(raws, model.catalog, false);

    std::vector<double> at_times;
    if (!at_times_flag.empty()) {
        std::stringstream ss(at_times_flag);
        std::string item;
        while (std::getline(ss, item, ',')) at_times.push_back(std::stod(item));
    } else {
        at_times = cfg_get<std::vector<double>>(net_cfg, "at_times", {});
    }

    if (!at_times.empty()) {
        const std::string patient = cfg_get<std::string>(net_cfg, "patient", data.sequences.front().patient_id);
        const ddp::EventSequence* seq = nullptr;
        for (const auto& s : data.sequences)
            if (s.patient_id == patient) seq = &s;
        ddp::require(seq != nullptr, "network: patient '" + patient + "' not found");
        const ddp::InfluenceTrace trace = ddp::make_trace(model, *seq);
        for (size_t k = 0; k < at_times.size(); ++k) {
            const auto g = ddp::dynamic_graph(model, *seq, model.is_ddp() ? &trace : nullptr, at_times[k], prune_eps);
            ddp::atomic_write(out_path(args, "network_" + patient + "_" + std::to_string(k) + ".json"),
                              graph_to_json(g, model.catalog, echo).dump(2) + "\n");
        }
    }

    const auto sg = ddp::static_graph(model, data);
    ddp::atomic_write(out_path(args, "static_graph.json"), graph_to_json(sg, model.catalog, echo).dump(2) + "\n");
    const auto cg = ddp::cooccurrence_graph(data);
    ddp::atomic_write(out_path(args, "cooccurrence_graph.json"),
                      graph_to_json(cg, model.catalog, echo).dump(2) + "\n");
    std::cerr << "network: wrote " << at_times.size() << " snapshots plus static and co-occurrence graphs\n";
    return 0;
}

int cmd_heterogeneity(const CommonArgs& args, const json& cfg) {
    ddp::require(!args.data_path.empty(), "heterogeneity: --data is required");
    ddp::require(!args.model_path.empty(), "heterogeneity: --model is required");
    const uint64_t seed = effective_seed(args, cfg);
    const json echo = make_echo(args, cfg, seed, effective_threads(args, cfg));
    const json het_cfg = cfg.contains("heterogeneity") ? cfg.at("heterogeneity") : json::object();

    const ddp::ModelParams model = ddp::load_checkpoint(args.model_path);
    const auto raws = ddp::read_jsonl(args.data_path, cfg_get<double>(cfg, "time_scale", 1.0));
    const ddp::Dataset data = ddp::make_dataset_with_catalog(raws, model.catalog, false);

    const auto grid = cfg_get<std::vector<double>>(het_cfg, "grid", {0.0, 30.0, 90.0, 180.0, 365.0});
    const int subsample_n = cfg_get<int>(het_cfg, "subsample_n", 200);
    const long pair_budget = cfg_get<long>(het_cfg, "pair_budget", ddp::kDefaultPairBudget);

    const auto curve = ddp::heterogeneity_over_time(model, data, grid, subsample_n,
                                                    ddp::mix_seed(seed, 0x686574ULL), pair_budget);
    std::ostringstream csv;
    csv << csv_header(echo) << "t,value\n";
    for (size_t k = 0; k < curve.grid.size(); ++k)
        csv << ddp::format_double(curve.grid[k]) << "," << ddp::format_double(curve.values[k]) << "\n";
    ddp::atomic_write(out_path(args, "heterogeneity.csv"), csv.str());
    std::cerr << "heterogeneity: " << curve.population << " patients over " << grid.size() << " grid points\n";

    if (het_cfg.contains("influencer")) {
        const json inf = het_cfg.at("influencer");
        const std::string code = inf.at("code").get<std::string>();
        const int disease = model.catalog.index_of(code);
        ddp::require(disease >= 0, "influencer code '" + code + "' is not in the catalog");
        const auto rel_grid = cfg_get<std::vector<double>>(inf, "rel_grid", {-180.0, 0.0, 180.0, 365.0});
        const int baseline_n = cfg_get<int>(inf, "baseline_sample_n", 100);
        const auto icurve = ddp::influencer_curve(model, data, disease, rel_grid,
                                                  ddp::mix_seed(seed, 0x696e66ULL), baseline_n);
        std::ostringstream icsv;
        icsv << csv_header(echo) << "rel_t,delta\n";
        for (size_t k = 0; k < icurve.rel_grid.size(); ++k)
            icsv << ddp::format_double(icurve.rel_grid[k]) << "," << ddp::format_double(icurve.delta[k]) << "\n";
        ddp::atomic_write(out_path(args, "influencer_" + code + ".csv"), icsv.str());
        std::cerr << "influencer: wrote curve for " << code << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep diffusion process toolkit: point-process models over disease event sequences"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string transfer_path, target_codes, at_times;

    auto add_common = [&](CLI::App* sub, bool needs_data, bool needs_model) {
        sub->add_option("--config", args.config_path, "JSON config file");
        auto* d = sub->add_option("--data", args.data_path, "JSONL event dataset");
        auto* m = sub->add_option("--model", args.model_path, "model checkpoint path");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "root seed (overrides config)");
        sub->add_option("--threads", args.threads, "worker threads (or env DDP_THREADS)");
        if (needs_data) d->required();
        if (needs_model) m->required();
    };

    auto* sim = app.add_subcommand("simulate", "sample sequences from a model and write dataset + ground truth");
    add_common(sim, false, false);
    auto* fit = app.add_subcommand("fit", "train a model on a JSONL dataset");
    add_common(fit, true, false);
    auto* ev = app.add_subcommand("eval", "next-event AUC report for a fitted model");
    add_common(ev, true, true);
    ev->add_option("--transfer", transfer_path, "out-of-domain JSONL dataset, evaluated without refitting");
    ev->add_option("--target-codes", target_codes, "comma-separated target codes (default: all two-class codes)");
    auto* net = app.add_subcommand("network", "dynamic/static/co-occurrence graph extraction");
    add_common(net, true, true);
    net->add_option("--at-times", at_times, "comma-separated times for per-patient snapshots");
    auto* het = app.add_subcommand("heterogeneity", "population heterogeneity and influencer curves");
    add_common(het, true, true);

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(args.config_path);
        if (sim->parsed()) return cmd_simulate(args, cfg);
        if (fit->parsed()) return cmd_fit(args, cfg);
        if (ev->parsed()) return cmd_eval(args, cfg, transfer_path, target_codes);
        if (net->parsed()) return cmd_network(args, cfg, at_times);
        if (het->parsed()) return cmd_heterogeneity(args, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
