#pragma once

// Command-line front end: synth, featurize, experiment, report, replay.
//
// Data goes to files under --out, diagnostics to stderr. Every command also
// writes manifest.json (arguments, parameters, seed, input and output
// digests, version, duration); `replay` re-runs a manifest.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "bitcascade/bitcascade.hpp"

namespace bitcascade::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned i = 0; i < len; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 15];
    }
    return hex;
}

inline std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> arguments)
        : start_(std::chrono::steady_clock::now()) {
        doc_["tool"] = "bitcascade";
        doc_["version"] = kVersion;
        doc_["command"] = std::move(command);
        doc_["arguments"] = std::move(arguments);
        doc_["parameters"] = nlohmann::ordered_json::object();
        doc_["seed"] = nullptr;
        doc_["inputs"] = nlohmann::ordered_json::array();
        doc_["outputs"] = nlohmann::ordered_json::array();
    }

    template <class T>
    void parameter(const std::string& name, const T& value) { doc_["parameters"][name] = value; }
    void seed(std::uint64_t s) { doc_["seed"] = s; }
    void input(const fs::path& p) { doc_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
    void output(const fs::path& p) { doc_["outputs"].push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}}); }

    void write(const fs::path& dir) {
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start_;
        doc_["duration_seconds"] = took.count();
        auto out = open_out(dir / "manifest.json");
        out << doc_.dump(2) << '\n';
    }

private:
    std::chrono::steady_clock::time_point start_;
    nlohmann::ordered_json doc_;
};

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t tx_budget = 0;
    std::string out;
};

inline void cmd_synth(const SynthArgs& a, Manifest& manifest) {
    SynthConfig cfg = default_synth_config();
    if (!a.config.empty()) {
        if (!fs::is_regular_file(a.config)) throw UsageError("config file not found: " + a.config);
        auto in = open_in(a.config);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
        }
        update_config(j, cfg);
        manifest.input(a.config);
    }
    if (a.seed_given) cfg.seed = a.seed;  // flags win over the config file
    if (a.tx_budget > 0) cfg.tx_budget = a.tx_budget;
    manifest.seed(cfg.seed);
    manifest.parameter("config", config_to_json(cfg));

    const auto result = generate(cfg);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "ledger.jsonl");
        serialize_ledger(out, result.ledger);
    }
    {
        auto out = open_out(dir / "labels.csv");
        write_labels(out, result.labels);
    }
    {
        auto out = open_out(dir / "truth.csv");
        write_truth_csv(out, result);
    }
    for (const char* f : {"ledger.jsonl", "labels.csv", "truth.csv"}) manifest.output(dir / f);
    log::info("synth: ", result.ledger.size(), " transactions, ", result.truth.size(), " entities, ",
              result.labels.size(), " labeled addresses -> ", dir.string());
}

struct FeaturizeArgs {
    std::string ledger;
    std::string labels;
    std::size_t motif2_cap = 0;
    std::string out;
};

inline void cmd_featurize(const FeaturizeArgs& a, Manifest& manifest) {
    manifest.input(a.ledger);
    manifest.input(a.labels);
    manifest.parameter("motif2_cap", a.motif2_cap);
    std::vector<RawTransaction> ledger;
    {
        auto in = open_in(a.ledger);
        ledger = parse_ledger(in);
    }
    LabelBook labels;
    {
        auto in = open_in(a.labels);
        labels = load_labels(in);
    }
    FeaturizeOptions options;
    options.motif2_per_entity_cap = a.motif2_cap;
    const auto frames = featurize(ledger, labels, options);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    const std::pair<const char*, const FeatureFrame*> files[] = {
        {"entity.csv", &frames.entity}, {"address.csv", &frames.address},
        {"motif1.csv", &frames.motif1}, {"motif2.csv", &frames.motif2}};
    for (const auto& [name, frame] : files) {
        {
            auto out = open_out(dir / name);
            write_frame_csv(out, *frame);
        }
        log::info("featurize: ", name, " ", frame->size(), " rows x ", frame->feature_count(), " features");
        manifest.output(dir / name);
    }
}

struct ExperimentArgs {
    std::string frames;
    std::string experiment = "both";
    std::vector<std::string> models;
    std::string first_level_model = "rf";
    std::uint64_t seed = 42;
    std::string out;
};

inline FeatureFrame load_frame(const fs::path& path, Manifest& manifest) {
    auto in = open_in(path);
    manifest.input(path);
    return read_frame_csv(in);
}

inline void cmd_experiment(const ExperimentArgs& a, Manifest& manifest) {
    std::vector<ml::ModelKind> kinds;
    for (const auto& m : a.models) {
        const auto k = ml::parse_model_kind(m);
        if (!k) throw UsageError("unknown model '" + m + "'");
        if (std::find(kinds.begin(), kinds.end(), *k) == kinds.end()) kinds.push_back(*k);
    }
    const auto first_kind = ml::parse_model_kind(a.first_level_model);
    if (!first_kind) throw UsageError("unknown first-level model '" + a.first_level_model + "'");
    const bool baseline = a.experiment == "baseline" || a.experiment == "both";
    const bool cascade = a.experiment == "cascade" || a.experiment == "both";

    manifest.seed(a.seed);
    manifest.parameter("experiment", a.experiment);
    manifest.parameter("models", a.models);
    manifest.parameter("first_level_model", a.first_level_model);

    const fs::path in_dir(a.frames);
    const FeatureFrame entity = load_frame(in_dir / "entity.csv", manifest);
    std::vector<FirstLevelResult> first;
    if (cascade) {
        const FeatureFrame address = load_frame(in_dir / "address.csv", manifest);
        const FeatureFrame motif1 = load_frame(in_dir / "motif1.csv", manifest);
        const FeatureFrame motif2 = load_frame(in_dir / "motif2.csv", manifest);
        first = run_first_level(entity, address, motif1, motif2, *first_kind, a.seed);
        for (const auto& f : first) {
            log::info("first level ", f.source, ": ", f.split.a_rows.size(), " A rows, CV ", f.cv.score_pct, "%");
        }
    }

    std::vector<EvaluationReport> reports;
    for (auto k : kinds) {
        if (baseline) reports.push_back(run_baseline(entity, k, a.seed));
        if (cascade) reports.push_back(final_stage(entity, first, *first_kind, k, a.seed));
        for (std::size_t i = reports.size() - (baseline + cascade); i < reports.size(); ++i) {
            log::info(reports[i].experiment, " ", ml::model_kind_name(k), ": ", reports[i].cv.score_pct, "% MCC ",
                      reports[i].cv.mcc);
        }
    }

    const auto doc = reports_document(reports);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "report.json");
        out << doc.dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "table.txt");
        out << render_tables(nlohmann::json::parse(doc.dump()));
    }
    manifest.output(dir / "report.json");
    manifest.output(dir / "table.txt");
}

struct ReportArgs {
    std::string report;
    std::string out;
};

inline void cmd_report(const ReportArgs& a, Manifest& manifest) {
    manifest.input(a.report);
    auto in = open_in(a.report);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("report is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "bitcascade-report") throw Error(a.report + " is not a bitcascade report");
    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "table.txt");
        out << render_tables(doc);
    }
    manifest.output(dir / "table.txt");
}

inline int run_cli(std::vector<std::string> args);

/// Re-runs the command recorded in a manifest, optionally into another
/// output directory.
inline int cmd_replay(const std::string& manifest_path, const std::string& out) {
    auto in = open_in(manifest_path);
    const auto doc = nlohmann::json::parse(in);
    auto args = doc.at("arguments").get<std::vector<std::string>>();
    if (doc.at("command") == "replay") throw UsageError("cannot replay a replay manifest");
    if (!out.empty()) {
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out" && i + 1 < args.size()) {
                args[i + 1] = out;
            } else if (args[i].rfind("--out=", 0) == 0) {
                args[i] = "--out=" + out;
            }
        }
    }
    return run_cli(args);
}

// ---------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"bitcascade: entity classification on transaction ledgers"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --threads follow the subcommand
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));

    const std::vector<std::string> model_names = {"adaboost", "rf", "gb"};

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic ledger, label book and truth table");
    synth_cmd->add_option("--config", synth.config, "JSON generator config; keys override the defaults");
    synth_cmd->add_option("--seed", synth.seed, "generator seed (overrides the config)");
    synth_cmd->add_option("--tx-budget", synth.tx_budget, "transaction budget (overrides the config)");
    synth_cmd->add_option("--out", synth.out, "output directory")->required();

    FeaturizeArgs feat;
    auto* feat_cmd = app.add_subcommand("featurize", "build the entity, address, motif1 and motif2 frames");
    feat_cmd->add_option("--ledger", feat.ledger, "ledger JSONL")->required()->check(CLI::ExistingFile);
    feat_cmd->add_option("--labels", feat.labels, "label CSV")->required()->check(CLI::ExistingFile);
    feat_cmd->add_option("--motif2-cap", feat.motif2_cap, "per-middle-entity 2-motif cap, 0 = unlimited");
    feat_cmd->add_option("--out", feat.out, "output directory")->required();

    ExperimentArgs exp;
    exp.models = model_names;
    auto* exp_cmd = app.add_subcommand("experiment", "baseline and cascade cross-validation");
    exp_cmd->add_option("--frames", exp.frames, "directory with the frame CSVs")
        ->required()
        ->check(CLI::ExistingDirectory);
    exp_cmd->add_option("--experiment", exp.experiment, "baseline, cascade or both")
        ->check(CLI::IsMember({"baseline", "cascade", "both"}));
    exp_cmd->add_option("--model", exp.models, "final model(s): adaboost, rf, gb")
        ->check(CLI::IsMember(model_names))
        ->delimiter(',');
    exp_cmd->add_option("--first-level-model", exp.first_level_model, "first-level model")
        ->check(CLI::IsMember(model_names));
    exp_cmd->add_option("--seed", exp.seed, "experiment seed");
    exp_cmd->add_option("--out", exp.out, "output directory")->required();

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "render report.json as text tables");
    rep_cmd->add_option("--report", rep.report, "report JSON")->required()->check(CLI::ExistingFile);
    rep_cmd->add_option("--out", rep.out, "output directory")->required();

    std::string replay_manifest;
    std::string replay_out;
    auto* replay_cmd = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay_cmd->add_option("--manifest", replay_manifest, "manifest.json")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--out", replay_out, "output directory (default: as recorded)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "bitcascade: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }
    synth.seed_given = synth_cmd->count("--seed") > 0;
    parallel::set_threads(threads);

    try {
        if (*replay_cmd) return cmd_replay(replay_manifest, replay_out);
        const std::string command = app.get_subcommands().front()->get_name();
        Manifest manifest(command, args);
        std::string out;
        if (*synth_cmd) {
            cmd_synth(synth, manifest);
            out = synth.out;
        } else if (*feat_cmd) {
            cmd_featurize(feat, manifest);
            out = feat.out;
        } else if (*exp_cmd) {
            cmd_experiment(exp, manifest);
            out = exp.out;
        } else {
            cmd_report(rep, manifest);
            out = rep.out;
        }
        manifest.write(out);
        return kOk;
    } catch (const UsageError& e) {
        std::cerr << "bitcascade: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "bitcascade: error: " << e.what() << '\n';
        return kFailure;
    }
}

inline int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv + 1, argv + argc)); }

}  // namespace bitcascade::cli
