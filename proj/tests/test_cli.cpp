#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using bitcascade::cli::run_cli;
using bitcascade::cli::sha256_file;

namespace {

const fs::path kData = BITCASCADE_TEST_DATA;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("bitcascade_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

std::string output_digest(const nlohmann::json& manifest, const std::string& name) {
    for (const auto& o : manifest.at("outputs"))
        if (o.at("path") == name) return o.at("sha256");
    return "";
}

// small ledger with enough entities per class for the cascade
const fs::path& small_frames_dir() {
    static const fs::path dir = [] {
        const auto root = scratch("shared");
        fs::create_directories(root);
        const auto cfg = root / "config.json";
        {
            std::ofstream out(cfg);
            nlohmann::json j = {{"tx_budget", 3000}, {"seed", 5}, {"classes", nlohmann::json::object()}};
            for (auto name : bitcascade::kClassNames) j["classes"][std::string(name)] = {{"n_entities", 6}};
            out << j.dump();
        }
        EXPECT_EQ(run_cli({"synth", "--config", cfg.string(), "--out", (root / "synth").string()}), 0);
        EXPECT_EQ(run_cli({"featurize", "--ledger", (root / "synth/ledger.jsonl").string(), "--labels",
                           (root / "synth/labels.csv").string(), "--out", (root / "frames").string()}),
                  0);
        return root / "frames";
    }();
    return dir;
}

}  // namespace

TEST(Cli, Sha256KnownVector) {
    const auto p = scratch("sha");
    fs::create_directories(p);
    std::ofstream(p / "abc") << "abc";
    EXPECT_EQ(sha256_file(p / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, SynthWritesThreeFilesAndManifest) {
    const auto out = scratch("synth");
    ASSERT_EQ(run_cli({"synth", "--tx-budget", "500", "--seed", "3", "--out", out.string()}), 0);
    for (const char* f : {"ledger.jsonl", "labels.csv", "truth.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
    EXPECT_GE(line_count(out / "ledger.jsonl"), 500u);
    EXPECT_EQ(first_line(out / "labels.csv"), "address,entity,class");
    EXPECT_EQ(line_count(out / "truth.csv"), 61u);
    const auto m = read_json(out / "manifest.json");
    EXPECT_EQ(m["command"], "synth");
    EXPECT_EQ(m["seed"], 3);
    EXPECT_EQ(m["parameters"]["config"]["tx_budget"], 500);
    EXPECT_EQ(m["outputs"].size(), 3u);
    EXPECT_EQ(output_digest(m, "ledger.jsonl"), sha256_file(out / "ledger.jsonl"));
    EXPECT_TRUE(m.contains("duration_seconds"));
    EXPECT_TRUE(m.contains("version"));
}

TEST(Cli, SeedChangesDigest) {
    const auto a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
    ASSERT_EQ(run_cli({"synth", "--tx-budget", "300", "--seed", "1", "--out", a.string()}), 0);
    ASSERT_EQ(run_cli({"synth", "--tx-budget", "300", "--seed", "2", "--out", b.string()}), 0);
    ASSERT_EQ(run_cli({"synth", "--tx-budget", "300", "--seed", "1", "--out", c.string()}), 0);
    EXPECT_NE(sha256_file(a / "ledger.jsonl"), sha256_file(b / "ledger.jsonl"));
    EXPECT_EQ(sha256_file(a / "ledger.jsonl"), sha256_file(c / "ledger.jsonl"));
}

TEST(Cli, UsageErrorsExitTwo) {
    const auto out = scratch("usage");
    EXPECT_EQ(run_cli({"synth", "--config", (out / "missing.json").string(), "--out", out.string()}), 2);
    EXPECT_EQ(run_cli({}), 2);
    EXPECT_EQ(run_cli({"frobnicate"}), 2);
    EXPECT_EQ(run_cli({"synth"}), 2);  // --out missing
    EXPECT_EQ(run_cli({"featurize", "--ledger", "/nonexistent.jsonl", "--labels", (kData / "labels.csv").string(),
                       "--out", out.string()}),
              2);
    EXPECT_EQ(run_cli({"experiment", "--frames", kData.string(), "--model", "svm", "--out", out.string()}), 2);
    EXPECT_EQ(run_cli({"--threads", "0", "report", "--report", (kData / "labels.csv").string(), "--out", out.string()}), 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
    const auto out = scratch("runtime");
    EXPECT_EQ(run_cli({"featurize", "--ledger", (kData / "ledger_bad.jsonl").string(), "--labels",
                       (kData / "labels.csv").string(), "--out", out.string()}),
              1);
    EXPECT_EQ(run_cli({"report", "--report", (kData / "labels.csv").string(), "--out", out.string()}), 1);
    fs::create_directories(out);
    std::ofstream(out / "bad.json") << R"({"tx_budget": 10})";
    EXPECT_EQ(run_cli({"synth", "--config", (out / "bad.json").string(), "--out", out.string()}), 1);
}

TEST(Cli, FeaturizeFixture) {
    const auto out = scratch("featurize");
    testing::internal::CaptureStderr();
    ASSERT_EQ(run_cli({"featurize", "--ledger", (kData / "ledger.jsonl").string(), "--labels",
                       (kData / "labels.csv").string(), "--out", out.string()}),
              0);
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("1 labeled addresses never appear in the ledger"), std::string::npos) << err;

    EXPECT_EQ(first_line(out / "entity.csv"),
              "entity_id,label,btc_received,btc_sent,balance,n_tx_receiver,n_tx_sender,n_addr_receiving,n_addr_sending");
    EXPECT_EQ(line_count(out / "entity.csv"), 4u);  // Pool, Bourse, Dice
    EXPECT_EQ(line_count(out / "address.csv"), 4u);
    for (const char* f : {"motif1.csv", "motif2.csv"}) {
        std::ifstream in(out / f);
        const auto frame = bitcascade::read_frame_csv(in);
        EXPECT_EQ(frame.feature_count(), std::string(f) == "motif1.csv" ? 8u : 15u) << f;
    }
    const auto m = read_json(out / "manifest.json");
    EXPECT_EQ(m["command"], "featurize");
    ASSERT_EQ(m["inputs"].size(), 2u);
    EXPECT_EQ(m["inputs"][0]["sha256"], sha256_file(kData / "ledger.jsonl"));
    EXPECT_EQ(m["outputs"].size(), 4u);
}

TEST(Cli, FeaturizeEmptyLabels) {
    const auto out = scratch("empty_labels");
    testing::internal::CaptureStderr();
    ASSERT_EQ(run_cli({"featurize", "--ledger", (kData / "ledger.jsonl").string(), "--labels",
                       (kData / "labels_empty.csv").string(), "--out", out.string()}),
              0);
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("label book is empty"), std::string::npos) << err;
    for (const char* f : {"entity.csv", "address.csv", "motif1.csv", "motif2.csv"}) EXPECT_EQ(line_count(out / f), 1u) << f;
}

TEST(Cli, ExperimentSingleModelGivesTwoReports) {
    const auto out = scratch("experiment_gb");
    ASSERT_EQ(run_cli({"experiment", "--frames", small_frames_dir().string(), "--model", "gb", "--out", out.string()}), 0);
    const auto doc = read_json(out / "report.json");
    ASSERT_EQ(doc["reports"].size(), 2u);
    EXPECT_EQ(doc["reports"][0]["experiment"], "baseline");
    EXPECT_EQ(doc["reports"][1]["experiment"], "cascade");
    for (const auto& r : doc["reports"]) EXPECT_EQ(r["model"], "gb");
    EXPECT_EQ(doc["reports"][1]["first_level_model"], "rf");
    EXPECT_TRUE(fs::exists(out / "table.txt"));
    const auto m = read_json(out / "manifest.json");
    EXPECT_EQ(m["seed"], 42);
    EXPECT_EQ(m["inputs"].size(), 4u);
}

TEST(Cli, ExperimentBaselineOnly) {
    const auto out = scratch("experiment_baseline");
    ASSERT_EQ(run_cli({"experiment", "--frames", small_frames_dir().string(), "--experiment", "baseline", "--model",
                       "rf,adaboost", "--out", out.string()}),
              0);
    const auto doc = read_json(out / "report.json");
    ASSERT_EQ(doc["reports"].size(), 2u);
    EXPECT_EQ(doc["reports"][0]["model"], "rf");
    EXPECT_EQ(doc["reports"][1]["model"], "adaboost");
    EXPECT_EQ(read_json(out / "manifest.json")["inputs"].size(), 1u);
}

TEST(Cli, ReplayIsByteIdentical) {
    const auto out = scratch("replay_src");
    ASSERT_EQ(run_cli({"--threads", "2", "experiment", "--frames", small_frames_dir().string(), "--experiment",
                       "cascade", "--model", "rf", "--seed", "7", "--out", out.string()}),
              0);
    const auto again = scratch("replay_dst");
    ASSERT_EQ(run_cli({"replay", "--manifest", (out / "manifest.json").string(), "--out", again.string()}), 0);
    EXPECT_EQ(slurp(out / "report.json"), slurp(again / "report.json"));
    EXPECT_EQ(slurp(out / "table.txt"), slurp(again / "table.txt"));
    const auto a = read_json(out / "manifest.json"), b = read_json(again / "manifest.json");
    EXPECT_EQ(a["outputs"], b["outputs"]);
    EXPECT_EQ(a["seed"], 7);
}

TEST(Cli, ReportRendersTables) {
    const auto src = scratch("report_src");
    ASSERT_EQ(run_cli({"experiment", "--frames", small_frames_dir().string(), "--experiment", "baseline", "--model", "rf",
                       "--out", src.string()}),
              0);
    const auto out = scratch("report_out");
    ASSERT_EQ(run_cli({"report", "--report", (src / "report.json").string(), "--out", out.string()}), 0);
    const auto text = slurp(out / "table.txt");
    EXPECT_EQ(text, slurp(src / "table.txt"));
    EXPECT_NE(text.find("Random Forest"), std::string::npos);
    EXPECT_NE(text.find("Per-class metrics"), std::string::npos);
}
