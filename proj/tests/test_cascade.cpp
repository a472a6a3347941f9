#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "bitcascade/cascade.hpp"
#include "bitcascade/pipeline.hpp"
#include "bitcascade/report.hpp"
#include "bitcascade/synth.hpp"
#include "oracles.hpp"

using namespace bitcascade;

namespace {

FeatureFrame labelled_rows(std::initializer_list<std::pair<EntityClass, std::size_t>> counts) {
    FeatureFrame f{make_schema({"x"}), {}};
    EntityId e = 0;
    for (const auto& [cls, n] : counts) {
        for (std::size_t i = 0; i < n; ++i) f.add_row(e, cls, {static_cast<double>(e)}), ++e;
    }
    return f;
}

const FeatureFrames& small_frames() {
    static const FeatureFrames frames = [] {
        auto cfg = default_synth_config();
        for (auto& p : cfg.classes) p.n_entities = 6;
        cfg.tx_budget = 3000;
        cfg.seed = 5;
        const auto synth = generate(cfg);
        return featurize(synth.ledger, synth.labels);
    }();
    return frames;
}

}  // namespace

TEST(SplitAb, TenRows) {
    const auto f = labelled_rows({{EntityClass::Mixer, 10}});
    const auto s = split_ab(f, 1);
    EXPECT_EQ(s.a_rows.size(), 7u);
    EXPECT_EQ(s.b_rows.size(), 3u);
}

TEST(SplitAb, StratifiedPerClass) {
    const auto f = labelled_rows({{EntityClass::Exchange, 50}, {EntityClass::Service, 50}});
    const auto s = split_ab(f, 2);
    std::array<std::size_t, kNumClasses> a{}, b{};
    for (auto i : s.a_rows) ++a[class_index(f.rows[i].label)];
    for (auto i : s.b_rows) ++b[class_index(f.rows[i].label)];
    EXPECT_EQ(a[class_index(EntityClass::Exchange)], 35u);
    EXPECT_EQ(b[class_index(EntityClass::Exchange)], 15u);
    EXPECT_EQ(a[class_index(EntityClass::Service)], 35u);
    EXPECT_EQ(b[class_index(EntityClass::Service)], 15u);
}

TEST(SplitAb, DeterministicDisjointCover) {
    const auto f = labelled_rows({{EntityClass::Exchange, 17}, {EntityClass::Gambling, 9}, {EntityClass::Mixer, 2}});
    const auto s = split_ab(f, 3);
    EXPECT_EQ(s.a_rows, split_ab(f, 3).a_rows);
    EXPECT_EQ(s.b_rows, split_ab(f, 3).b_rows);
    EXPECT_TRUE(std::is_sorted(s.a_rows.begin(), s.a_rows.end()));
    EXPECT_TRUE(std::is_sorted(s.b_rows.begin(), s.b_rows.end()));
    std::set<std::size_t> all(s.a_rows.begin(), s.a_rows.end());
    for (auto i : s.b_rows) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), f.size());
    // at least one row on each side for every class
    std::set<EntityClass> a_classes, b_classes;
    for (auto i : s.a_rows) a_classes.insert(f.rows[i].label);
    for (auto i : s.b_rows) b_classes.insert(f.rows[i].label);
    EXPECT_EQ(a_classes.size(), 3u);
    EXPECT_EQ(b_classes.size(), 3u);
    // a different seed reshuffles
    bool differs = false;
    for (std::uint64_t seed = 4; seed < 10 && !differs; ++seed) differs = split_ab(f, seed).a_rows != s.a_rows;
    EXPECT_TRUE(differs);
}

TEST(SplitAb, RowOrderInvariant) {
    auto f = labelled_rows({{EntityClass::Exchange, 20}, {EntityClass::Mixer, 20}});
    const auto s = split_ab(f, 8);
    std::set<EntityId> a;
    for (auto i : s.a_rows) a.insert(f.rows[i].entity);
    std::reverse(f.rows.begin(), f.rows.end());
    const auto r = split_ab(f, 8);
    std::set<EntityId> ra;
    for (auto i : r.a_rows) ra.insert(f.rows[i].entity);
    EXPECT_EQ(a, ra);
}

TEST(SplitAb, SingletonClassThrows) {
    const auto f = labelled_rows({{EntityClass::Exchange, 5}, {EntityClass::Mixer, 1}});
    EXPECT_THROW(split_ab(f, 1), ClassTooSmall);
}

TEST(Enrich, Percentages) {
    FeatureFrame entities{make_schema({"x"}), {}};
    entities.add_row(10, EntityClass::Exchange, {0});
    entities.add_row(20, EntityClass::Mixer, {0});
    entities.add_row(30, EntityClass::Service, {0});
    const std::vector<EntityPrediction> votes = {{10, EntityClass::Exchange},
                                                 {10, EntityClass::Exchange},
                                                 {10, EntityClass::Mixer},
                                                 {10, EntityClass::Exchange},
                                                 {20, EntityClass::Gambling}};
    const auto block = enrich(entities, votes);
    ASSERT_EQ(block.entities, (std::vector<EntityId>{10, 20, 30}));
    const std::array<double, kNumClasses> first{75, 0, 0, 0, 25, 0}, second{0, 100, 0, 0, 0, 0}, third{};
    EXPECT_EQ(block.percentages[0], first);
    EXPECT_EQ(block.percentages[1], second);
    EXPECT_EQ(block.percentages[2], third);

    const std::vector<EntityPrediction> stray = {{99, EntityClass::Mixer}};
    EXPECT_THROW(enrich(entities, stray), UnknownEntity);
}

TEST(Enrich, RowsSumToHundredOrZero) {
    oracle::Rand r(4);
    FeatureFrame entities{make_schema({"x"}), {}};
    for (EntityId e = 0; e < 20; ++e) entities.add_row(e, EntityClass::Exchange, {0});
    std::vector<EntityPrediction> votes;
    for (int i = 0; i < 200; ++i) votes.push_back({static_cast<EntityId>(r.below(15)), class_from_index(r.below(6))});
    const auto block = enrich(entities, votes);
    for (std::size_t e = 0; e < 20; ++e) {
        double s = 0.0;
        for (double v : block.percentages[e]) {
            EXPECT_GE(v, 0.0);
            s += v;
        }
        if (e < 15 && s > 0.0) {
            EXPECT_NEAR(s, 100.0, 1e-9);
        } else {
            EXPECT_EQ(s, 0.0);
        }
    }
}

TEST(EnrichedFrame, TwentyFiveColumns) {
    const auto& frames = small_frames();
    std::vector<std::string> sources(cascade_sources().begin(), cascade_sources().end());
    std::vector<EnrichmentBlock> blocks(3, enrich(frames.entity, {}));
    const auto out = enriched_frame(frames.entity, sources, blocks);
    ASSERT_EQ(out.schema.size(), 25u);
    EXPECT_EQ(out.schema[7].name, "address_pct_Exchange");
    EXPECT_EQ(out.schema[12].name, "address_pct_Service");
    EXPECT_EQ(out.schema[13].name, "motif1_pct_Exchange");
    EXPECT_EQ(out.schema[24].name, "motif2_pct_Service");
    for (const auto& row : out.rows) EXPECT_EQ(row.values.size(), 25u);
    EXPECT_EQ(enrichment_column("motif2", EntityClass::MiningPool), "motif2_pct_MiningPool");
}

TEST(FirstLevel, NoLeakageFromB) {
    const auto& frames = small_frames();
    const std::uint64_t seed = 13;
    const auto r = first_level("motif1", frames.motif1, frames.entity, ml::ModelKind::RandomForest, seed);

    // independent recomputation: fit on A alone, vote with B
    const auto split = split_ab(frames.motif1, derive_key(seed, "cascade.split.motif1"));
    EXPECT_EQ(split.a_rows, r.split.a_rows);
    const auto model = ml::fit_model(ml::ModelKind::RandomForest, frames.motif1.subset(split.a_rows),
                                     derive_key(seed, "cascade.model.motif1"));
    const auto b = frames.motif1.subset(split.b_rows);
    const auto predicted = ml::predict(model, b);
    std::map<EntityId, std::array<double, kNumClasses>> tally;
    for (std::size_t i = 0; i < b.size(); ++i) tally[b.rows[i].entity][class_index(predicted[i])] += 1.0;
    for (std::size_t e = 0; e < r.block.entities.size(); ++e) {
        auto it = tally.find(r.block.entities[e]);
        if (it == tally.end()) {
            for (double v : r.block.percentages[e]) EXPECT_EQ(v, 0.0);
            continue;
        }
        double n = 0.0;
        for (double v : it->second) n += v;
        for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(r.block.percentages[e][c], 100.0 * it->second[c] / n, 1e-9);
    }

    // wiping B's feature values leaves the A-trained model untouched
    auto wiped = frames.motif1;
    for (auto i : split.b_rows) {
        for (auto& v : wiped.rows[i].values) v = 0.0;
    }
    const auto model_again = ml::fit_model(ml::ModelKind::RandomForest, wiped.subset(split.a_rows),
                                           derive_key(seed, "cascade.model.motif1"));
    EXPECT_EQ(ml::predict(model_again, b), predicted);
}

TEST(Baseline, SingleClassThrows) {
    const auto f = labelled_rows({{EntityClass::Exchange, 20}});
    EXPECT_THROW(run_baseline(f, ml::ModelKind::RandomForest, 1), ClassTooSmall);
}

TEST(Baseline, AboveChanceOnSyntheticEntities) {
    const auto& frames = small_frames();
    ASSERT_EQ(frames.entity.size(), 36u);
    const auto r = run_baseline(frames.entity, ml::ModelKind::GradientBoosting, 42);
    EXPECT_EQ(r.experiment, "baseline");
    EXPECT_EQ(r.cv.folds.size(), 5u);
    EXPECT_GT(r.cv.score_pct, 100.0 / 6.0);
    EXPECT_EQ(r.features.size(), 7u);
    EXPECT_EQ(r.importances.size(), 7u);
    EXPECT_FALSE(r.first_level_model.has_value());
}

TEST(Cascade, RunsOnSmallLedger) {
    const auto& fr = small_frames();
    const auto r = run_cascade(fr.entity, fr.address, fr.motif1, fr.motif2, ml::ModelKind::RandomForest,
                               ml::ModelKind::RandomForest, 42);
    EXPECT_EQ(r.experiment, "cascade");
    EXPECT_EQ(r.features.size(), 25u);
    EXPECT_EQ(r.n_samples, fr.entity.size());
    ASSERT_EQ(r.first_level.size(), 3u);
    for (const auto& f : r.first_level) {
        EXPECT_GT(f.cv.score_pct, 100.0 / 6.0) << f.source;
        EXPECT_EQ(f.block.entities.size(), fr.entity.size());
    }
    const auto baseline = run_baseline(fr.entity, ml::ModelKind::RandomForest, 42);
    // identical seeds give identical folds on identical row sets
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(r.cv.folds[k].n_test, baseline.cv.folds[k].n_test);

    // sharing the first level across final models gives the same report
    const auto first = run_first_level(fr.entity, fr.address, fr.motif1, fr.motif2, ml::ModelKind::RandomForest, 42);
    const auto again = final_stage(fr.entity, first, ml::ModelKind::RandomForest, ml::ModelKind::RandomForest, 42);
    EXPECT_EQ(report_to_json(again).dump(), report_to_json(r).dump());
}

TEST(Cascade, InconsistentFramesRejected) {
    const auto& fr = small_frames();
    auto bad = fr.motif1;
    bad.rows[0].entity = 1u << 30;
    EXPECT_THROW(run_first_level(fr.entity, fr.address, bad, fr.motif2, ml::ModelKind::RandomForest, 1), UnknownEntity);
    auto relabelled = fr.address;
    relabelled.rows[0].label = relabelled.rows[0].label == EntityClass::Mixer ? EntityClass::Exchange : EntityClass::Mixer;
    EXPECT_THROW(run_first_level(fr.entity, relabelled, fr.motif1, fr.motif2, ml::ModelKind::RandomForest, 1),
                 InconsistentEntityLabel);
}

TEST(Report, JsonFieldsAndTables) {
    const auto& fr = small_frames();
    std::vector<EvaluationReport> reports;
    reports.push_back(run_baseline(fr.entity, ml::ModelKind::RandomForest, 42));
    reports.push_back(run_cascade(fr.entity, fr.address, fr.motif1, fr.motif2, ml::ModelKind::RandomForest,
                                  ml::ModelKind::RandomForest, 42));
    const auto doc = reports_document(reports);
    EXPECT_EQ(doc["format"], "bitcascade-report");
    ASSERT_EQ(doc["reports"].size(), 2u);
    for (const auto& r : doc["reports"]) {
        for (const char* key : {"experiment", "model", "first_level_model", "seed", "n_samples", "features", "per_fold",
                                "averages", "per_class", "confusion", "first_level_cv", "importances",
                                "published_reference"}) {
            EXPECT_TRUE(r.contains(key)) << key;
        }
        EXPECT_EQ(r["per_fold"].size(), 5u);
        EXPECT_EQ(r["confusion"].size(), 6u);
        EXPECT_EQ(r["per_class"]["precision"].size(), 6u);
    }
    EXPECT_TRUE(doc["reports"][0]["first_level_model"].is_null());
    EXPECT_EQ(doc["reports"][1]["first_level_cv"].size(), 3u);
    EXPECT_DOUBLE_EQ(doc["reports"][1]["published_reference"]["score_pct"].get<double>(), 98.04);

    const auto text = render_tables(nlohmann::json::parse(doc.dump()));
    EXPECT_NE(text.find("Random Forest"), std::string::npos);
    EXPECT_NE(text.find("C_entity"), std::string::npos);
    EXPECT_NE(text.find("C_final"), std::string::npos);
    EXPECT_NE(text.find("First-level classifiers"), std::string::npos);
    EXPECT_NE(text.find("Top 15 features"), std::string::npos);
    EXPECT_NE(text.find("Mixer"), std::string::npos);
}
