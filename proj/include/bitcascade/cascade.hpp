#pragma once

// The two experiments: a baseline entity classifier, and the cascade where
// classifiers trained on address / 1_motif / 2_motif samples vote on held-out
// samples, and the per-entity vote shares extend the entity frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitcascade/eval.hpp"
#include "bitcascade/features.hpp"
#include "bitcascade/ml/ensemble.hpp"
#include "bitcascade/parallel.hpp"
#include "bitcascade/rng.hpp"

namespace bitcascade {

inline constexpr double kTrainShare = 0.7;
inline constexpr std::size_t kFolds = 5;

struct AbSplit {
    std::vector<std::size_t> a_rows;  // ascending row indices
    std::vector<std::size_t> b_rows;
};

/// Stratified 70/30 split. Each class contributes round(0.7 n) rows to A,
/// clamped so both sides keep at least one row.
inline AbSplit split_ab(const FeatureFrame& frame, std::uint64_t seed) {
    const auto order = canonical_order(frame);
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (auto i : order) by_class[class_index(frame.rows[i].label)].push_back(i);

    AbSplit split;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        if (rows.size() < 2) {
            throw ClassTooSmall("class " + std::string(kClassNames[c]) + " has a single sample; the A/B split needs 2");
        }
        CounterRng rng(seed, "ab", c);
        rng.shuffle(std::span<std::size_t>(rows));
        const auto n = static_cast<double>(rows.size());
        const auto n_a = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(kTrainShare * n)), 1,
                                                 rows.size() - 1);
        split.a_rows.insert(split.a_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_a));
        split.b_rows.insert(split.b_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_a), rows.end());
    }
    std::sort(split.a_rows.begin(), split.a_rows.end());
    std::sort(split.b_rows.begin(), split.b_rows.end());
    return split;
}

struct EntityPrediction {
    EntityId entity = 0;
    EntityClass predicted = EntityClass::Exchange;
};

/// Per entity row of the entity frame: share (in percent) of its samples
/// predicted as each class. Entities without predictions get all zeros.
struct EnrichmentBlock {
    std::vector<EntityId> entities;
    std::vector<std::array<double, kNumClasses>> percentages;
};

inline EnrichmentBlock enrich(const FeatureFrame& entity_frame, std::span<const EntityPrediction> predictions) {
    EnrichmentBlock block;
    std::unordered_map<EntityId, std::size_t> slot;
    for (const auto& row : entity_frame.rows) {
        slot.emplace(row.entity, block.entities.size());
        block.entities.push_back(row.entity);
    }
    std::vector<std::array<std::uint64_t, kNumClasses>> counts(block.entities.size());
    for (const auto& p : predictions) {
        auto it = slot.find(p.entity);
        if (it == slot.end()) throw UnknownEntity("prediction for entity " + std::to_string(p.entity) +
                                                  " which is not in the entity frame");
        ++counts[it->second][class_index(p.predicted)];
    }
    block.percentages.resize(block.entities.size());
    for (std::size_t e = 0; e < counts.size(); ++e) {
        std::uint64_t total = 0;
        for (auto c : counts[e]) total += c;
        for (std::size_t j = 0; j < kNumClasses; ++j) {
            block.percentages[e][j] =
                total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[e][j]) / static_cast<double>(total);
        }
    }
    return block;
}

inline std::string enrichment_column(std::string_view source, EntityClass cls) {
    return std::string(source) + "_pct_" + std::string(class_name(cls));
}

/// Entity frame plus one 6-column block per source, in the given order.
inline FeatureFrame enriched_frame(const FeatureFrame& entity_frame, std::span<const std::string> sources,
                                   std::span<const EnrichmentBlock> blocks) {
    FeatureFrame out = entity_frame;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        if (blocks[s].entities.size() != entity_frame.size()) throw SchemaMismatch("enrichment block size mismatch");
        for (auto cls : kAllClasses) out.schema.push_back({enrichment_column(sources[s], cls), FeatureKind::Numeric});
        for (std::size_t r = 0; r < out.rows.size(); ++r) {
            if (blocks[s].entities[r] != out.rows[r].entity) throw SchemaMismatch("enrichment block order mismatch");
            const auto& pct = blocks[s].percentages[r];
            out.rows[r].values.insert(out.rows[r].values.end(), pct.begin(), pct.end());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiments

struct FirstLevelResult {
    std::string source;
    AbSplit split;
    CvResult cv;  // cross-validation on the A set
    EnrichmentBlock block;
};

struct EvaluationReport {
    std::string experiment;  // "baseline" or "cascade"
    ml::ModelKind model = ml::ModelKind::RandomForest;
    std::optional<ml::ModelKind> first_level_model;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    std::vector<std::string> features;
    CvResult cv;
    std::vector<FirstLevelResult> first_level;
    std::vector<ml::FeatureImportance> importances;
};

/// Checks that every row's entity is in the entity frame with the same label.
inline void check_consistent(const FeatureFrame& entity_frame, const FeatureFrame& frame, std::string_view name) {
    std::unordered_map<EntityId, EntityClass> label_of;
    for (const auto& r : entity_frame.rows) label_of.emplace(r.entity, r.label);
    for (const auto& r : frame.rows) {
        auto it = label_of.find(r.entity);
        if (it == label_of.end()) {
            throw UnknownEntity(std::string(name) + " frame references entity " + std::to_string(r.entity) +
                                " absent from the entity frame");
        }
        if (it->second != r.label) {
            throw InconsistentEntityLabel(std::string(name) + " frame labels entity " + std::to_string(r.entity) +
                                          " differently from the entity frame");
        }
    }
}

/// A/B split, cross-validation on A, training on A, prediction of B and
/// enrichment for one source frame.
inline FirstLevelResult first_level(const std::string& source, const FeatureFrame& frame,
                                    const FeatureFrame& entity_frame, ml::ModelKind kind, std::uint64_t seed) {
    FirstLevelResult r;
    r.source = source;
    r.split = split_ab(frame, derive_key(seed, "cascade.split." + source));
    const FeatureFrame a = frame.subset(r.split.a_rows);
    r.cv = cross_validate(a, kind, kFolds, derive_key(seed, "cascade.cv." + source));
    const auto model = ml::fit_model(kind, a, derive_key(seed, "cascade.model." + source));
    const FeatureFrame b = frame.subset(r.split.b_rows);
    const auto predicted = ml::predict(model, b);
    std::vector<EntityPrediction> votes(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) votes[i] = {b.rows[i].entity, predicted[i]};
    r.block = enrich(entity_frame, votes);
    return r;
}

inline EvaluationReport run_baseline(const FeatureFrame& entity_frame, ml::ModelKind kind, std::uint64_t seed) {
    EvaluationReport report;
    report.experiment = "baseline";
    report.model = kind;
    report.seed = seed;
    report.n_samples = entity_frame.size();
    report.features = entity_frame.feature_names();
    report.cv = cross_validate(entity_frame, kind, kFolds, seed);
    report.importances = ml::feature_importance(ml::fit_model(kind, entity_frame, seed));
    return report;
}

inline const std::array<std::string, 3>& cascade_sources() {
    static const std::array<std::string, 3> names = {"address", "motif1", "motif2"};
    return names;
}

/// First-level stage shared by any number of final models.
inline std::vector<FirstLevelResult> run_first_level(const FeatureFrame& entity_frame,
                                                     const FeatureFrame& address_frame,
                                                     const FeatureFrame& motif1_frame,
                                                     const FeatureFrame& motif2_frame, ml::ModelKind kind,
                                                     std::uint64_t seed) {
    const std::array<const FeatureFrame*, 3> frames = {&address_frame, &motif1_frame, &motif2_frame};
    const auto& names = cascade_sources();
    for (std::size_t s = 0; s < 3; ++s) check_consistent(entity_frame, *frames[s], names[s]);
    std::vector<FirstLevelResult> results(3);
    parallel::for_each_index(3, [&](std::size_t s) {
        results[s] = first_level(names[s], *frames[s], entity_frame, kind, seed);
    });
    return results;
}

inline FeatureFrame enriched_from(const FeatureFrame& entity_frame, const std::vector<FirstLevelResult>& first) {
    std::vector<std::string> sources;
    std::vector<EnrichmentBlock> blocks;
    for (const auto& r : first) {
        sources.push_back(r.source);
        blocks.push_back(r.block);
    }
    return enriched_frame(entity_frame, sources, blocks);
}

inline EvaluationReport final_stage(const FeatureFrame& entity_frame, const std::vector<FirstLevelResult>& first,
                                    ml::ModelKind first_kind, ml::ModelKind final_kind, std::uint64_t seed) {
    const FeatureFrame enriched = enriched_from(entity_frame, first);
    EvaluationReport report;
    report.experiment = "cascade";
    report.model = final_kind;
    report.first_level_model = first_kind;
    report.seed = seed;
    report.n_samples = enriched.size();
    report.features = enriched.feature_names();
    // Same seed as the baseline, so both experiments see identical folds.
    report.cv = cross_validate(enriched, final_kind, kFolds, seed);
    report.first_level = first;
    report.importances = ml::feature_importance(ml::fit_model(final_kind, enriched, seed));
    return report;
}

inline EvaluationReport run_cascade(const FeatureFrame& entity_frame, const FeatureFrame& address_frame,
                                    const FeatureFrame& motif1_frame, const FeatureFrame& motif2_frame,
                                    ml::ModelKind first_level_kind, ml::ModelKind final_kind, std::uint64_t seed) {
    const auto first =
        run_first_level(entity_frame, address_frame, motif1_frame, motif2_frame, first_level_kind, seed);
    return final_stage(entity_frame, first, first_level_kind, final_kind, seed);
}

}  // namespace bitcascade
