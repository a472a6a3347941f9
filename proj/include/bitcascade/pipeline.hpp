#pragma once

// Ledger + label book -> the four feature frames.

#include <span>

#include "bitcascade/clustering.hpp"
#include "bitcascade/features.hpp"
#include "bitcascade/graph.hpp"
#include "bitcascade/ingest.hpp"
#include "bitcascade/log.hpp"
#include "bitcascade/motifs.hpp"

namespace bitcascade {

struct FeatureFrames {
    FeatureFrame entity;
    FeatureFrame address;
    FeatureFrame motif1;
    FeatureFrame motif2;
};

struct FeaturizeOptions {
    std::size_t motif2_per_entity_cap = 0;  // 0 = unlimited
};

inline FeatureFrames featurize(std::span<const RawTransaction> ledger, const LabelBook& labels,
                               const FeaturizeOptions& options = {}) {
    if (labels.empty()) log::warn("label book is empty; every frame will be empty");
    const auto clustering = cluster_addresses(ledger);
    const auto labeled = label_entities(clustering, labels);
    log::info("clustered " + std::to_string(clustering.address_count()) + " addresses into " +
              std::to_string(clustering.entity_count()) + " entities, " + std::to_string(labeled.labeled().size()) +
              " labeled");
    const auto unmatched = unmatched_label_addresses(clustering, labels);
    if (!unmatched.empty()) {
        log::warn(std::to_string(unmatched.size()) + " labeled addresses never appear in the ledger");
    }

    const auto g_addr = build_address_graph(ledger);
    const auto g = build_entity_graph(ledger, clustering);
    const PairIndex pairs(g);

    FeatureFrames frames;
    frames.entity = entity_features(g, labeled);
    frames.address = address_features(g_addr, clustering, labeled);
    frames.motif1 = motif1_features(extract_1motifs(g), pairs, labeled);
    Motif2Options m2;
    m2.per_entity_cap = options.motif2_per_entity_cap;
    frames.motif2 = motif2_features(extract_2motifs(g, m2), pairs, labeled);
    log::info("frames: entity " + std::to_string(frames.entity.size()) + ", address " +
              std::to_string(frames.address.size()) + ", motif1 " + std::to_string(frames.motif1.size()) +
              ", motif2 " + std::to_string(frames.motif2.size()));
    return frames;
}

}  // namespace bitcascade
