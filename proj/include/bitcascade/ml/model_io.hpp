#pragma once

// Versioned JSON model documents. Doubles are written in shortest
// round-trip form, so a reloaded model predicts bit-identically.

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bitcascade/error.hpp"
#include "bitcascade/ml/ensemble.hpp"

namespace bitcascade::ml {

inline constexpr const char* kModelFormat = "bitcascade-ensemble";
inline constexpr int kModelVersion = 1;

inline nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
    nlohmann::ordered_json feature = nlohmann::ordered_json::array(), threshold = nlohmann::ordered_json::array(),
                           left = nlohmann::ordered_json::array(), right = nlohmann::ordered_json::array(),
                           weight = nlohmann::ordered_json::array(), gain = nlohmann::ordered_json::array(),
                           value = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        weight.push_back(n.weight);
        gain.push_back(n.gain);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
            {"weight", weight},   {"gain", gain},           {"value", value}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    const auto& feature = j.at("feature");
    std::vector<TreeNode> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i].feature = feature[i].get<int>();
        nodes[i].threshold = j.at("threshold")[i].get<double>();
        nodes[i].left = j.at("left")[i].get<int>();
        nodes[i].right = j.at("right")[i].get<int>();
        nodes[i].weight = j.at("weight")[i].get<double>();
        nodes[i].gain = j.at("gain")[i].get<double>();
        nodes[i].value = j.at("value")[i].get<std::vector<double>>();
    }
    const auto n = static_cast<int>(nodes.size());
    for (const auto& node : nodes) {
        if (!node.is_leaf() && (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)) {
            throw Error("model tree has out-of-range child index");
        }
    }
    if (nodes.empty()) throw Error("model tree has no nodes");
    return DecisionTree(std::move(nodes));
}

inline nlohmann::ordered_json model_to_json(const EnsembleModel& m) {
    const auto& hp = m.hyperparameters;
    nlohmann::ordered_json doc;
    doc["format"] = kModelFormat;
    doc["version"] = kModelVersion;
    doc["kind"] = std::string(model_kind_name(m.kind));
    doc["seed"] = m.seed;
    doc["hyperparameters"] = {{"n_estimators", hp.n_estimators}, {"learning_rate", hp.learning_rate},
                              {"max_depth", hp.max_depth},       {"max_features", hp.max_features},
                              {"min_rows", hp.min_rows},         {"bootstrap", hp.bootstrap}};
    doc["features"] = m.features;
    doc["init_scores"] = m.init_scores;
    doc["tree_weights"] = m.tree_weights;
    doc["stage_errors"] = m.stage_errors;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
    doc["trees"] = std::move(trees);
    return doc;
}

inline EnsembleModel model_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != kModelFormat) throw Error("not a bitcascade model document");
    if (doc.at("version").get<int>() != kModelVersion) {
        throw Error("unsupported model version " + doc.at("version").dump());
    }
    EnsembleModel m;
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    if (!kind) throw Error("unknown model kind " + doc.at("kind").dump());
    m.kind = *kind;
    m.seed = doc.at("seed").get<std::uint64_t>();
    const auto& hp = doc.at("hyperparameters");
    m.hyperparameters.n_estimators = hp.at("n_estimators").get<std::size_t>();
    m.hyperparameters.learning_rate = hp.at("learning_rate").get<double>();
    m.hyperparameters.max_depth = hp.at("max_depth").get<int>();
    m.hyperparameters.max_features = hp.at("max_features").get<std::size_t>();
    m.hyperparameters.min_rows = hp.at("min_rows").get<std::size_t>();
    m.hyperparameters.bootstrap = hp.at("bootstrap").get<bool>();
    m.features = doc.at("features").get<std::vector<std::string>>();
    m.init_scores = doc.at("init_scores").get<std::array<double, kNumClasses>>();
    m.tree_weights = doc.at("tree_weights").get<std::vector<double>>();
    m.stage_errors = doc.at("stage_errors").get<std::vector<double>>();
    for (const auto& t : doc.at("trees")) m.trees.push_back(tree_from_json(t));
    for (const auto& t : m.trees) {
        for (const auto& node : t.nodes()) {
            if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= m.features.size()) {
                throw Error("model tree splits on unknown feature index");
            }
        }
    }
    return m;
}

inline void save_model(std::ostream& out, const EnsembleModel& m) { out << model_to_json(m).dump() << '\n'; }

inline EnsembleModel load_model(std::istream& in) {
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace bitcascade::ml
