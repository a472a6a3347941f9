#pragma once

// Tree ensembles: random forest, SAMME AdaBoost over stumps, and multinomial
// deviance gradient boosting. All learners are deterministic functions of
// (frame, seed); per-tree random streams are keyed by tree index.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/features.hpp"
#include "bitcascade/log.hpp"
#include "bitcascade/ml/dataset.hpp"
#include "bitcascade/ml/tree.hpp"
#include "bitcascade/parallel.hpp"
#include "bitcascade/rng.hpp"

namespace bitcascade::ml {

enum class ModelKind { AdaBoost, RandomForest, GradientBoosting };

inline std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::AdaBoost: return "adaboost";
        case ModelKind::RandomForest: return "rf";
        case ModelKind::GradientBoosting: return "gb";
    }
    return "?";
}

inline std::string_view model_kind_title(ModelKind k) {
    switch (k) {
        case ModelKind::AdaBoost: return "Adaboost";
        case ModelKind::RandomForest: return "Random Forest";
        case ModelKind::GradientBoosting: return "Gradient Boosting";
    }
    return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "adaboost") return ModelKind::AdaBoost;
    if (s == "rf") return ModelKind::RandomForest;
    if (s == "gb") return ModelKind::GradientBoosting;
    return std::nullopt;
}

struct Hyperparameters {
    std::size_t n_estimators = 0;
    double learning_rate = 1.0;
    int max_depth = -1;             // per member tree; < 0 unlimited
    std::size_t max_features = 0;   // features tried per split; 0 all
    std::size_t min_rows = 2;
    bool bootstrap = false;

    bool operator==(const Hyperparameters&) const = default;
};

inline Hyperparameters default_hyperparameters(ModelKind kind) {
    switch (kind) {
        case ModelKind::AdaBoost: return {50, 1.0, 1, 0, 2, false};
        case ModelKind::RandomForest: return {10, 1.0, -1, 0, 2, true};
        case ModelKind::GradientBoosting: return {100, 0.1, 3, 0, 2, false};
    }
    return {};
}

struct EnsembleModel {
    ModelKind kind = ModelKind::RandomForest;
    std::uint64_t seed = 0;
    Hyperparameters hyperparameters;
    std::vector<std::string> features;
    /// RF: one per estimator. AdaBoost: one stump per accepted stage.
    /// GB: stage-major, kNumClasses trees per stage.
    std::vector<DecisionTree> trees;
    /// AdaBoost stage weights; empty otherwise.
    std::vector<double> tree_weights;
    /// AdaBoost weighted error of each accepted stage.
    std::vector<double> stage_errors;
    /// GB initial raw scores (log class priors).
    std::array<double, kNumClasses> init_scores{};

    std::size_t stage_count() const {
        return kind == ModelKind::GradientBoosting ? trees.size() / kNumClasses : trees.size();
    }

    bool operator==(const EnsembleModel&) const = default;
};

namespace detail {

inline std::size_t argmax(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return best;
}

inline void require_rows(const FeatureFrame& frame, std::string_view what) {
    if (frame.empty()) throw EmptyFrame(std::string("cannot fit ") + std::string(what) + " on an empty frame");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random forest

inline EnsembleModel fit_random_forest(const FeatureFrame& frame, std::uint64_t seed) {
    detail::require_rows(frame, "a random forest");
    EnsembleModel model;
    model.kind = ModelKind::RandomForest;
    model.seed = seed;
    model.features = frame.feature_names();
    model.hyperparameters = default_hyperparameters(ModelKind::RandomForest);
    const std::size_t d = frame.feature_count();
    model.hyperparameters.max_features =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));

    const Dataset data = to_dataset(frame);
    const SortedColumns sorted = presort(data);
    const auto& hp = model.hyperparameters;
    model.trees.resize(hp.n_estimators);

    parallel::for_each_index(hp.n_estimators, [&](std::size_t t) {
        CounterRng draws(seed, "forest.bootstrap", t);
        std::vector<double> counts(data.n_rows, 0.0);
        for (std::size_t i = 0; i < data.n_rows; ++i) counts[draws.below(data.n_rows)] += 1.0;
        GiniCriterion gini{data.labels, counts};
        const TreeConfig config{hp.max_depth, hp.max_features, hp.min_rows};
        model.trees[t] = build_tree(data, gini, config, restrict_to(sorted, counts),
                                    CounterRng(seed, "forest.features", t));
    });
    return model;
}

// ---------------------------------------------------------------------------
// AdaBoost (SAMME, decision stumps)

inline EnsembleModel fit_adaboost(const FeatureFrame& frame, std::uint64_t seed) {
    detail::require_rows(frame, "AdaBoost");
    EnsembleModel model;
    model.kind = ModelKind::AdaBoost;
    model.seed = seed;
    model.features = frame.feature_names();
    model.hyperparameters = default_hyperparameters(ModelKind::AdaBoost);
    const auto& hp = model.hyperparameters;

    const Dataset data = to_dataset(frame);
    const SortedColumns sorted = presort(data);
    const std::size_t n = data.n_rows;

    std::array<bool, kNumClasses> present{};
    for (auto y : data.labels) present[y] = true;
    const auto k = static_cast<double>(std::count(present.begin(), present.end(), true));

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const TreeConfig stump{hp.max_depth, 0, hp.min_rows};
    std::vector<char> miss(n);

    for (std::size_t stage = 0; stage < hp.n_estimators; ++stage) {
        GiniCriterion gini{data.labels, w};
        DecisionTree tree = build_tree(data, gini, stump, restrict_to(sorted, w));

        double err = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = tree.predict_row(data, i);
            miss[i] = detail::argmax(p) != data.labels[i];
            if (miss[i]) err += w[i];
            total += w[i];
        }
        err /= total;

        if (err <= 0.0) {
            model.trees.push_back(std::move(tree));
            model.tree_weights.push_back(1.0);
            model.stage_errors.push_back(0.0);
            break;
        }
        if (err >= 1.0 - 1.0 / k) {
            if (model.trees.empty()) {
                // No stump beats chance; keep the first one alone.
                log::debug("adaboost: first stump has error ", err, " >= 1 - 1/K; keeping it as the only member");
                model.trees.push_back(std::move(tree));
                model.tree_weights.push_back(1.0);
                model.stage_errors.push_back(err);
            }
            break;
        }

        const double alpha = hp.learning_rate * (std::log((1.0 - err) / err) + std::log(k - 1.0));
        model.trees.push_back(std::move(tree));
        model.tree_weights.push_back(alpha);
        model.stage_errors.push_back(err);

        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (miss[i] && w[i] > 0.0) w[i] *= std::exp(alpha);
            sum += w[i];
        }
        for (auto& v : w) v /= sum;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Gradient boosting (multinomial deviance, one regression tree per class)

inline constexpr double kPriorFloor = 1.1920928955078125e-07;  // float32 epsilon

inline void softmax(std::span<const double> scores, std::span<double> out) {
    double hi = scores[0];
    for (double s : scores) hi = std::max(hi, s);
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        out[c] = std::exp(scores[c] - hi);
        sum += out[c];
    }
    for (auto& v : out) v /= sum;
}

inline EnsembleModel fit_gradient_boosting(const FeatureFrame& frame, std::uint64_t seed) {
    detail::require_rows(frame, "gradient boosting");
    EnsembleModel model;
    model.kind = ModelKind::GradientBoosting;
    model.seed = seed;
    model.features = frame.feature_names();
    model.hyperparameters = default_hyperparameters(ModelKind::GradientBoosting);
    const auto& hp = model.hyperparameters;
    constexpr std::size_t K = kNumClasses;

    const Dataset data = to_dataset(frame);
    const SortedColumns sorted = presort(data);
    const std::size_t n = data.n_rows;

    std::array<double, K> prior{};
    for (auto y : data.labels) prior[y] += 1.0;
    for (std::size_t c = 0; c < K; ++c) {
        model.init_scores[c] = std::log(std::clamp(prior[c] / static_cast<double>(n), kPriorFloor, 1.0 - kPriorFloor));
    }

    std::vector<double> scores(n * K);
    for (std::size_t i = 0; i < n; ++i) std::copy(model.init_scores.begin(), model.init_scores.end(), &scores[i * K]);
    std::vector<double> probs(n * K);
    std::vector<std::vector<double>> residual(K, std::vector<double>(n));
    std::vector<std::vector<double>> hessian(K, std::vector<double>(n));
    const TreeConfig config{hp.max_depth, hp.max_features, hp.min_rows};
    const double newton_scale = static_cast<double>(K - 1) / static_cast<double>(K);

    model.trees.resize(hp.n_estimators * K);
    for (std::size_t stage = 0; stage < hp.n_estimators; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            softmax(std::span<const double>(&scores[i * K], K), std::span<double>(&probs[i * K], K));
        }
        parallel::for_each_index(K, [&](std::size_t c) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = probs[i * K + c];
                residual[c][i] = (data.labels[i] == c ? 1.0 : 0.0) - p;
                hessian[c][i] = p * (1.0 - p);
            }
            NewtonCriterion crit{residual[c], hessian[c], newton_scale};
            model.trees[stage * K + c] = build_tree(data, crit, config, sorted);
        });
        for (std::size_t c = 0; c < K; ++c) {
            const auto& tree = model.trees[stage * K + c];
            for (std::size_t i = 0; i < n; ++i) scores[i * K + c] += hp.learning_rate * tree.predict_row(data, i)[0];
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Prediction

inline void check_schema(const EnsembleModel& model, const FeatureFrame& frame) {
    if (frame.feature_names() != model.features) {
        throw SchemaMismatch("frame schema does not match the model's " + std::to_string(model.features.size()) +
                             " features");
    }
}

/// Per-class decision scores for one row. For GB, `stages` limits how many
/// boosting stages are summed (default: all).
inline std::array<double, kNumClasses> decision_scores(const EnsembleModel& model, std::span<const double> row,
                                                       std::size_t stages = SIZE_MAX) {
    std::array<double, kNumClasses> s{};
    switch (model.kind) {
        case ModelKind::RandomForest:
            for (const auto& tree : model.trees) {
                const auto& p = tree.predict_row(row);
                for (std::size_t c = 0; c < kNumClasses; ++c) s[c] += p[c];
            }
            for (auto& v : s) v /= static_cast<double>(std::max<std::size_t>(1, model.trees.size()));
            break;
        case ModelKind::AdaBoost:
            for (std::size_t t = 0; t < model.trees.size(); ++t) {
                s[detail::argmax(model.trees[t].predict_row(row))] += model.tree_weights[t];
            }
            break;
        case ModelKind::GradientBoosting: {
            s = model.init_scores;
            const std::size_t used = std::min(stages, model.stage_count());
            for (std::size_t stage = 0; stage < used; ++stage) {
                for (std::size_t c = 0; c < kNumClasses; ++c) {
                    s[c] += model.hyperparameters.learning_rate *
                            model.trees[stage * kNumClasses + c].predict_row(row)[0];
                }
            }
            break;
        }
    }
    return s;
}

inline std::vector<EntityClass> predict(const EnsembleModel& model, const FeatureFrame& frame) {
    check_schema(model, frame);
    std::vector<EntityClass> out(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto s = decision_scores(model, frame.rows[i].values);
        out[i] = class_from_index(detail::argmax(s));
    }
    return out;
}

/// Multinomial log-loss of a GB model on `frame` after `stages` stages.
inline double log_loss(const EnsembleModel& model, const FeatureFrame& frame, std::size_t stages) {
    check_schema(model, frame);
    double total = 0.0;
    std::array<double, kNumClasses> p{};
    for (const auto& row : frame.rows) {
        const auto s = decision_scores(model, row.values, stages);
        softmax(s, p);
        total -= std::log(std::max(p[class_index(row.label)], 1e-300));
    }
    return total / static_cast<double>(std::max<std::size_t>(1, frame.size()));
}

// ---------------------------------------------------------------------------
// Importance

struct FeatureImportance {
    std::string feature;
    double score = 0.0;

    bool operator==(const FeatureImportance&) const = default;
};

/// Impurity-decrease importance summed over all member trees (AdaBoost
/// weights each stump by its stage weight), normalized to sum to 1 and
/// ranked descending with ties by feature index. All zero when no tree splits.
inline std::vector<FeatureImportance> feature_importance(const EnsembleModel& model) {
    std::vector<double> raw(model.features.size(), 0.0);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const double scale = model.kind == ModelKind::AdaBoost ? model.tree_weights[t] : 1.0;
        for (const auto& node : model.trees[t].nodes()) {
            if (!node.is_leaf()) raw[node.feature] += scale * node.gain;
        }
    }
    double total = 0.0;
    for (double v : raw) total += v;
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (total > 0.0) {
        for (auto& v : raw) v /= total;
    } else {
        std::fill(raw.begin(), raw.end(), 0.0);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });
    std::vector<FeatureImportance> ranked;
    for (auto f : order) ranked.push_back({model.features[f], raw[f]});
    return ranked;
}

inline EnsembleModel fit_model(ModelKind kind, const FeatureFrame& frame, std::uint64_t seed) {
    switch (kind) {
        case ModelKind::AdaBoost: return fit_adaboost(frame, seed);
        case ModelKind::RandomForest: return fit_random_forest(frame, seed);
        case ModelKind::GradientBoosting: return fit_gradient_boosting(frame, seed);
    }
    throw Error("unknown model kind");
}

}  // namespace bitcascade::ml
