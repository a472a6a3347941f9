#pragma once

// Stratified K-fold cross-validation and multiclass metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/features.hpp"
#include "bitcascade/ml/ensemble.hpp"
#include "bitcascade/parallel.hpp"
#include "bitcascade/rng.hpp"

namespace bitcascade {

/// counts[true][predicted], canonical class order.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
        return t;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            for (std::size_t l = 0; l < kNumClasses; ++l) counts[k][l] += other.counts[k][l];
        }
        return *this;
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const EntityClass> truth, std::span<const EntityClass> predicted) {
    if (truth.size() != predicted.size()) {
        throw LengthMismatch(std::to_string(truth.size()) + " true labels vs " + std::to_string(predicted.size()) +
                             " predictions");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[class_index(truth[i])][class_index(predicted[i])];
    return cm;
}

struct MetricsBundle {
    double accuracy_pct = 0.0;
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> f1{};
    double mcc = 0.0;
};

/// Zero denominators give 0 for precision, recall and F1; MCC is 0 when
/// either covariance factor vanishes. An empty matrix yields all zeros.
inline MetricsBundle metrics(const ConfusionMatrix& cm) {
    MetricsBundle m;
    const double total = static_cast<double>(cm.total());
    if (total == 0.0) return m;

    std::array<double, kNumClasses> truth{};  // row sums
    std::array<double, kNumClasses> pred{};   // column sums
    double correct = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        for (std::size_t l = 0; l < kNumClasses; ++l) {
            const auto v = static_cast<double>(cm.counts[k][l]);
            truth[k] += v;
            pred[l] += v;
        }
        correct += static_cast<double>(cm.counts[k][k]);
    }
    m.accuracy_pct = 100.0 * correct / total;

    for (std::size_t j = 0; j < kNumClasses; ++j) {
        const auto tp = static_cast<double>(cm.counts[j][j]);
        m.precision[j] = pred[j] > 0 ? tp / pred[j] : 0.0;
        m.recall[j] = truth[j] > 0 ? tp / truth[j] : 0.0;
        const double denom = m.precision[j] + m.recall[j];
        m.f1[j] = denom > 0 ? 2.0 * m.precision[j] * m.recall[j] / denom : 0.0;
    }

    // Covariance form of the K-class correlation coefficient.
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        pt += pred[k] * truth[k];
        pp += pred[k] * pred[k];
        tt += truth[k] * truth[k];
    }
    const double cov_xy = correct * total - pt;
    const double cov_xx = total * total - pp;
    const double cov_yy = total * total - tt;
    m.mcc = (cov_xx <= 0.0 || cov_yy <= 0.0) ? 0.0 : cov_xy / (std::sqrt(cov_xx) * std::sqrt(cov_yy));
    return m;
}

/// Per class: indices shuffled with a class-keyed stream, then dealt
/// round-robin continuing across classes, so per-class and overall fold
/// sizes each differ by at most one. Indices within a fold are ascending.
inline std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const EntityClass> labels, std::size_t k,
                                                              std::uint64_t seed) {
    if (k < 2) throw Error("k-fold needs k >= 2");
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[class_index(labels[i])].push_back(i);

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t position = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < k) {
            throw ClassTooSmall("class " + std::string(kClassNames[c]) + " has " + std::to_string(members.size()) +
                                " samples, fewer than k = " + std::to_string(k));
        }
        CounterRng rng(seed, "kfold", c);
        rng.shuffle(std::span<std::size_t>(members));
        for (auto i : members) folds[position++ % k].push_back(i);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

/// Permutation putting rows in canonical order (entity, label, values), so
/// seeded splits do not depend on input row order.
inline std::vector<std::size_t> canonical_order(const FeatureFrame& frame) {
    std::vector<std::size_t> order(frame.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = frame.rows[a];
        const auto& rb = frame.rows[b];
        if (ra.entity != rb.entity) return ra.entity < rb.entity;
        if (ra.label != rb.label) return ra.label < rb.label;
        return ra.values < rb.values;
    });
    return order;
}

struct FoldResult {
    std::size_t fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    MetricsBundle metrics;
    ConfusionMatrix confusion;
};

struct CvResult {
    std::vector<FoldResult> folds;
    double score_pct = 0.0;  // mean fold accuracy
    double std_pct = 0.0;    // population std of fold accuracies
    double mcc = 0.0;        // mean fold MCC
    ConfusionMatrix pooled;
    MetricsBundle pooled_metrics;  // per-class values come from here
};

inline CvResult summarize_folds(std::vector<FoldResult> folds) {
    CvResult cv;
    cv.folds = std::move(folds);
    const auto k = static_cast<double>(cv.folds.size());
    for (const auto& f : cv.folds) {
        cv.score_pct += f.metrics.accuracy_pct;
        cv.mcc += f.metrics.mcc;
        cv.pooled += f.confusion;
    }
    cv.score_pct /= k;
    cv.mcc /= k;
    double var = 0.0;
    for (const auto& f : cv.folds) var += (f.metrics.accuracy_pct - cv.score_pct) * (f.metrics.accuracy_pct - cv.score_pct);
    cv.std_pct = std::sqrt(var / k);
    cv.pooled_metrics = metrics(cv.pooled);
    return cv;
}

/// Trains on k-1 folds and evaluates on the held-out fold, k times. Folds
/// are built on the canonical row order; fold i's model uses a seed derived
/// from (seed, i). Folds run in parallel.
inline CvResult cross_validate(const FeatureFrame& frame, ml::ModelKind kind, std::size_t k, std::uint64_t seed) {
    if (frame.empty()) throw EmptyFrame("cannot cross-validate an empty frame");
    const auto order = canonical_order(frame);
    const FeatureFrame canonical = frame.subset(order);
    const auto labels = canonical.labels();
    if (std::all_of(labels.begin(), labels.end(), [&](EntityClass c) { return c == labels.front(); })) {
        throw ClassTooSmall("cross-validation needs at least two classes; every sample is " +
                            std::string(class_name(labels.front())));
    }
    const auto folds = stratified_kfold(labels, k, seed);

    std::vector<FoldResult> results(k);
    parallel::for_each_index(k, [&](std::size_t f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train.begin(), train.end());
        const auto model = ml::fit_model(kind, canonical.subset(train), derive_key(seed, "cv.model", f));
        const FeatureFrame test = canonical.subset(folds[f]);
        const auto predicted = ml::predict(model, test);
        const auto truth = test.labels();
        auto& r = results[f];
        r.fold = f;
        r.n_train = train.size();
        r.n_test = test.size();
        r.confusion = confusion(truth, predicted);
        r.metrics = metrics(r.confusion);
    });
    return summarize_folds(std::move(results));
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true\\predicted";
    for (auto name : kClassNames) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        out << kClassNames[k];
        for (std::size_t l = 0; l < kNumClasses; ++l) out << ',' << cm.counts[k][l];
        out << '\n';
    }
}

}  // namespace bitcascade
