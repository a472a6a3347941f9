#pragma once

// EvaluationReport serialization (JSON) and plain-text table rendering.

#include <algorithm>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitcascade/cascade.hpp"

namespace bitcascade {

struct PublishedScore {
    double score_pct;
    double std_pct;
    double mcc;
};

/// Published full-chain results for each model and experiment, carried in
/// reports as reference metadata. Not reproducible on synthetic ledgers.
inline PublishedScore published_score(ml::ModelKind kind, std::string_view experiment) {
    const bool cascade = experiment == "cascade";
    switch (kind) {
        case ml::ModelKind::AdaBoost: return cascade ? PublishedScore{78.84, 1.76, 0.76} : PublishedScore{45.63, 6.34, 0.22};
        case ml::ModelKind::RandomForest: return cascade ? PublishedScore{98.04, 1.22, 0.97} : PublishedScore{59.71, 1.82, 0.41};
        case ml::ModelKind::GradientBoosting: return cascade ? PublishedScore{99.68, 0.63, 0.99} : PublishedScore{61.90, 1.36, 0.44};
    }
    return {0, 0, 0};
}

/// Published first-level accuracies (address, motif1, motif2).
inline std::array<double, 3> published_first_level(ml::ModelKind kind) {
    switch (kind) {
        case ml::ModelKind::AdaBoost: return {61.54, 72.69, 78.27};
        case ml::ModelKind::RandomForest: return {95.73, 94.14, 90.88};
        case ml::ModelKind::GradientBoosting: return {83.23, 83.52, 83.54};
    }
    return {0, 0, 0};
}

inline nlohmann::ordered_json per_class_json(const MetricsBundle& m) {
    nlohmann::ordered_json precision, recall, f1;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::string name(kClassNames[c]);
        precision[name] = m.precision[c];
        recall[name] = m.recall[c];
        f1[name] = m.f1[c];
    }
    return {{"precision", precision}, {"recall", recall}, {"f1", f1}};
}

inline nlohmann::ordered_json confusion_json(const ConfusionMatrix& cm) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : cm.counts) rows.push_back(row);
    return rows;
}

inline nlohmann::ordered_json cv_json(const CvResult& cv) {
    auto folds = nlohmann::ordered_json::array();
    for (const auto& f : cv.folds) {
        folds.push_back({{"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"score_pct", f.metrics.accuracy_pct},
                         {"mcc", f.metrics.mcc}});
    }
    return {{"per_fold", folds}, {"averages", {{"score_pct", cv.score_pct}, {"std_pct", cv.std_pct}, {"mcc", cv.mcc}}}};
}

inline nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
    nlohmann::ordered_json doc;
    doc["experiment"] = r.experiment;
    doc["model"] = std::string(ml::model_kind_name(r.model));
    doc["first_level_model"] =
        r.first_level_model ? nlohmann::ordered_json(std::string(ml::model_kind_name(*r.first_level_model)))
                            : nlohmann::ordered_json(nullptr);
    doc["seed"] = r.seed;
    doc["n_samples"] = r.n_samples;
    doc["features"] = r.features;
    const auto cv = cv_json(r.cv);
    doc["per_fold"] = cv["per_fold"];
    doc["averages"] = cv["averages"];
    doc["per_class"] = per_class_json(r.cv.pooled_metrics);
    doc["per_class_source"] = "pooled confusion matrix over all folds";
    doc["confusion"] = confusion_json(r.cv.pooled);

    nlohmann::ordered_json first = nlohmann::ordered_json::object();
    for (const auto& f : r.first_level) {
        auto entry = cv_json(f.cv);
        entry["a_rows"] = f.split.a_rows.size();
        entry["b_rows"] = f.split.b_rows.size();
        first[f.source] = std::move(entry);
    }
    doc["first_level_cv"] = std::move(first);

    auto importances = nlohmann::ordered_json::array();
    for (const auto& imp : r.importances) importances.push_back({{"feature", imp.feature}, {"score", imp.score}});
    doc["importances"] = std::move(importances);

    const auto ref = published_score(r.model, r.experiment);
    nlohmann::ordered_json published = {{"score_pct", ref.score_pct}, {"std_pct", ref.std_pct}, {"mcc", ref.mcc}};
    if (r.first_level_model) {
        const auto fl = published_first_level(*r.first_level_model);
        published["first_level_cv_pct"] = {{"address", fl[0]}, {"motif1", fl[1]}, {"motif2", fl[2]}};
    }
    doc["published_reference"] = std::move(published);
    return doc;
}

inline nlohmann::ordered_json reports_document(std::span<const EvaluationReport> reports) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& r : reports) list.push_back(report_to_json(r));
    return {{"format", "bitcascade-report"}, {"version", 1}, {"reports", list}};
}

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

inline std::string lpad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

}  // namespace detail

/// Text rendering of the parsed report document: score table, first-level
/// table, per-class table and the top-15 importances of each report.
inline std::string render_tables(const nlohmann::json& document) {
    using detail::fixed;
    using detail::lpad;
    using detail::pad;
    std::ostringstream out;
    const auto& reports = document.at("reports");
    auto title = [](const std::string& kind) {
        return std::string(ml::model_kind_title(ml::parse_model_kind(kind).value_or(ml::ModelKind::RandomForest)));
    };
    auto classifier = [](const nlohmann::json& r) {
        return r.at("experiment").get<std::string>() == "cascade" ? std::string("C_final") : std::string("C_entity");
    };

    out << "Cross-validated classification (5 folds)\n";
    out << pad("Model", 20) << pad("Classifier", 12) << lpad("Score %", 9) << lpad("Std %", 8) << lpad("MCC", 7)
        << "   | published Score % / Std % / MCC\n";
    for (const auto& r : reports) {
        const auto& avg = r.at("averages");
        const auto& ref = r.at("published_reference");
        out << pad(title(r.at("model")), 20) << pad(classifier(r), 12)
            << lpad(fixed(avg.at("score_pct").get<double>(), 2), 9) << lpad(fixed(avg.at("std_pct").get<double>(), 2), 8)
            << lpad(fixed(avg.at("mcc").get<double>(), 2), 7) << "   | " << fixed(ref.at("score_pct").get<double>(), 2)
            << " / " << fixed(ref.at("std_pct").get<double>(), 2) << " / " << fixed(ref.at("mcc").get<double>(), 2)
            << '\n';
    }

    bool header = false;
    std::vector<std::string> shown;  // one row per first-level model
    for (const auto& r : reports) {
        const auto& first = r.at("first_level_cv");
        if (first.empty()) continue;
        const auto first_model = r.at("first_level_model").get<std::string>();
        if (std::find(shown.begin(), shown.end(), first_model) != shown.end()) continue;
        shown.push_back(first_model);
        if (!header) {
            out << "\nFirst-level classifiers (5-fold CV on the A set)\n";
            out << pad("Model", 20) << lpad("C_address %", 13) << lpad("C_motif1 %", 12) << lpad("C_motif2 %", 12)
                << "   | published\n";
            header = true;
        }
        const auto& ref = r.at("published_reference").at("first_level_cv_pct");
        out << pad(title(r.at("first_level_model")), 20);
        out << lpad(fixed(first.at("address").at("averages").at("score_pct").get<double>(), 2), 13);
        out << lpad(fixed(first.at("motif1").at("averages").at("score_pct").get<double>(), 2), 12);
        out << lpad(fixed(first.at("motif2").at("averages").at("score_pct").get<double>(), 2), 12);
        out << "   | " << fixed(ref.at("address").get<double>(), 2) << " / " << fixed(ref.at("motif1").get<double>(), 2)
            << " / " << fixed(ref.at("motif2").get<double>(), 2) << '\n';
    }

    out << "\nPer-class metrics (pooled over folds)\n";
    out << pad("Class", 14) << pad("Model", 20) << pad("Classifier", 12) << lpad("Precision", 10) << lpad("Recall", 8)
        << lpad("F1", 7) << '\n';
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::string name(kClassNames[c]);
        for (const auto& r : reports) {
            const auto& pc = r.at("per_class");
            out << pad(name, 14) << pad(title(r.at("model")), 20) << pad(classifier(r), 12)
                << lpad(fixed(pc.at("precision").at(name).get<double>(), 2), 10)
                << lpad(fixed(pc.at("recall").at(name).get<double>(), 2), 8)
                << lpad(fixed(pc.at("f1").at(name).get<double>(), 2), 7) << '\n';
        }
    }

    for (const auto& r : reports) {
        out << "\nTop 15 features: " << title(r.at("model")) << ' ' << classifier(r) << '\n';
        std::size_t shown = 0;
        for (const auto& imp : r.at("importances")) {
            if (shown++ == 15) break;
            out << "  " << lpad(std::to_string(shown), 2) << ". " << pad(imp.at("feature").get<std::string>(), 28)
                << fixed(imp.at("score").get<double>(), 4) << '\n';
        }
    }
    return out.str();
}

}  // namespace bitcascade
