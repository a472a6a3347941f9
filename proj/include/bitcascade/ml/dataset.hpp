#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "bitcascade/features.hpp"

namespace bitcascade::ml {

/// Column-major copy of a feature frame for training.
struct Dataset {
    std::size_t n_rows = 0;
    std::vector<std::vector<double>> columns;
    std::vector<std::uint8_t> labels;

    std::size_t n_features() const { return columns.size(); }
    double at(std::size_t row, std::size_t feature) const { return columns[feature][row]; }
};

inline Dataset to_dataset(const FeatureFrame& frame) {
    Dataset d;
    d.n_rows = frame.size();
    d.columns.assign(frame.feature_count(), std::vector<double>(d.n_rows));
    d.labels.resize(d.n_rows);
    for (std::size_t i = 0; i < d.n_rows; ++i) {
        const auto& row = frame.rows[i];
        for (std::size_t j = 0; j < row.values.size(); ++j) d.columns[j][i] = row.values[j];
        d.labels[i] = static_cast<std::uint8_t>(class_index(row.label));
    }
    return d;
}

/// Row indices sorted by each feature (ties by row index).
using SortedColumns = std::vector<std::vector<std::uint32_t>>;

inline SortedColumns presort(const Dataset& data) {
    SortedColumns sorted(data.n_features());
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        auto& order = sorted[f];
        order.resize(data.n_rows);
        std::iota(order.begin(), order.end(), 0u);
        const auto& col = data.columns[f];
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return col[a] != col[b] ? col[a] < col[b] : a < b;
        });
    }
    return sorted;
}

/// Keeps only rows with positive weight, preserving sort order.
inline SortedColumns restrict_to(const SortedColumns& sorted, std::span<const double> weights) {
    SortedColumns out(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
        out[f].reserve(sorted[f].size());
        for (auto row : sorted[f]) {
            if (weights[row] > 0.0) out[f].push_back(row);
        }
    }
    return out;
}

}  // namespace bitcascade::ml
