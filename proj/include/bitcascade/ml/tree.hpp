#pragma once

// Greedy CART trees over presorted columns.
//
// Every node owns the same contiguous range [begin, end) in each feature's
// sorted row list; splitting stably partitions all lists, so a level costs
// O(rows * features) with no re-sorting. Candidate thresholds lie midway
// between consecutive distinct values and rows with x <= threshold go left.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/ml/dataset.hpp"
#include "bitcascade/rng.hpp"

namespace bitcascade::ml {

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // total sample weight reaching the node
    double gain = 0.0;    // weighted impurity decrease of the split
    std::vector<double> value;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    template <class RowAccess>
    int leaf_index(RowAccess&& feature_value) const {
        int n = 0;
        while (!nodes_[n].is_leaf()) {
            n = feature_value(nodes_[n].feature) <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
        }
        return n;
    }

    const std::vector<double>& predict_row(std::span<const double> row) const {
        return nodes_[leaf_index([&](int f) { return row[f]; })].value;
    }

    const std::vector<double>& predict_row(const Dataset& data, std::size_t row) const {
        return nodes_[leaf_index([&](int f) { return data.columns[f][row]; })].value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& nodes() { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [n, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes_[n].is_leaf()) {
                stack.push_back({nodes_[n].left, d + 1});
                stack.push_back({nodes_[n].right, d + 1});
            }
        }
        return best;
    }

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeConfig {
    int max_depth = -1;                 // < 0: unlimited
    std::size_t feature_subsample = 0;  // features tried per node; 0: all
    std::size_t min_rows = 2;           // nodes with fewer rows become leaves
};

// ---------------------------------------------------------------------------
// Split criteria

/// Weighted Gini impurity over the six canonical classes; leaves hold class
/// probability vectors.
struct GiniCriterion {
    std::span<const std::uint8_t> labels;
    std::span<const double> weights;

    struct Stats {
        std::array<double, kNumClasses> w{};
        double total = 0.0;
    };

    void add(Stats& s, std::uint32_t row) const {
        s.w[labels[row]] += weights[row];
        s.total += weights[row];
    }

    static Stats minus(const Stats& a, const Stats& b) {
        Stats r;
        for (std::size_t c = 0; c < kNumClasses; ++c) r.w[c] = a.w[c] - b.w[c];
        r.total = a.total - b.total;
        return r;
    }

    static double sum_sq_over_total(const Stats& s) {
        double sq = 0.0;
        for (double v : s.w) sq += v * v;
        return sq / s.total;
    }

    // Larger is better; equals total weight minus weighted child impurity.
    static double proxy(const Stats& left, const Stats& right) {
        return sum_sq_over_total(left) + sum_sq_over_total(right);
    }

    /// Node weight times Gini impurity.
    static double impurity(const Stats& s) { return s.total > 0 ? s.total - sum_sq_over_total(s) : 0.0; }

    static bool is_pure(const Stats& s) {
        int present = 0;
        for (double v : s.w) present += v > 0.0;
        return present <= 1;
    }

    std::vector<double> leaf_value(const Stats& s) const {
        std::vector<double> p(kNumClasses, 0.0);
        for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = s.w[c] / s.total;
        return p;
    }
};

/// Squared-error regression on residuals. Leaves take a Newton step
/// `scale * sum(residual) / sum(hessian)` (multinomial deviance boosting).
struct NewtonCriterion {
    std::span<const double> residuals;
    std::span<const double> hessians;
    double scale = 1.0;

    struct Stats {
        double sum = 0.0;
        double sum_sq = 0.0;
        double hess = 0.0;
        double total = 0.0;
    };

    void add(Stats& s, std::uint32_t row) const {
        const double r = residuals[row];
        s.sum += r;
        s.sum_sq += r * r;
        s.hess += hessians[row];
        s.total += 1.0;
    }

    static Stats minus(const Stats& a, const Stats& b) {
        return {a.sum - b.sum, a.sum_sq - b.sum_sq, a.hess - b.hess, a.total - b.total};
    }

    static double proxy(const Stats& left, const Stats& right) {
        return left.sum * left.sum / left.total + right.sum * right.sum / right.total;
    }

    static double impurity(const Stats& s) {
        return s.total > 0 ? std::max(0.0, s.sum_sq - s.sum * s.sum / s.total) : 0.0;
    }

    static bool is_pure(const Stats& s) {
        const double mean = s.sum / s.total;
        return s.sum_sq / s.total - mean * mean <= 2.220446049250313e-16;
    }

    std::vector<double> leaf_value(const Stats& s) const {
        if (std::abs(s.hess) < 1e-150) return {0.0};
        return {scale * s.sum / s.hess};
    }
};

// ---------------------------------------------------------------------------
// Builder

namespace detail {

template <class Criterion>
class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const Criterion& criterion, const TreeConfig& config, SortedColumns order,
                std::optional<CounterRng> rng)
        : data_(data), crit_(criterion), config_(config), order_(std::move(order)), rng_(rng),
          goes_left_(data.n_rows, 0) {}

    DecisionTree build() {
        const std::size_t n = order_.empty() ? 0 : order_[0].size();
        std::vector<TreeNode> nodes;
        struct Pending {
            int node;
            std::size_t begin, end;
            int depth;
        };
        nodes.emplace_back();
        std::vector<Pending> stack{{0, 0, n, 0}};
        features_.resize(data_.n_features());

        while (!stack.empty()) {
            const Pending p = stack.back();
            stack.pop_back();

            typename Criterion::Stats stats{};
            if (!order_.empty()) {
                for (std::size_t i = p.begin; i < p.end; ++i) crit_.add(stats, order_[0][i]);
            }
            nodes[p.node].weight = stats.total;
            nodes[p.node].value = crit_.leaf_value(stats);

            const std::size_t count = p.end - p.begin;
            const bool depth_reached = config_.max_depth >= 0 && p.depth >= config_.max_depth;
            if (depth_reached || count < config_.min_rows || count < 2 || Criterion::is_pure(stats)) continue;

            const auto split = best_split(p.begin, p.end, stats);
            if (!split) continue;

            const auto& col = data_.columns[split->feature];
            for (std::size_t i = p.begin; i < p.end; ++i) {
                const auto row = order_[0][i];
                goes_left_[row] = col[row] <= split->threshold;
            }
            for (auto& list : order_) partition(list, p.begin, p.end);

            const auto mid = p.begin + split->left_count;
            const int left = static_cast<int>(nodes.size());
            nodes.emplace_back();
            nodes.emplace_back();
            auto& node = nodes[p.node];
            node.feature = static_cast<int>(split->feature);
            node.threshold = split->threshold;
            node.left = left;
            node.right = left + 1;
            node.gain = split->gain;
            // Right first so the left subtree is expanded first.
            stack.push_back({left + 1, mid, p.end, p.depth + 1});
            stack.push_back({left, p.begin, mid, p.depth + 1});
        }
        return DecisionTree(std::move(nodes));
    }

private:
    struct Split {
        std::size_t feature;
        double threshold;
        std::size_t left_count;
        double score;
        double gain;
    };

    std::optional<Split> best_split(std::size_t begin, std::size_t end, const typename Criterion::Stats& stats) {
        const std::size_t d = data_.n_features();
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        std::size_t budget = d;
        if (config_.feature_subsample != 0 && config_.feature_subsample < d && rng_) {
            rng_->shuffle(std::span<std::size_t>(features_));
            budget = config_.feature_subsample;
        }

        std::optional<Split> best;
        std::size_t visited = 0;
        for (std::size_t f : features_) {
            // Keep drawing past the budget until some feature can split.
            if (visited >= budget && best) break;
            ++visited;
            const auto& col = data_.columns[f];
            const auto& list = order_[f];
            if (col[list[begin]] == col[list[end - 1]]) continue;

            typename Criterion::Stats left{};
            for (std::size_t i = begin; i + 1 < end; ++i) {
                crit_.add(left, list[i]);
                const double a = col[list[i]];
                const double b = col[list[i + 1]];
                if (!(a < b)) continue;
                const auto right = Criterion::minus(stats, left);
                const double score = Criterion::proxy(left, right);
                if (!best || score > best->score ||
                    (score == best->score && (f < best->feature || (f == best->feature && a < best->threshold)))) {
                    double mid = a + (b - a) / 2.0;
                    if (!(mid < b)) mid = a;
                    best = Split{f, mid, i + 1 - begin, score, 0.0};
                }
            }
        }
        if (best) {
            // Recompute child stats for the chosen split to record its gain.
            typename Criterion::Stats left{};
            const auto& list = order_[best->feature];
            for (std::size_t i = begin; i < begin + best->left_count; ++i) crit_.add(left, list[i]);
            const auto right = Criterion::minus(stats, left);
            best->gain = std::max(0.0, Criterion::impurity(stats) - Criterion::impurity(left) -
                                           Criterion::impurity(right));
        }
        return best;
    }

    void partition(std::vector<std::uint32_t>& list, std::size_t begin, std::size_t end) {
        scratch_.clear();
        std::size_t out = begin;
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = list[i];
            if (goes_left_[row]) {
                list[out++] = row;
            } else {
                scratch_.push_back(row);
            }
        }
        std::copy(scratch_.begin(), scratch_.end(), list.begin() + static_cast<std::ptrdiff_t>(out));
    }

    const Dataset& data_;
    const Criterion& crit_;
    TreeConfig config_;
    SortedColumns order_;
    std::optional<CounterRng> rng_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::size_t> features_;
};

}  // namespace detail

/// Builds a tree over the rows present in `order` (see `presort` and
/// `restrict_to`). `rng` drives per-node feature subsampling.
template <class Criterion>
DecisionTree build_tree(const Dataset& data, const Criterion& criterion, const TreeConfig& config,
                        SortedColumns order, std::optional<CounterRng> rng = std::nullopt) {
    return detail::TreeBuilder<Criterion>(data, criterion, config, std::move(order), rng).build();
}

/// Classification tree with Gini splits on weighted rows.
inline DecisionTree fit_tree(const FeatureFrame& frame, std::span<const double> row_weights,
                             const TreeConfig& config, std::uint64_t seed = 0) {
    if (frame.empty()) throw EmptyFrame("cannot fit a tree on an empty frame");
    if (row_weights.size() != frame.size()) throw LengthMismatch("one weight per row required");
    double total = 0.0;
    for (double w : row_weights) {
        if (w < 0.0 || !std::isfinite(w)) throw Error("row weights must be finite and non-negative");
        total += w;
    }
    if (total <= 0.0) throw Error("row weights are all zero");
    const Dataset data = to_dataset(frame);
    GiniCriterion gini{data.labels, row_weights};
    return build_tree(data, gini, config, restrict_to(presort(data), row_weights), CounterRng(seed, "tree"));
}

}  // namespace bitcascade::ml
