#ifndef DISTBOOST_TREE_HPP
#define DISTBOOST_TREE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "distboost/common.hpp"

namespace distboost {

struct TreeConfig {
    int max_depth = 6;
    int min_samples_leaf = 20;
    double lambda = 1.0;  // L2 leaf regularizer
    double gamma = 0.0;   // minimum split gain
};

/// Binary CART node. Rows with feature <= threshold go left.
struct TreeNode {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    double gain = 0.0;  // realized split gain (split nodes only)
    double value = 0.0;  // leaf value
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    bool is_leaf() const { return feature < 0; }

    TreeNode() = default;
    TreeNode(TreeNode&&) = default;
    TreeNode& operator=(TreeNode&&) = default;

    TreeNode clone() const {
        TreeNode n;
        n.feature = feature;
        n.threshold = threshold;
        n.gain = gain;
        n.value = value;
        if (left) n.left = std::make_unique<TreeNode>(left->clone());
        if (right) n.right = std::make_unique<TreeNode>(right->clone());
        return n;
    }
};

/// Per-feature row orderings, computed once per dataset and shared across all
/// trees of a fit.
struct SortedFeatures {
    const std::vector<std::vector<double>>* columns = nullptr;
    std::vector<std::vector<int>> order;

    SortedFeatures() = default;

    explicit SortedFeatures(const std::vector<std::vector<double>>& cols) : columns(&cols) {
        order.resize(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            order[j].resize(cols[j].size());
            std::iota(order[j].begin(), order[j].end(), 0);
            const auto& col = cols[j];
            std::stable_sort(order[j].begin(), order[j].end(),
                             [&col](int a, int b) { return col[a] < col[b]; });
        }
    }

    std::size_t n_rows() const { return columns->empty() ? 0 : (*columns)[0].size(); }
    std::size_t n_features() const { return columns->size(); }
};

namespace detail {

struct SplitCandidate {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double gl = 0.0, hl = 0.0;  // left-child gradient/Hessian sums
};

inline double leaf_objective(double G, double H, double lambda) {
    return G * G / (H + lambda);
}

// node_order: per feature, the node's rows in ascending feature order.
inline SplitCandidate best_split(const SortedFeatures& sf,
                                 const std::vector<std::vector<int>>& node_order,
                                 std::span<const double> g, std::span<const double> h,
                                 double G, double H, const TreeConfig& cfg) {
    SplitCandidate best;
    const double parent = leaf_objective(G, H, cfg.lambda);
    for (std::size_t f = 0; f < sf.n_features(); ++f) {
        const auto& col = (*sf.columns)[f];
        const auto& ord = node_order[f];
        const int n = static_cast<int>(ord.size());
        double GL = 0.0, HL = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            const int row = ord[i];
            GL += g[static_cast<std::size_t>(row)];
            HL += h[static_cast<std::size_t>(row)];
            const double x = col[static_cast<std::size_t>(row)];
            const double x_next = col[static_cast<std::size_t>(ord[i + 1])];
            if (x == x_next) continue;  // threshold only between distinct values
            const int n_left = i + 1;
            const int n_right = n - n_left;
            if (n_left < cfg.min_samples_leaf || n_right < cfg.min_samples_leaf) continue;
            const double gain = 0.5 * (leaf_objective(GL, HL, cfg.lambda) +
                                       leaf_objective(G - GL, H - HL, cfg.lambda) - parent) -
                                cfg.gamma;
            // Strict > keeps the first (lowest feature, lowest threshold) on ties.
            if (gain > best.gain || (!best.found && gain > 0.0)) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (x + x_next);
                best.gain = gain;
                best.gl = GL;
                best.hl = HL;
            }
        }
    }
    return best;
}

inline std::unique_ptr<TreeNode> grow(const SortedFeatures& sf,
                                      std::vector<std::vector<int>> node_order,
                                      std::span<const double> g, std::span<const double> h,
                                      const TreeConfig& cfg, int depth) {
    double G = 0.0, H = 0.0;
    for (int row : node_order[0]) {
        G += g[static_cast<std::size_t>(row)];
        H += h[static_cast<std::size_t>(row)];
    }
    auto node = std::make_unique<TreeNode>();
    node->value = -G / (H + cfg.lambda);
    const int n = static_cast<int>(node_order[0].size());
    if (depth >= cfg.max_depth || n < 2 * cfg.min_samples_leaf) return node;

    SplitCandidate split = best_split(sf, node_order, g, h, G, H, cfg);
    if (!split.found || !(split.gain > 0.0)) return node;

    const auto& split_col = (*sf.columns)[static_cast<std::size_t>(split.feature)];
    std::vector<std::vector<int>> left_order(sf.n_features()), right_order(sf.n_features());
    for (std::size_t f = 0; f < sf.n_features(); ++f) {
        for (int row : node_order[f]) {
            if (split_col[static_cast<std::size_t>(row)] <= split.threshold)
                left_order[f].push_back(row);
            else
                right_order[f].push_back(row);
        }
    }
    node_order.clear();

    node->feature = split.feature;
    node->threshold = split.threshold;
    node->gain = split.gain;
    node->left = grow(sf, std::move(left_order), g, h, cfg, depth + 1);
    node->right = grow(sf, std::move(right_order), g, h, cfg, depth + 1);
    return node;
}

}  // namespace detail

/// Fit one regression tree to per-row gradients/Hessians by exact greedy
/// split search. Leaf value is -sum(g)/(sum(h)+lambda).
inline TreeNode fit_tree(const SortedFeatures& sf, std::span<const double> g,
                         std::span<const double> h, const TreeConfig& cfg) {
    if (sf.n_features() == 0 || sf.n_rows() == 0) throw EmptyInput("fit_tree: empty input");
    if (g.size() != sf.n_rows() || h.size() != sf.n_rows())
        throw WidthMismatch("fit_tree: g/h not row-aligned with features");
    std::vector<std::vector<int>> node_order = sf.order;
    return std::move(*detail::grow(sf, std::move(node_order), g, h, cfg, 0));
}

inline TreeNode fit_tree(const std::vector<std::vector<double>>& columns,
                         std::span<const double> g, std::span<const double> h,
                         const TreeConfig& cfg) {
    SortedFeatures sf(columns);
    return fit_tree(sf, g, h, cfg);
}

inline double predict_tree(const TreeNode& tree, std::span<const double> row) {
    const TreeNode* node = &tree;
    while (!node->is_leaf()) {
        if (static_cast<std::size_t>(node->feature) >= row.size())
            throw WidthMismatch("predict_tree: row narrower than training data");
        node = row[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    }
    return node->value;
}

/// Column-major traversal, avoids materializing a row.
inline double predict_tree(const TreeNode& tree, const std::vector<std::vector<double>>& columns,
                           std::size_t row_index) {
    const TreeNode* node = &tree;
    while (!node->is_leaf()) {
        if (static_cast<std::size_t>(node->feature) >= columns.size())
            throw WidthMismatch("predict_tree: row narrower than training data");
        node = columns[static_cast<std::size_t>(node->feature)][row_index] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    }
    return node->value;
}

/// Total realized split gain per feature; empty for a stump.
inline std::map<int, double> gain_by_feature(const TreeNode& tree) {
    std::map<int, double> gains;
    auto visit = [&gains](const TreeNode& node, auto&& self) -> void {
        if (node.is_leaf()) return;
        gains[node.feature] += node.gain;
        self(*node.left, self);
        self(*node.right, self);
    };
    visit(tree, visit);
    return gains;
}

}  // namespace distboost

#endif  // DISTBOOST_TREE_HPP
