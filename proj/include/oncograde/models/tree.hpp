#ifndef ONCOGRADE_MODELS_TREE_HPP
#define ONCOGRADE_MODELS_TREE_HPP

// Weighted CART classification tree on Gini impurity. A split is admissible
// only when both children carry at least min_child_weight total sample
// weight.

#include "oncograde/core.hpp"

#include <array>
#include <vector>

namespace oncograde {

using ClassHistogram = std::array<double, kNumClasses>;

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassHistogram histogram{};  // weighted class totals reaching the node

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeOptions {
    std::size_t max_depth = 8;
    double min_child_weight = 1.0;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root, pre-order
    std::size_t n_features = 0;

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const {
        std::size_t k = 0;
        while (!nodes[k].is_leaf()) {
            const auto& node = nodes[k];
            k = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                     : node.right);
        }
        return nodes[k];
    }

    [[nodiscard]] ClassHistogram proba(std::span<const double> x) const {
        const auto& h = leaf_for(x).histogram;
        const double total = h[0] + h[1] + h[2];
        ClassHistogram p{};
        for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = total > 0.0 ? h[c] / total : 1.0 / kNumClasses;
        return p;
    }

    /// Single leaf always predicting `label`.
    static TreeModel constant(Label label, std::size_t n_features) {
        TreeModel t;
        t.n_features = n_features;
        TreeNode leaf;
        leaf.histogram[static_cast<std::size_t>(label)] = 1.0;
        t.nodes.push_back(leaf);
        return t;
    }
};

/// Node weight times Gini impurity: W - sum_c h_c^2 / W.
inline double weighted_gini(const ClassHistogram& h) noexcept {
    const double w = h[0] + h[1] + h[2];
    if (w <= 0.0) return 0.0;
    return w - (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]) / w;
}

namespace detail {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Zero-gain splits are admissible on impure nodes (XOR needs one at the
// root); the tolerance absorbs rounding in the gain itself.
inline constexpr double kGainSlack = 1e-12;

class TreeBuilder {
public:
    TreeBuilder(const NumMatrix& X, const Labels& y, const std::vector<double>& w, const TreeOptions& opt)
        : X_(X), y_(y), w_(w), opt_(opt) {}

    TreeModel build() {
        TreeModel tree;
        tree.n_features = X_.cols();
        IndexList rows = iota_indices(X_.rows());
        grow(tree, rows, 0);
        return tree;
    }

private:
    ClassHistogram histogram(const IndexList& rows) const {
        ClassHistogram h{};
        for (Index r : rows) h[static_cast<std::size_t>(y_[r])] += w_[r];
        return h;
    }

    SplitChoice best_split(const IndexList& rows, const ClassHistogram& parent) const {
        SplitChoice best;
        const double parent_impurity = weighted_gini(parent);
        const double total = parent[0] + parent[1] + parent[2];
        std::vector<std::pair<double, Index>> sorted(rows.size());
        for (std::size_t f = 0; f < X_.cols(); ++f) {
            for (std::size_t k = 0; k < rows.size(); ++k) sorted[k] = {X_(rows[k], f), rows[k]};
            std::sort(sorted.begin(), sorted.end());
            ClassHistogram left{};
            double left_w = 0.0;
            for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                const Index r = sorted[k].second;
                left[static_cast<std::size_t>(y_[r])] += w_[r];
                left_w += w_[r];
                if (!(sorted[k].first < sorted[k + 1].first)) continue;
                const double right_w = total - left_w;
                if (left_w < opt_.min_child_weight || right_w < opt_.min_child_weight) continue;
                ClassHistogram right{};
                for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = parent[c] - left[c];
                const double gain = parent_impurity - weighted_gini(left) - weighted_gini(right);
                if (gain < -kGainSlack) continue;
                if (!best.found || gain > best.gain + kGainSlack) {
                    best = {true, f, 0.5 * (sorted[k].first + sorted[k + 1].first), gain};
                }
            }
        }
        return best;
    }

    int grow(TreeModel& tree, const IndexList& rows, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().histogram = histogram(rows);
        const ClassHistogram h = tree.nodes.back().histogram;
        int classes = 0;
        for (double v : h) classes += v > 0.0 ? 1 : 0;
        if (classes <= 1 || depth >= opt_.max_depth) return id;

        const SplitChoice split = best_split(rows, h);
        if (!split.found) return id;
        IndexList left_rows, right_rows;
        for (Index r : rows) (X_(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);

        tree.nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(split.feature);
        tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        const int l = grow(tree, left_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        const int r = grow(tree, right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    const NumMatrix& X_;
    const Labels& y_;
    const std::vector<double>& w_;
    TreeOptions opt_;
};

}  // namespace detail

/// Ties between candidate splits go to the lower feature index, then the
/// lower threshold. Empty `weights` means unit weights.
inline TreeModel train_tree(const NumMatrix& X, const Labels& y, std::vector<double> weights,
                            const TreeOptions& opt) {
    if (X.rows() == 0) throw Error("train_tree: empty input");
    if (X.rows() != y.size()) throw Error("train_tree: row count does not match label count");
    if (!(opt.min_child_weight > 0.0)) throw Error("min_child_weight must be positive");
    require_labels(y);
    if (weights.empty()) weights.assign(y.size(), 1.0);
    if (weights.size() != y.size()) throw Error("train_tree: weight count does not match label count");
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw Error("train_tree: sample weights must be positive");
    }
    return detail::TreeBuilder(X, y, weights, opt).build();
}

}  // namespace oncograde

#endif  // ONCOGRADE_MODELS_TREE_HPP
