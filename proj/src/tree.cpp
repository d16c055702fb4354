#include "mdids/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "mdids/error.hpp"

namespace mdids {

std::array<double, 2> TreeNode::probabilities() const {
    const double n = static_cast<double>(size());
    if (n == 0.0) return {0.0, 0.0};
    return {static_cast<double>(class_counts[0]) / n, static_cast<double>(class_counts[1]) / n};
}

double TreeNode::expected_loss() const {
    auto p = probabilities();
    return 1.0 - std::max(p[0], p[1]);
}

const TreeNode& TreeIndicator::leaf_for(std::span<const double> features) const {
    if (features.size() != feature_names.size())
        throw ContractError(fmt::format("tree expects {} features, got {}", feature_names.size(), features.size()));
    const TreeNode* node = &nodes.front();
    while (node->split) {
        const auto& s = *node->split;
        node = &nodes[features[s.column] < s.threshold ? *node->left : *node->right];
    }
    return *node;
}

double gini(std::span<const std::size_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total == 0.0) throw ArgumentError("gini of an empty node");
    double sum_sq = 0.0;
    for (auto c : counts) {
        double p = static_cast<double>(c) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double split_improvement(const std::array<std::size_t, 2>& left, const std::array<std::size_t, 2>& right) {
    const std::array<std::size_t, 2> parent{left[0] + right[0], left[1] + right[1]};
    const double n = static_cast<double>(parent[0] + parent[1]);
    const double nl = static_cast<double>(left[0] + left[1]);
    const double nr = static_cast<double>(right[0] + right[1]);
    if (nl == 0.0 || nr == 0.0) return 0.0;
    return n * (gini(parent) - (nl / n) * gini(left) - (nr / n) * gini(right));
}

namespace {

std::size_t misclassified(const std::array<std::size_t, 2>& counts) {
    return std::min(counts[0], counts[1]);
}

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params) : data_(data), params_(params) {
        for (const auto& obs : data.observations()) labels_.push_back(obs.label == 1.0 ? 1 : 0);
    }

    std::optional<Split> root_split() const {
        std::vector<std::size_t> rows(data_.size());
        std::iota(rows.begin(), rows.end(), 0);
        const auto candidate = best_split(rows, count(rows));
        return candidate.found ? std::optional<Split>(candidate.split) : std::nullopt;
    }

    TreeIndicator build() {
        std::vector<std::size_t> rows(data_.size());
        std::iota(rows.begin(), rows.end(), 0);
        root_error_ = misclassified(count(rows));
        grow(rows, 1, 0);
        TreeIndicator tree;
        tree.feature_names = data_.names();
        tree.params = params_;
        tree.nodes = std::move(nodes_);
        return tree;
    }

private:
    struct Candidate {
        Split split;
        bool found = false;
    };

    std::array<std::size_t, 2> count(const std::vector<std::size_t>& rows) const {
        std::array<std::size_t, 2> c{};
        for (auto r : rows) ++c[labels_[r]];
        return c;
    }

    Candidate best_split(const std::vector<std::size_t>& rows, const std::array<std::size_t, 2>& counts) const {
        Candidate best;
        const double floor = 1e-12 * static_cast<double>(rows.size());
        std::vector<std::pair<double, int>> column(rows.size());
        for (std::size_t j = 0; j < data_.columns(); ++j) {
            for (std::size_t k = 0; k < rows.size(); ++k)
                column[k] = {data_.observations()[rows[k]].features[j], labels_[rows[k]]};
            std::stable_sort(column.begin(), column.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            std::array<std::size_t, 2> left{};
            for (std::size_t k = 0; k + 1 < column.size(); ++k) {
                ++left[column[k].second];
                const double lo = column[k].first;
                const double hi = column[k + 1].first;
                if (!(hi > lo)) continue;
                const std::array<std::size_t, 2> right{counts[0] - left[0], counts[1] - left[1]};
                const double improvement = split_improvement(left, right);
                if (improvement > floor && (!best.found || improvement > best.split.improvement)) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold > lo)) threshold = hi;
                    best.split = {j, threshold, improvement};
                    best.found = true;
                }
            }
        }
        return best;
    }

    // Returns the index of the node created for `rows`.
    std::size_t grow(const std::vector<std::size_t>& rows, std::uint64_t id, std::size_t depth) {
        const auto counts = count(rows);
        const std::size_t index = nodes_.size();
        nodes_.push_back(TreeNode{id, counts, std::nullopt, std::nullopt, std::nullopt, 0.0});

        const std::size_t node_error = misclassified(counts);
        if (node_error == 0 || rows.size() < params_.min_split || depth >= params_.max_depth) return index;
        if (static_cast<double>(node_error) < params_.cp_min * static_cast<double>(root_error_)) return index;

        auto candidate = best_split(rows, counts);
        if (!candidate.found) return index;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (auto r : rows) {
            const double x = data_.observations()[r].features[candidate.split.column];
            (x < candidate.split.threshold ? left_rows : right_rows).push_back(r);
        }
        const std::size_t left = grow(left_rows, 2 * id, depth + 1);
        const std::size_t right = grow(right_rows, 2 * id + 1, depth + 1);

        // Keep the subtree only if it pays for its splits: relative error
        // reduction per split must reach cp_min.
        auto [le, ls] = leaves_of(left);
        auto [re, rs] = leaves_of(right);
        const std::size_t leaf_error = le + re;
        const std::size_t splits = ls + rs + 1;
        const double cp = (static_cast<double>(node_error) - static_cast<double>(leaf_error)) /
                          static_cast<double>(splits) / static_cast<double>(root_error_);
        if (cp < params_.cp_min) {
            nodes_.resize(index + 1);
            return index;
        }
        nodes_[index].split = candidate.split;
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    // (misclassified count over leaves, number of splits) below `index`.
    std::pair<std::size_t, std::size_t> leaves_of(std::size_t index) const {
        const auto& node = nodes_[index];
        if (!node.split) return {misclassified(node.class_counts), 0};
        auto [le, ls] = leaves_of(*node.left);
        auto [re, rs] = leaves_of(*node.right);
        return {le + re, ls + rs + 1};
    }

    const Dataset& data_;
    TreeParams params_;
    std::vector<int> labels_;
    std::vector<TreeNode> nodes_;
    std::size_t root_error_ = 0;
};

// Weakest-link pruning sequence in relative-error units. Fills node
// complexities and the cp table.
void build_cp_table(TreeIndicator& tree) {
    auto& nodes = tree.nodes;
    const std::size_t root_error = misclassified(nodes.front().class_counts);
    if (root_error == 0) {
        tree.cp_table = {{tree.params.cp_min, 0, 1.0}};
        return;
    }
    const double scale = static_cast<double>(root_error);
    std::vector<std::optional<std::size_t>> parent(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].left) parent[*nodes[i].left] = i;
        if (nodes[i].right) parent[*nodes[i].right] = i;
    }
    std::vector<bool> collapsed(nodes.size(), false);
    std::vector<bool> assigned(nodes.size(), false);
    auto pruned_away = [&](std::size_t i) {
        for (std::optional<std::size_t> cur = i; cur; cur = parent[*cur])
            if (collapsed[*cur]) return true;
        return false;
    };
    // (error over current leaves, current splits) of the subtree at i
    auto measure = [&](auto&& self, std::size_t i) -> std::pair<double, std::size_t> {
        const auto& n = nodes[i];
        if (!n.split || collapsed[i]) return {static_cast<double>(misclassified(n.class_counts)), 0};
        auto [le, ls] = self(self, *n.left);
        auto [re, rs] = self(self, *n.right);
        return {le + re, ls + rs + 1};
    };

    struct Stage {
        std::size_t nsplit;
        double rel_error;
        double collapse_cp;
    };
    std::vector<Stage> stages;  // largest tree first
    while (true) {
        auto [err, splits] = measure(measure, 0);
        if (splits == 0) {
            stages.push_back({0, err / scale, std::numeric_limits<double>::infinity()});
            break;
        }
        double alpha = std::numeric_limits<double>::infinity();
        std::vector<std::pair<std::size_t, double>> g;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].split || pruned_away(i)) continue;
            auto [sub_err, sub_splits] = measure(measure, i);
            double gi = (static_cast<double>(misclassified(nodes[i].class_counts)) - sub_err) /
                        static_cast<double>(sub_splits) / scale;
            g.emplace_back(i, gi);
            alpha = std::min(alpha, gi);
        }
        stages.push_back({splits, err / scale, alpha});
        for (auto [i, gi] : g)
            if (gi <= alpha + 1e-12) collapsed[i] = true;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].split && !assigned[i] && pruned_away(i)) {
                nodes[i].complexity = std::max(alpha, 0.0);
                assigned[i] = true;
            }
        }
    }
    // Rows ordered by increasing size. Row for tree T_i carries the cp at
    // which T_{i+1} collapses into it; the full tree carries cp_min.
    std::reverse(stages.begin(), stages.end());
    tree.cp_table.clear();
    for (std::size_t k = 0; k < stages.size(); ++k) {
        double cp = k + 1 < stages.size() ? stages[k + 1].collapse_cp : tree.params.cp_min;
        tree.cp_table.push_back({cp, stages[k].nsplit, stages[k].rel_error});
    }
}

}  // namespace

TreeIndicator fit_tree(const Dataset& data, const TreeParams& params) {
    if (data.empty()) throw InsufficientDataError("cannot fit a tree on an empty dataset");
    if (data.label_kind() != LabelKind::boolean)
        throw ContractError("tree induction needs boolean labels (graded labels are scored, not learnt)");
    if (!(params.cp_min > 0.0)) throw ArgumentError("cp_min must be positive");
    if (params.min_split < 1) throw ArgumentError("min_split must be at least 1");
    TreeIndicator tree = TreeBuilder(data, params).build();
    build_cp_table(tree);
    return tree;
}

std::optional<Split> find_split(const Dataset& data) {
    if (data.empty()) throw InsufficientDataError("cannot search splits on an empty dataset");
    if (data.label_kind() != LabelKind::boolean) throw ContractError("split search needs boolean labels");
    return TreeBuilder(data, TreeParams{}).root_split();
}

TreePrediction predict_tree(const TreeIndicator& tree, std::span<const double> features) {
    const auto& leaf = tree.leaf_for(features);
    return {leaf.predicted_class(), leaf.probabilities()[1]};
}

std::string dump_tree(const TreeIndicator& tree) {
    std::string out = fmt::format("n= {}\n\n", tree.root().size());
    out += "          CP nsplit  rel error\n";
    for (std::size_t k = 0; k < tree.cp_table.size(); ++k) {
        const auto& row = tree.cp_table[k];
        out += fmt::format("{} {:>10.7g} {:>6} {:>10.7g}\n", k + 1, row.cp, row.nsplit, row.rel_error);
    }

    std::vector<std::size_t> order(tree.nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return tree.nodes[a].node_id < tree.nodes[b].node_id; });
    for (auto i : order) {
        const auto& node = tree.nodes[i];
        auto p = node.probabilities();
        out += fmt::format("\nNode number {}: {} observations", node.node_id, node.size());
        if (node.split) out += fmt::format(",    complexity param={:.7g}", node.complexity);
        out += '\n';
        out += fmt::format("  predicted class={}  expected loss={:.7g}\n", node.predicted_class(),
                           node.expected_loss());
        out += fmt::format("    class counts: {:>5} {:>5}\n", node.class_counts[0], node.class_counts[1]);
        out += fmt::format("   probabilities: {:.3f} {:.3f}\n", p[0], p[1]);
        if (node.split) {
            const auto& s = *node.split;
            const auto& l = tree.nodes[*node.left];
            const auto& r = tree.nodes[*node.right];
            out += fmt::format("  left son={} ({} obs) right son={} ({} obs)\n", l.node_id, l.size(), r.node_id,
                               r.size());
            out += "  Primary splits:\n";
            out += fmt::format("      {} < {:.7g} to the left,  improve={:.7g}, (0 missing)\n",
                               tree.feature_names[s.column], s.threshold, s.improvement);
        }
    }
    return out;
}

}  // namespace mdids
