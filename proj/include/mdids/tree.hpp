#pragma once

// Binary classification tree (CART, Gini impurity) with an rpart-style
// complexity-parameter stop rule and cp table.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdids/dataset.hpp"

namespace mdids {

struct TreeParams {
    double cp_min = 0.01;
    std::size_t min_split = 20;
    std::size_t max_depth = 30;

    bool operator==(const TreeParams&) const = default;
};

/// Observations with feature < threshold go left, the rest go right.
struct Split {
    std::size_t column = 0;
    double threshold = 0.0;
    double improvement = 0.0;

    bool operator==(const Split&) const = default;
};

struct TreeNode {
    std::uint64_t node_id = 1;  // rpart numbering: children of k are 2k and 2k+1
    std::array<std::size_t, 2> class_counts{};
    std::optional<Split> split;
    std::optional<std::size_t> left;   // index into TreeIndicator::nodes
    std::optional<std::size_t> right;
    double complexity = 0.0;  // cp at which this node's subtree is pruned away

    std::size_t size() const noexcept { return class_counts[0] + class_counts[1]; }
    std::array<double, 2> probabilities() const;
    int predicted_class() const noexcept { return class_counts[1] > class_counts[0] ? 1 : 0; }
    double expected_loss() const;
    bool is_leaf() const noexcept { return !split.has_value(); }

    bool operator==(const TreeNode&) const = default;
};

struct CpRow {
    double cp = 0.0;
    std::size_t nsplit = 0;
    double rel_error = 1.0;

    bool operator==(const CpRow&) const = default;
};

struct TreeIndicator {
    std::vector<std::string> feature_names;
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<CpRow> cp_table;
    TreeParams params;

    const TreeNode& root() const { return nodes.front(); }
    const TreeNode& leaf_for(std::span<const double> features) const;

    bool operator==(const TreeIndicator&) const = default;
};

struct TreePrediction {
    int predicted_class = 0;
    double probability = 0.0;  // leaf probability of class 1
};

/// 1 - sum p_c^2. Throws ArgumentError for all-zero counts.
double gini(std::span<const std::size_t> counts);

/// N * (gini(node) - N_L/N * gini(L) - N_R/N * gini(R)).
double split_improvement(const std::array<std::size_t, 2>& left, const std::array<std::size_t, 2>& right);

/// Requires a non-empty dataset with boolean labels.
TreeIndicator fit_tree(const Dataset& data, const TreeParams& params = {});

/// Highest-improvement split over all rows, before any stop rule or pruning.
std::optional<Split> find_split(const Dataset& data);

TreePrediction predict_tree(const TreeIndicator& tree, std::span<const double> features);

/// Text dump laid out like rpart's summary: cp table, then one block per node.
std::string dump_tree(const TreeIndicator& tree);

}  // namespace mdids
