#pragma once

#include "gridstab/ml/matrix.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace gridstab::ml {

/// Gini impurity 1 - sum_i p_i^2 with p_i = counts[i] / total.
/// Throws EmptyNode when the counts sum to zero.
double gini(std::span<const std::size_t> counts);

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

struct TreeParams {
    int max_depth = 10;
    std::size_t min_samples_split = 2;
};

struct Leaf {
    int predicted_class = 0;
    std::array<double, 2> distribution{};  // class frequencies, sums to 1
};

/// Samples with x[feature] <= threshold go left.
struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
};

using TreeNode = std::variant<Leaf, Split>;

/// Binary classification tree stored as a flat node array, root at index 0.
class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count);

    int predict(std::span<const double> x) const;
    int predict_class(std::span<const double> x) const { return predict(x); }
    /// Class-1 frequency of the leaf reached by x.
    double predict_proba(std::span<const double> x) const;

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t feature_count() const noexcept { return feature_count_; }
    int depth() const;

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& doc, std::size_t feature_count);

private:
    const Leaf& leaf_for(std::span<const double> x) const;

    std::vector<TreeNode> nodes_;
    std::size_t feature_count_ = 0;
};

/// Greedy CART. At each node every candidate feature is scanned over the
/// midpoints of consecutive distinct values and the split with the lowest
/// count-weighted child Gini wins; ties go to the lower feature index, then
/// the smaller threshold. Stops at max_depth, below min_samples_split, at a
/// pure node, or when no feature varies.
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, const TreeParams& params = {});

/// Same, drawing `features_per_split` candidate features at every node from
/// `rng`. Passing features_per_split >= x.cols() considers every feature.
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                      const TreeParams& params, std::size_t features_per_split,
                      std::mt19937_64& rng);

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t features_per_split = 3;  // floor(sqrt(12))
    int max_depth = 10;
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;
    bool bootstrap = true;
};

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<DecisionTree> trees, std::vector<std::uint64_t> tree_seeds,
                 std::size_t features_per_split);

    /// Majority vote over the trees; an even split votes class 0.
    int predict(std::span<const double> x) const;
    int predict_class(std::span<const double> x) const { return predict(x); }
    std::size_t votes_for_stable(std::span<const double> x) const;

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    const std::vector<std::uint64_t>& tree_seeds() const noexcept { return tree_seeds_; }
    std::size_t features_per_split() const noexcept { return features_per_split_; }
    std::size_t feature_count() const noexcept;

    nlohmann::json to_json() const;
    static RandomForest from_json(const nlohmann::json& doc, std::size_t feature_count);

private:
    std::vector<DecisionTree> trees_;
    std::vector<std::uint64_t> tree_seeds_;
    std::size_t features_per_split_ = 0;
};

/// Each tree sees a bootstrap resample of size n drawn with its own seed
/// derived from (seed, tree index); trees may be trained concurrently and the
/// result is identical to sequential training.
RandomForest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params = {});

}  // namespace gridstab::ml
