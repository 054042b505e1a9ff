#include "gridstab/ml/tree.hpp"

#include "gridstab/error.hpp"
#include "gridstab/seeding.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

namespace gridstab::ml {

double gini(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw Error(ErrorKind::EmptyNode, "gini of an empty node");
    const auto n = static_cast<double>(total);
    double sum = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / n;
        sum += p * p;
    }
    return 1.0 - sum;
}

namespace {

// Two-class specialisation; same operation order as gini() so both give
// bit-identical values.
double gini2(std::size_t c0, std::size_t c1) {
    const auto n = static_cast<double>(c0 + c1);
    double sum = 0.0;
    const double p0 = static_cast<double>(c0) / n;
    sum += p0 * p0;
    const double p1 = static_cast<double>(c1) / n;
    sum += p1 * p1;
    return 1.0 - sum;
}

Leaf make_leaf(std::size_t c0, std::size_t c1) {
    const auto n = static_cast<double>(c0 + c1);
    return {c1 > c0 ? 1 : 0, {static_cast<double>(c0) / n, static_cast<double>(c1) / n}};
}

struct Candidate {
    std::size_t feature;
    double threshold;
    double impurity;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const int> y, const TreeParams& params,
                std::size_t features_per_split, std::mt19937_64& rng)
        : x_(x), y_(y), params_(params), m_(std::min(features_per_split, x.cols())), rng_(rng) {
        all_features_.resize(x.cols());
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    }

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        nodes_.clear();
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    std::uint32_t grow(std::vector<std::size_t>& rows, int depth) {
        std::size_t c1 = 0;
        for (auto r : rows) c1 += static_cast<std::size_t>(y_[r] == 1);
        const std::size_t c0 = rows.size() - c1;
        const auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back(make_leaf(c0, c1));

        if (depth >= params_.max_depth || rows.size() < params_.min_samples_split || c0 == 0 ||
            c1 == 0)
            return index;

        const auto best = best_split(rows, candidate_features());
        if (!best) return index;

        std::vector<std::size_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (auto r : rows) (x_(r, best->feature) <= best->threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const auto l = grow(left, depth + 1);
        const auto rr = grow(right, depth + 1);
        nodes_[index] = Split{best->feature, best->threshold, l, rr};
        return index;
    }

    std::vector<std::size_t> candidate_features() {
        if (m_ >= all_features_.size()) return all_features_;
        std::vector<std::size_t> pool = all_features_;
        for (std::size_t i = 0; i < m_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng_)]);
        }
        pool.resize(m_);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    std::optional<Candidate> best_split(const std::vector<std::size_t>& rows,
                                        const std::vector<std::size_t>& features) {
        std::optional<Candidate> best;
        const std::size_t n = rows.size();
        const auto nd = static_cast<double>(n);
        std::size_t total1 = 0;
        for (auto r : rows) total1 += static_cast<std::size_t>(y_[r] == 1);

        for (auto f : features) {
            buffer_.resize(n);
            for (std::size_t i = 0; i < n; ++i) buffer_[i] = {x_(rows[i], f), y_[rows[i]]};
            std::sort(buffer_.begin(), buffer_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::size_t left0 = 0, left1 = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                (buffer_[i].second == 1 ? left1 : left0) += 1;
                const double a = buffer_[i].first;
                const double b = buffer_[i + 1].first;
                if (!(a < b)) continue;
                double threshold = a + (b - a) / 2.0;
                if (!(threshold < b)) threshold = a;
                const std::size_t nl = i + 1;
                const std::size_t nr = n - nl;
                const std::size_t right1 = total1 - left1;
                const std::size_t right0 = nr - right1;
                const double impurity = (static_cast<double>(nl) * gini2(left0, left1) +
                                         static_cast<double>(nr) * gini2(right0, right1)) /
                                        nd;
                if (!best || impurity < best->impurity) best = Candidate{f, threshold, impurity};
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const int> y_;
    TreeParams params_;
    std::size_t m_;
    std::mt19937_64& rng_;
    std::vector<std::size_t> all_features_;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, int>> buffer_;
};

void check_training_set(const Matrix& x, std::span<const int> y) {
    if (x.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "features and labels differ in length");
    for (int v : y) {
        if (v != 0 && v != 1) throw Error(ErrorKind::BadParams, "labels must be 0 or 1");
    }
}

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, std::uint32_t i) {
    if (const auto* leaf = std::get_if<Leaf>(&nodes[i]))
        return {{"class", leaf->predicted_class}, {"distribution", leaf->distribution}};
    const auto& s = std::get<Split>(nodes[i]);
    return {{"feature", s.feature},
            {"threshold", s.threshold},
            {"left", node_to_json(nodes, s.left)},
            {"right", node_to_json(nodes, s.right)}};
}

std::uint32_t node_from_json(const nlohmann::json& doc, std::vector<TreeNode>& nodes,
                             std::size_t feature_count) {
    const auto index = static_cast<std::uint32_t>(nodes.size());
    if (doc.contains("class")) {
        Leaf leaf;
        leaf.predicted_class = doc.at("class").get<int>();
        const auto dist = doc.at("distribution").get<std::vector<double>>();
        if (dist.size() != 2) throw Error(ErrorKind::BadConfig, "leaf distribution needs 2 entries");
        leaf.distribution = {dist[0], dist[1]};
        nodes.emplace_back(leaf);
        return index;
    }
    Split s;
    s.feature = doc.at("feature").get<std::size_t>();
    s.threshold = doc.at("threshold").get<double>();
    if (s.feature >= feature_count) throw Error(ErrorKind::SchemaMismatch, "split feature out of range");
    nodes.emplace_back(s);
    s.left = node_from_json(doc.at("left"), nodes, feature_count);
    s.right = node_from_json(doc.at("right"), nodes, feature_count);
    nodes[index] = s;
    return index;
}

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count) {
    if (nodes_.empty()) throw Error(ErrorKind::BadParams, "a tree needs at least one node");
}

const Leaf& DecisionTree::leaf_for(std::span<const double> x) const {
    std::uint32_t i = 0;
    while (const auto* s = std::get_if<Split>(&nodes_[i])) i = x[s->feature] <= s->threshold ? s->left : s->right;
    return std::get<Leaf>(nodes_[i]);
}

int DecisionTree::predict(std::span<const double> x) const { return leaf_for(x).predicted_class; }

double DecisionTree::predict_proba(std::span<const double> x) const {
    return leaf_for(x).distribution[1];
}

int DecisionTree::depth() const {
    std::vector<std::pair<std::uint32_t, int>> stack{{0u, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (const auto* s = std::get_if<Split>(&nodes_[i])) {
            stack.emplace_back(s->left, d + 1);
            stack.emplace_back(s->right, d + 1);
        }
    }
    return deepest;
}

nlohmann::json DecisionTree::to_json() const { return node_to_json(nodes_, 0); }

DecisionTree DecisionTree::from_json(const nlohmann::json& doc, std::size_t feature_count) {
    std::vector<TreeNode> nodes;
    node_from_json(doc, nodes, feature_count);
    return DecisionTree(std::move(nodes), feature_count);
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, const TreeParams& params) {
    check_training_set(x, y);
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::mt19937_64 unused(0);
    return fit_tree(x, y, rows, params, x.cols(), unused);
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                      const TreeParams& params, std::size_t features_per_split,
                      std::mt19937_64& rng) {
    check_training_set(x, y);
    if (rows.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training rows");
    if (params.max_depth < 0 || params.min_samples_split < 2)
        throw Error(ErrorKind::BadParams, "need max_depth >= 0 and min_samples_split >= 2");
    TreeBuilder builder(x, y, params, features_per_split, rng);
    return DecisionTree(builder.build({rows.begin(), rows.end()}), x.cols());
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::vector<std::uint64_t> tree_seeds,
                           std::size_t features_per_split)
    : trees_(std::move(trees)),
      tree_seeds_(std::move(tree_seeds)),
      features_per_split_(features_per_split) {
    if (trees_.empty()) throw Error(ErrorKind::BadParams, "a forest needs at least one tree");
}

std::size_t RandomForest::votes_for_stable(std::span<const double> x) const {
    std::size_t votes = 0;
    for (const auto& t : trees_) votes += static_cast<std::size_t>(t.predict(x) == 1);
    return votes;
}

int RandomForest::predict(std::span<const double> x) const {
    const auto ones = votes_for_stable(x);
    return 2 * ones > trees_.size() ? 1 : 0;
}

std::size_t RandomForest::feature_count() const noexcept {
    return trees_.empty() ? 0 : trees_.front().feature_count();
}

nlohmann::json RandomForest::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"features_per_split", features_per_split_}, {"tree_seeds", tree_seeds_}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& doc, std::size_t feature_count) {
    std::vector<DecisionTree> trees;
    for (const auto& t : doc.at("trees")) trees.push_back(DecisionTree::from_json(t, feature_count));
    return RandomForest(std::move(trees), doc.at("tree_seeds").get<std::vector<std::uint64_t>>(),
                        doc.at("features_per_split").get<std::size_t>());
}

RandomForest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params) {
    check_training_set(x, y);
    if (x.rows() < 2) throw Error(ErrorKind::EmptyTrainingSet, "a forest needs at least 2 samples");
    if (params.n_trees < 1 || params.features_per_split < 1 || params.features_per_split > x.cols())
        throw Error(ErrorKind::BadParams, "need n_trees >= 1 and 1 <= m <= feature count");
    const TreeParams tree_params{params.max_depth, params.min_samples_split};
    const std::size_t n = x.rows();
    std::vector<DecisionTree> trees(params.n_trees);
    std::vector<std::uint64_t> seeds(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t)
        seeds[t] = derive_seed(params.seed, seed_stream::tree, t);

    const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ti = 0; ti < n_trees; ++ti) {
        const auto t = static_cast<std::size_t>(ti);
        std::mt19937_64 rng(seeds[t]);
        std::vector<std::size_t> rows(n);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (auto& r : rows) r = draw(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees[t] = fit_tree(x, y, rows, tree_params, params.features_per_split, rng);
    }
    return RandomForest(std::move(trees), std::move(seeds), params.features_per_split);
}

}  // namespace gridstab::ml
