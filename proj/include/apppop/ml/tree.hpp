#ifndef APPPOP_ML_TREE_HPP
#define APPPOP_ML_TREE_HPP

// CART trees. Classification uses Gini impurity on 0/1 targets and stores
// the positive fraction in leaves; regression uses squared error and stores
// the mean. Split search scans feature columns presorted once per dataset.

#include <apppop/ml/common.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace apppop::ml {

struct TreeParams {
    int max_depth = 8;
    int min_leaf = 2;
    int max_features = 0;  // 0 = all features at every node

    void validate() const
    {
        if (max_depth < 1) throw ConfigError("tree max_depth must be >= 1");
        if (min_leaf < 1) throw ConfigError("tree min_leaf must be >= 1");
        if (max_features < 0) throw ConfigError("tree max_features must be >= 0");
    }

    nlohmann::json to_json() const
    {
        return {{"max_depth", max_depth}, {"min_leaf", min_leaf}, {"max_features", max_features}};
    }

    static TreeParams from_json(const nlohmann::json& j) { return from_json(j, TreeParams{}); }

    /// Keys absent from `j` keep the values of `p`.
    static TreeParams from_json(const nlohmann::json& j, TreeParams p)
    {
        p.max_depth = j.value("max_depth", p.max_depth);
        p.min_leaf = j.value("min_leaf", p.min_leaf);
        p.max_features = j.value("max_features", p.max_features);
        p.validate();
        return p;
    }
};

/// Row indices of every column in ascending value order (ties by row).
struct Presort {
    std::vector<std::vector<int>> order;

    static Presort of(const Matrix& x)
    {
        Presort p;
        p.order.resize(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            auto& o = p.order[static_cast<std::size_t>(j)];
            o.resize(static_cast<std::size_t>(x.rows()));
            std::iota(o.begin(), o.end(), 0);
            std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return x(a, j) < x(b, j); });
        }
        return p;
    }
};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0;
    int left = -1, right = -1;
    double value = 0;
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(Task task, TreeParams params) : task_(task), params_(params) { params_.validate(); }

    /// `weights` are per-row multiplicities (bootstrap counts); rows with
    /// weight 0 are ignored. `rng` is required when max_features > 0.
    void fit(const Matrix& x, const Vector& y, const std::vector<double>* weights = nullptr,
             const Presort* presort = nullptr, Rng* rng = nullptr)
    {
        const auto n = static_cast<std::size_t>(x.rows());
        x_ = &x;
        y_ = &y;
        weights_.assign(n, 1.0);
        if (weights) weights_ = *weights;
        Presort local;
        if (!presort) {
            local = Presort::of(x);
            presort = &local;
        }
        presort_ = presort;
        rng_ = rng;
        if (params_.max_features > 0 && params_.max_features < x.cols() && !rng)
            throw InternalError("feature subsampling needs a random stream");
        nodes_.clear();
        importance_ = Vector::Zero(x.cols());
        membership_.assign(n, 0);
        nodes_.push_back({});
        build(0, 1);
        x_ = nullptr;
        y_ = nullptr;
        presort_ = nullptr;
        rng_ = nullptr;
    }

    template <typename Row>
    double predict_row(const Row& row) const
    {
        int k = 0;
        while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
            const auto& nd = nodes_[static_cast<std::size_t>(k)];
            k = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(k)].value;
    }

    Vector predict(const Matrix& x) const
    {
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

    /// Total weighted impurity decrease per feature.
    const Vector& importance() const { return importance_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    Task task() const { return task_; }
    const TreeParams& params() const { return params_; }

    nlohmann::json to_json() const
    {
        nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                       left = nlohmann::json::array(), right = nlohmann::json::array(),
                       value = nlohmann::json::array();
        for (const auto& nd : nodes_) {
            feature.push_back(nd.feature);
            threshold.push_back(nd.threshold);
            left.push_back(nd.left);
            right.push_back(nd.right);
            value.push_back(nd.value);
        }
        return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
    }

    static DecisionTree from_json(const nlohmann::json& j, Task task, TreeParams params)
    {
        DecisionTree t(task, params);
        const auto feature = j.at("feature").get<std::vector<int>>();
        const auto threshold = j.at("threshold").get<std::vector<double>>();
        const auto left = j.at("left").get<std::vector<int>>();
        const auto right = j.at("right").get<std::vector<int>>();
        const auto value = j.at("value").get<std::vector<double>>();
        for (std::size_t i = 0; i < feature.size(); ++i) t.nodes_.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
        return t;
    }

    /// A hand-built stump: x[feature] <= threshold ? left : right.
    static DecisionTree stump(Task task, int feature, double threshold, double left_value, double right_value)
    {
        DecisionTree t(task, {});
        t.nodes_ = {{feature, threshold, 1, 2, 0.0}, {-1, 0, -1, -1, left_value}, {-1, 0, -1, -1, right_value}};
        return t;
    }

private:
    /// Weighted impurity times total weight.
    double impurity(double w, double s, double q) const
    {
        if (w <= 0) return 0;
        if (task_ == Task::classification) return 2.0 * s * (w - s) / w;
        return std::max(0.0, q - s * s / w);
    }

    void build(int node, int depth)
    {
        const Matrix& x = *x_;
        const Vector& y = *y_;
        double w = 0, s = 0, q = 0;
        for (std::size_t i = 0; i < membership_.size(); ++i) {
            if (membership_[i] != node || weights_[i] <= 0) continue;
            const double yi = y[static_cast<Eigen::Index>(i)];
            w += weights_[i];
            s += weights_[i] * yi;
            q += weights_[i] * yi * yi;
        }
        nodes_[static_cast<std::size_t>(node)].value = w > 0 ? s / w : 0.0;
        const double parent = impurity(w, s, q);
        if (depth > params_.max_depth || w < 2.0 * params_.min_leaf || parent <= 1e-12) return;

        std::vector<int> features(static_cast<std::size_t>(x.cols()));
        std::iota(features.begin(), features.end(), 0);
        if (params_.max_features > 0 && params_.max_features < x.cols()) {
            for (int k = 0; k < params_.max_features; ++k) {
                const auto pick = static_cast<std::size_t>(k) + rng_->below(features.size() - static_cast<std::size_t>(k));
                std::swap(features[static_cast<std::size_t>(k)], features[pick]);
            }
            features.resize(static_cast<std::size_t>(params_.max_features));
            std::sort(features.begin(), features.end());
        }

        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0;
        for (int f : features) {
            const auto& order = presort_->order[static_cast<std::size_t>(f)];
            double wl = 0, sl = 0, ql = 0;
            int prev = -1;
            for (int r : order) {
                if (membership_[static_cast<std::size_t>(r)] != node || weights_[static_cast<std::size_t>(r)] <= 0)
                    continue;
                if (prev >= 0 && x(prev, f) < x(r, f) && wl >= params_.min_leaf && w - wl >= params_.min_leaf) {
                    const double gain = parent - impurity(wl, sl, ql) - impurity(w - wl, s - sl, q - ql);
                    if (gain > best_gain + 1e-12) {
                        best_gain = gain;
                        best_feature = f;
                        const double lo = x(prev, f), hi = x(r, f);
                        best_threshold = lo + (hi - lo) / 2;
                        if (!(best_threshold < hi)) best_threshold = lo;
                    }
                }
                const double wr = weights_[static_cast<std::size_t>(r)];
                const double yr = y[r];
                wl += wr;
                sl += wr * yr;
                ql += wr * yr * yr;
                prev = r;
            }
        }
        if (best_feature < 0) return;

        importance_[best_feature] += best_gain;
        const int left = static_cast<int>(nodes_.size());
        const int right = left + 1;
        nodes_.push_back({});
        nodes_.push_back({});
        auto& nd = nodes_[static_cast<std::size_t>(node)];
        nd.feature = best_feature;
        nd.threshold = best_threshold;
        nd.left = left;
        nd.right = right;
        for (std::size_t i = 0; i < membership_.size(); ++i)
            if (membership_[i] == node)
                membership_[i] = x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right;
        build(left, depth + 1);
        build(right, depth + 1);
    }

    Task task_ = Task::classification;
    TreeParams params_;
    std::vector<TreeNode> nodes_;
    Vector importance_;

    // Fit-time state.
    const Matrix* x_ = nullptr;
    const Vector* y_ = nullptr;
    const Presort* presort_ = nullptr;
    Rng* rng_ = nullptr;
    std::vector<double> weights_;
    std::vector<int> membership_;
};

}  // namespace apppop::ml

#endif  // APPPOP_ML_TREE_HPP
