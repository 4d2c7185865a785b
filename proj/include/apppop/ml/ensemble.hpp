#ifndef APPPOP_ML_ENSEMBLE_HPP
#define APPPOP_ML_ENSEMBLE_HPP

#include <apppop/ml/tree.hpp>

#include <cmath>
#include <vector>

namespace apppop::ml {

struct ForestParams {
    int trees = 200;
    TreeParams tree;  // max_features 0 = sqrt(d) for classification, d/3 for regression

    void validate() const
    {
        if (trees < 1) throw ConfigError("forest needs at least one tree");
        tree.validate();
    }

    nlohmann::json to_json() const
    {
        auto j = tree.to_json();
        j["trees"] = trees;
        return j;
    }

    static ForestParams from_json(const nlohmann::json& j)
    {
        ForestParams p;
        p.trees = j.value("trees", p.trees);
        p.tree = TreeParams::from_json(j, p.tree);
        p.validate();
        return p;
    }
};

/// Bagged CART trees with per-node feature subsampling. Tree t draws from
/// its own stream derived from (seed, t), so results do not depend on the
/// number of worker threads.
class RandomForest {
public:
    RandomForest() = default;
    RandomForest(Task task, ForestParams params, std::uint64_t seed, int jobs = 1)
        : task_(task), params_(params), seed_(seed), jobs_(jobs)
    {
        params_.validate();
    }

    static int default_max_features(Task task, Eigen::Index d)
    {
        if (task == Task::classification) return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
        return std::max(1, static_cast<int>(d / 3));
    }

    void fit(const Matrix& x, const Vector& y)
    {
        TreeParams tp = params_.tree;
        if (tp.max_features == 0) tp.max_features = default_max_features(task_, x.cols());
        const Presort presort = Presort::of(x);
        trees_.assign(static_cast<std::size_t>(params_.trees), DecisionTree(task_, tp));
        const auto n = static_cast<std::size_t>(x.rows());
        parallel_for(trees_.size(), jobs_, [&](std::size_t t) {
            Rng rng(Rng::derive(seed_, t));
            std::vector<double> counts(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) counts[rng.below(n)] += 1.0;
            trees_[t].fit(x, y, &counts, &presort, &rng);
        });
        importance_ = Vector::Zero(x.cols());
        for (const auto& t : trees_) importance_ += t.importance();
        importance_ /= static_cast<double>(trees_.size());
    }

    template <typename Row>
    double predict_row(const Row& row) const
    {
        double sum = 0;
        for (const auto& t : trees_) sum += t.predict_row(row);
        return sum / static_cast<double>(trees_.size());
    }

    Vector predict(const Matrix& x) const
    {
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

    const Vector& importance() const { return importance_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    void set_trees(std::vector<DecisionTree> trees) { trees_ = std::move(trees); }
    const ForestParams& params() const { return params_; }

private:
    Task task_ = Task::classification;
    ForestParams params_;
    std::uint64_t seed_ = 0;
    int jobs_ = 1;
    std::vector<DecisionTree> trees_;
    Vector importance_;
};

struct BoostingParams {
    int rounds = 200;
    double shrinkage = 0.1;
    TreeParams tree{3, 1, 0};

    void validate() const
    {
        if (rounds < 1) throw ConfigError("boosting needs at least one round");
        if (!(shrinkage > 0)) throw ConfigError("boosting shrinkage must be > 0");
        tree.validate();
    }

    nlohmann::json to_json() const
    {
        auto j = tree.to_json();
        j["rounds"] = rounds;
        j["shrinkage"] = shrinkage;
        return j;
    }

    static BoostingParams from_json(const nlohmann::json& j)
    {
        BoostingParams p;
        p.rounds = j.value("rounds", p.rounds);
        p.shrinkage = j.value("shrinkage", p.shrinkage);
        p.tree = TreeParams::from_json(j, p.tree);
        p.validate();
        return p;
    }
};

/// Gradient boosting of regression trees on the negative gradient of the
/// logistic loss (classification) or squared loss (regression). Leaves hold
/// the mean negative gradient, so with shrinkage <= 1 the training loss
/// cannot increase between rounds.
class GradientBoosting {
public:
    GradientBoosting() = default;
    GradientBoosting(Task task, BoostingParams params) : task_(task), params_(params) { params_.validate(); }

    void fit(const Matrix& x, const Vector& y)
    {
        const Presort presort = Presort::of(x);
        const double mean = y.mean();
        if (task_ == Task::classification) {
            const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
            base_ = std::log(p / (1.0 - p));
        } else {
            base_ = mean;
        }
        Vector raw = Vector::Constant(y.size(), base_);
        trees_.clear();
        loss_history_.assign(1, training_loss(raw, y));
        importance_ = Vector::Zero(x.cols());
        Vector residual(y.size());
        for (int round = 0; round < params_.rounds; ++round) {
            for (Eigen::Index i = 0; i < y.size(); ++i)
                residual[i] = task_ == Task::classification ? y[i] - sigmoid(raw[i]) : y[i] - raw[i];
            DecisionTree tree(Task::regression, params_.tree);
            tree.fit(x, residual, nullptr, &presort);
            raw += params_.shrinkage * tree.predict(x);
            importance_ += tree.importance();
            trees_.push_back(std::move(tree));
            loss_history_.push_back(training_loss(raw, y));
        }
    }

    template <typename Row>
    double raw_row(const Row& row) const
    {
        double f = base_;
        for (const auto& t : trees_) f += params_.shrinkage * t.predict_row(row);
        return f;
    }

    /// Probability of the positive class, or the regression estimate.
    template <typename Row>
    double predict_row(const Row& row) const
    {
        const double f = raw_row(row);
        return task_ == Task::classification ? sigmoid(f) : f;
    }

    Vector predict(const Matrix& x) const
    {
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

    /// Training loss before the first round and after each round.
    const std::vector<double>& loss_history() const { return loss_history_; }
    const Vector& importance() const { return importance_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    double base() const { return base_; }
    void set(double base, std::vector<DecisionTree> trees)
    {
        base_ = base;
        trees_ = std::move(trees);
    }
    const BoostingParams& params() const { return params_; }

private:
    double training_loss(const Vector& raw, const Vector& y) const
    {
        if (task_ == Task::classification) return binary_log_loss(raw, y);
        return 0.5 * (y - raw).squaredNorm() / static_cast<double>(y.size());
    }

    Task task_ = Task::classification;
    BoostingParams params_;
    double base_ = 0;
    std::vector<DecisionTree> trees_;
    std::vector<double> loss_history_;
    Vector importance_;
};

}  // namespace apppop::ml

#endif  // APPPOP_ML_ENSEMBLE_HPP
