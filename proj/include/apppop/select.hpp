#ifndef APPPOP_SELECT_HPP
#define APPPOP_SELECT_HPP

// Feature sets: app size alone, a fixed hand-picked list, and a vote over
// six ranked selectors per task.

#include <apppop/features.hpp>
#include <apppop/ml/ensemble.hpp>
#include <apppop/ml/linear.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace apppop::select {

using ml::Matrix;
using ml::Task;
using ml::Vector;

// ---------------------------------------------------------------------------
// Fixed feature sets

inline std::vector<std::string> size_only(const features::FeatureMatrix& m)
{
    if (!m.find("app_loc")) throw DataError("feature matrix lacks app_loc, required by the size feature set");
    return {"app_loc"};
}

inline const std::vector<std::string>& handpicked_names()
{
    static const std::vector<std::string> kNames = [] {
        std::vector<std::string> n = {"app_loc", "decoupling_level", "total_antipattern_count"};
        for (const char* m : {"cbo", "wmc", "rfc"})
            for (const char* p : {"p10", "p50", "p90"}) n.push_back(std::string("class_") + m + "_" + p);
        for (const char* m : {"wmc", "fan_in", "fan_out", "readability"})
            for (const char* p : {"p10", "p50", "p90"}) n.push_back(std::string("method_") + m + "_" + p);
        for (const char* s : {"smell_GodComponent", "smell_LongStatement", "smell_LongMethod", "contains_ads"})
            n.emplace_back(s);
        return n;
    }();
    return kNames;
}

inline std::vector<std::string> handpicked(const features::FeatureMatrix& m)
{
    std::string missing;
    for (const auto& n : handpicked_names())
        if (!m.find(n)) missing += (missing.empty() ? "" : ", ") + n;
    if (!missing.empty()) throw DataError("feature matrix lacks hand-picked features: " + missing);
    return handpicked_names();
}

// ---------------------------------------------------------------------------
// Per-feature scores (higher is better)

inline std::vector<bool> constant_columns(const Matrix& x)
{
    std::vector<bool> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(j)] = x.col(j).maxCoeff() == x.col(j).minCoeff();
    return out;
}

inline double pearson(const Vector& a, const Vector& b)
{
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (denom == 0) return 0.0;
    return std::clamp(da.dot(db) / denom, -1.0, 1.0);
}

inline Vector pearson_scores(const Matrix& x, const Vector& y)
{
    Vector s(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) s[j] = std::abs(pearson(x.col(j), y));
    return s;
}

/// Univariate regression F statistic, r^2 / (1 - r^2) * (n - 2).
inline Vector anova_f_scores(const Matrix& x, const Vector& y)
{
    Vector s(x.cols());
    const double dof = static_cast<double>(x.rows()) - 2.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double r2 = std::pow(pearson(x.col(j), y), 2);
        s[j] = r2 >= 1.0 ? std::numeric_limits<double>::max() : r2 / (1.0 - r2) * std::max(dof, 0.0);
    }
    return s;
}

/// Chi-squared statistic of the (bin x class) table after shifting each
/// column to start at 0 and cutting it into `bins` equal-width bins.
inline Vector chi2_scores(const Matrix& x, const Vector& y, int bins = 10)
{
    Vector s = Vector::Zero(x.cols());
    const auto n = x.rows();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double lo = x.col(j).minCoeff();
        const double width = x.col(j).maxCoeff() - lo;
        if (width <= 0) continue;
        std::vector<std::array<double, 2>> table(static_cast<std::size_t>(bins), {0.0, 0.0});
        for (Eigen::Index i = 0; i < n; ++i) {
            const double shifted = x(i, j) - lo;
            const int b = std::min(bins - 1, static_cast<int>(std::floor(shifted / width * bins)));
            table[static_cast<std::size_t>(b)][y[i] == 1.0 ? 1 : 0] += 1;
        }
        const double pos = y.sum(), total = static_cast<double>(n);
        const double col_total[2] = {total - pos, pos};
        double chi = 0;
        for (const auto& row : table) {
            const double row_total = row[0] + row[1];
            for (int c = 0; c < 2; ++c) {
                const double expected = row_total * col_total[c] / total;
                if (expected > 0) chi += (row[static_cast<std::size_t>(c)] - expected) * (row[static_cast<std::size_t>(c)] - expected) / expected;
            }
        }
        s[j] = chi;
    }
    return s;
}

/// Recursive elimination over a linear max-margin model. Drops 10% of the
/// survivors per round (at least one) until `keep` remain, then one at a
/// time. Score = elimination round, so survivors score highest.
inline Vector rfe_scores(const Matrix& z, const Vector& y, Task task, int keep)
{
    const Eigen::Index d = z.cols();
    std::vector<int> alive(static_cast<std::size_t>(d));
    std::iota(alive.begin(), alive.end(), 0);
    Vector score = Vector::Zero(d);
    double round = 1;
    while (!alive.empty()) {
        Matrix sub(z.rows(), static_cast<Eigen::Index>(alive.size()));
        for (std::size_t k = 0; k < alive.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = z.col(alive[k]);
        ml::LinearSvm svm(task);
        svm.fit(sub, y);
        std::vector<std::size_t> order(alive.size());
        std::iota(order.begin(), order.end(), 0);
        // Weakest first; among equals the higher index goes first.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double wa = std::abs(svm.weights()[static_cast<Eigen::Index>(a)]);
            const double wb = std::abs(svm.weights()[static_cast<Eigen::Index>(b)]);
            if (wa != wb) return wa < wb;
            return alive[a] > alive[b];
        });
        std::size_t drop = 1;
        if (static_cast<int>(alive.size()) > keep)
            drop = std::clamp<std::size_t>(alive.size() / 10, 1, alive.size() - static_cast<std::size_t>(keep));
        // Within one round, weaker features are eliminated first.
        std::vector<char> dropped(alive.size(), 0);
        for (std::size_t k = 0; k < drop; ++k) {
            score[alive[order[k]]] = round + static_cast<double>(k) / static_cast<double>(drop);
            dropped[order[k]] = 1;
        }
        std::vector<int> next;
        for (std::size_t k = 0; k < alive.size(); ++k)
            if (!dropped[k]) next.push_back(alive[k]);
        alive = std::move(next);
        round += 1;
    }
    return score;
}

// ---------------------------------------------------------------------------
// Selectors

struct SelectorParams {
    int n = 25;
    int forest_trees = 200;
    int boosting_rounds = 200;
    double l1_logistic = 1e-2;
    double lasso_lambda = 1e-2;
    double ridge_lambda = 1.0;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const
    {
        if (n < 1) throw ConfigError("selector n must be >= 1");
        if (forest_trees < 1 || boosting_rounds < 1) throw ConfigError("selector ensembles need >= 1 member");
        if (l1_logistic < 0 || lasso_lambda < 0 || ridge_lambda < 0) throw ConfigError("selector penalties must be >= 0");
    }

    nlohmann::json to_json() const
    {
        return {{"n", n},
                {"forest_trees", forest_trees},
                {"boosting_rounds", boosting_rounds},
                {"l1_logistic", l1_logistic},
                {"lasso_lambda", lasso_lambda},
                {"ridge_lambda", ridge_lambda},
                {"seed", seed}};
    }

    static SelectorParams from_json(const nlohmann::json& j)
    {
        SelectorParams p;
        p.n = j.value("n", p.n);
        p.forest_trees = j.value("forest_trees", p.forest_trees);
        p.boosting_rounds = j.value("boosting_rounds", p.boosting_rounds);
        p.l1_logistic = j.value("l1_logistic", p.l1_logistic);
        p.lasso_lambda = j.value("lasso_lambda", p.lasso_lambda);
        p.ridge_lambda = j.value("ridge_lambda", p.ridge_lambda);
        p.seed = j.value("seed", p.seed);
        p.validate();
        return p;
    }
};

inline const std::vector<std::string>& selector_names(Task task)
{
    static const std::vector<std::string> kClassification = {"pearson", "chi2", "svc_rfe",
                                                             "l1_logistic", "random_forest", "gradient_boosting"};
    static const std::vector<std::string> kRegression = {"pearson", "anova_f", "svr_rfe",
                                                         "lasso", "ridge", "random_forest"};
    return task == Task::classification ? kClassification : kRegression;
}

struct SelectorResult {
    std::string selector;
    Task task = Task::classification;
    std::vector<std::string> ranked;  // best first
    std::vector<double> scores;       // aligned with `ranked`

    nlohmann::json to_json() const
    {
        return {{"selector", selector}, {"task", ml::to_string(task)}, {"ranked", ranked}, {"scores", scores}};
    }
};

/// Top-n columns by score. Constant columns score 0 and rank after every
/// non-constant column; remaining ties go to the lower column index.
inline SelectorResult rank_features(const std::string& selector, Task task, const std::vector<std::string>& schema,
                                    Vector scores, const std::vector<bool>& constant, int n)
{
    std::vector<std::size_t> order(schema.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (constant[j] || !std::isfinite(scores[static_cast<Eigen::Index>(j)])) scores[static_cast<Eigen::Index>(j)] = 0;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (constant[a] != constant[b]) return !constant[a];
        return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
    });
    SelectorResult r;
    r.selector = selector;
    r.task = task;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), order.size());
    for (std::size_t k = 0; k < take; ++k) {
        r.ranked.push_back(schema[order[k]]);
        r.scores.push_back(scores[static_cast<Eigen::Index>(order[k])]);
    }
    return r;
}

/// Runs one named selector. Embedded and wrapper selectors see features
/// standardized over the given rows; regression targets are standardized
/// too, so penalties do not depend on the target's units.
inline SelectorResult run_selector(const std::string& name, const Matrix& x, const Vector& y,
                                   const std::vector<std::string>& schema, Task task, const SelectorParams& p)
{
    p.validate();
    if (static_cast<Eigen::Index>(schema.size()) != x.cols()) throw InternalError("selector schema/matrix mismatch");
    if (x.rows() < 2) throw DataError("feature selection needs at least two rows");
    const auto& names = selector_names(task);
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ConfigError("selector '" + name + "' is not defined for " + ml::to_string(task));
    ml::validate_training_data(x, y, task);
    const auto constant = constant_columns(x);
    const Matrix z = ml::Standardizer::fit(x).transform(x);
    Vector yz = y;
    if (task == Task::regression) {
        const double sd = std::sqrt((y.array() - y.mean()).square().mean());
        yz = (y.array() - y.mean()) / (sd > 0 ? sd : 1.0);
    }

    Vector scores;
    if (name == "pearson") {
        scores = pearson_scores(x, y);
    } else if (name == "chi2") {
        scores = chi2_scores(x, y);
    } else if (name == "anova_f") {
        scores = anova_f_scores(x, y);
    } else if (name == "svc_rfe" || name == "svr_rfe") {
        scores = rfe_scores(z, yz, task, p.n);
    } else if (name == "l1_logistic") {
        ml::LogisticRegression lr({0.0, p.l1_logistic, 500, 0.1});
        lr.fit(z, y);
        scores = lr.weights().cwiseAbs();
    } else if (name == "lasso") {
        ml::Lasso lasso(p.lasso_lambda);
        lasso.fit(z, yz);
        scores = lasso.weights().cwiseAbs();
    } else if (name == "ridge") {
        ml::Ridge ridge(p.ridge_lambda);
        ridge.fit(z, yz);
        scores = ridge.weights().cwiseAbs();
    } else if (name == "random_forest") {
        ml::ForestParams fp;
        fp.trees = p.forest_trees;
        ml::RandomForest rf(task, fp, p.seed, p.jobs);
        rf.fit(z, yz);
        scores = rf.importance();
    } else {
        ml::BoostingParams bp;
        bp.rounds = p.boosting_rounds;
        ml::GradientBoosting gb(task, bp);
        gb.fit(z, y);
        scores = gb.importance();
    }
    return rank_features(name, task, schema, std::move(scores), constant, p.n);
}

// ---------------------------------------------------------------------------
// Voting

struct VotingResult {
    std::map<std::string, int> votes;
    std::vector<std::string> selected;  // by votes desc, then name
    int quorum = 3;

    nlohmann::json to_json() const { return {{"votes", votes}, {"selected", selected}, {"quorum", quorum}}; }
};

inline int default_quorum(std::size_t selectors) { return static_cast<int>((selectors + 1) / 2); }

/// Membership vote: a feature is selected when at least `quorum` lists
/// contain it. Rank positions are ignored.
inline VotingResult vote(const std::vector<SelectorResult>& results, std::size_t expected = 6)
{
    if (results.size() != expected)
        throw DataError("voting needs " + std::to_string(expected) + " selector results, got " +
                        std::to_string(results.size()));
    for (const auto& r : results)
        if (r.task != results.front().task) throw DataError("selector results mix tasks");
    VotingResult v;
    v.quorum = default_quorum(expected);
    for (const auto& r : results) {
        std::set<std::string> seen;
        for (const auto& f : r.ranked) {
            if (!seen.insert(f).second) throw InternalError("selector " + r.selector + " listed " + f + " twice");
            ++v.votes[f];
        }
    }
    for (const auto& [f, c] : v.votes)
        if (c >= v.quorum) v.selected.push_back(f);
    std::stable_sort(v.selected.begin(), v.selected.end(),
                     [&](const std::string& a, const std::string& b) { return v.votes.at(a) > v.votes.at(b); });
    return v;
}

struct VotingSelection {
    std::vector<SelectorResult> results;
    VotingResult vote;
};

/// All six selectors of `task`, run independently, then the vote.
inline VotingSelection voting_selection(const Matrix& x, const Vector& y, const std::vector<std::string>& schema,
                                        Task task, const SelectorParams& p)
{
    const auto& names = selector_names(task);
    VotingSelection out;
    out.results.resize(names.size());
    SelectorParams inner = p;
    inner.jobs = 1;
    parallel_for(names.size(), p.jobs, [&](std::size_t k) {
        out.results[k] = run_selector(names[k], x, y, schema, task, inner);
    });
    out.vote = vote(out.results, names.size());
    if (out.vote.selected.empty()) throw DataError("voting selected no features");
    return out;
}

}  // namespace apppop::select

#endif  // APPPOP_SELECT_HPP
