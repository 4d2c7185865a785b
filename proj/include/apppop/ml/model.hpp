#ifndef APPPOP_ML_MODEL_HPP
#define APPPOP_ML_MODEL_HPP

// One front door over every learner: a validated ModelSpec, fitting on
// standardized features, schema-checked prediction and JSON persistence.

#include <apppop/ml/ensemble.hpp>
#include <apppop/ml/linear.hpp>
#include <apppop/ml/mlp.hpp>

#include <set>
#include <variant>

namespace apppop::ml {

enum class Family { lr, dt, rf, gb, mlp, lasso, ridge };

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::lr: return "lr";
    case Family::dt: return "dt";
    case Family::rf: return "rf";
    case Family::gb: return "gb";
    case Family::mlp: return "mlp";
    case Family::lasso: return "lasso";
    case Family::ridge: return "ridge";
    }
    throw InternalError("unhandled model family");
}

inline Family parse_family(const std::string& s)
{
    for (Family f : {Family::lr, Family::dt, Family::rf, Family::gb, Family::mlp, Family::lasso, Family::ridge})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown model family '" + s + "' (expected lr, dt, rf, gb, mlp, lasso or ridge)");
}

inline bool supports(Family f, Task t)
{
    if (f == Family::lr) return t == Task::classification;
    if (f == Family::lasso || f == Family::ridge) return t == Task::regression;
    return true;
}

/// Families evaluated per task by default.
inline std::vector<Family> default_families(Task t)
{
    if (t == Task::classification) return {Family::lr, Family::dt, Family::rf, Family::gb, Family::mlp};
    return {Family::lasso, Family::ridge, Family::dt, Family::rf, Family::gb, Family::mlp};
}

struct ModelSpec {
    Family family = Family::lr;
    Task task = Task::classification;
    nlohmann::json hyperparameters = nlohmann::json::object();
    std::uint64_t seed = 0;
    double threshold = 0.5;  // classification label cut on the score
    int jobs = 1;            // never affects results

    /// Hyperparameters with every default filled in; throws on unknown or
    /// out-of-range values.
    nlohmann::json resolved_hyperparameters() const
    {
        if (!supports(family, task))
            throw ConfigError("model family " + to_string(family) + " does not support " + to_string(task));
        if (!hyperparameters.is_object()) throw ConfigError("hyperparameters must be a JSON object");
        nlohmann::json full;
        switch (family) {
        case Family::lr: full = LogisticParams::from_json(hyperparameters).to_json(); break;
        case Family::dt: full = TreeParams::from_json(hyperparameters).to_json(); break;
        case Family::rf: full = ForestParams::from_json(hyperparameters).to_json(); break;
        case Family::gb: full = BoostingParams::from_json(hyperparameters).to_json(); break;
        case Family::mlp: full = MlpParams::from_json(hyperparameters).to_json(); break;
        case Family::lasso:
        case Family::ridge: {
            const double lambda = hyperparameters.value("lambda", family == Family::lasso ? 1e-2 : 1.0);
            if (!(lambda >= 0)) throw ConfigError(to_string(family) + " lambda must be >= 0");
            full = {{"lambda", lambda}};
            break;
        }
        }
        for (const auto& [key, value] : hyperparameters.items())
            if (!full.contains(key)) throw ConfigError("unknown hyperparameter '" + key + "' for " + to_string(family));
        return full;
    }

    void validate() const
    {
        resolved_hyperparameters();
        if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("classification threshold must lie in [0,1]");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
    }

    nlohmann::json to_json() const
    {
        return {{"family", to_string(family)},
                {"task", to_string(task)},
                {"hyperparameters", resolved_hyperparameters()},
                {"seed", seed},
                {"threshold", threshold}};
    }

    static ModelSpec from_json(const nlohmann::json& j)
    {
        ModelSpec s;
        s.family = parse_family(j.at("family").get<std::string>());
        s.task = parse_task(j.at("task").get<std::string>());
        s.hyperparameters = j.value("hyperparameters", nlohmann::json::object());
        s.seed = j.value("seed", s.seed);
        s.threshold = j.value("threshold", s.threshold);
        s.validate();
        return s;
    }
};

class TrainedModel {
public:
    static constexpr int kFormatVersion = 1;

    /// Fits on rows of `x` whose columns follow `schema`. The standardizer
    /// sees only these rows.
    static TrainedModel fit(const ModelSpec& spec, std::vector<std::string> schema, const Matrix& x, const Vector& y)
    {
        spec.validate();
        if (static_cast<Eigen::Index>(schema.size()) != x.cols())
            throw DataError("feature schema has " + std::to_string(schema.size()) + " names but matrix has " +
                            std::to_string(x.cols()) + " columns");
        validate_training_data(x, y, spec.task);
        TrainedModel m;
        m.spec_ = spec;
        m.schema_ = std::move(schema);
        m.scaler_ = Standardizer::fit(x);
        const Matrix z = m.scaler_.transform(x);
        const auto hyper = spec.resolved_hyperparameters();
        switch (spec.family) {
        case Family::lr: {
            LogisticRegression lr(LogisticParams::from_json(hyper));
            lr.fit(z, y);
            m.model_ = std::move(lr);
            break;
        }
        case Family::dt: {
            DecisionTree dt(spec.task, TreeParams::from_json(hyper));
            dt.fit(z, y);
            m.model_ = std::move(dt);
            break;
        }
        case Family::rf: {
            RandomForest rf(spec.task, ForestParams::from_json(hyper), spec.seed, spec.jobs);
            rf.fit(z, y);
            m.model_ = std::move(rf);
            break;
        }
        case Family::gb: {
            GradientBoosting gb(spec.task, BoostingParams::from_json(hyper));
            gb.fit(z, y);
            m.model_ = std::move(gb);
            break;
        }
        case Family::mlp: {
            Mlp mlp(spec.task, MlpParams::from_json(hyper), spec.seed);
            mlp.fit(z, y);
            m.model_ = std::move(mlp);
            break;
        }
        case Family::lasso: {
            Lasso lasso(hyper.at("lambda").get<double>());
            lasso.fit(z, y);
            m.model_ = std::move(lasso);
            break;
        }
        case Family::ridge: {
            Ridge ridge(hyper.at("lambda").get<double>());
            ridge.fit(z, y);
            m.model_ = std::move(ridge);
            break;
        }
        }
        return m;
    }

    /// Scores for rows already laid out in the training schema: a
    /// probability for classification, the estimate for regression.
    Vector scores(const Matrix& x) const
    {
        if (x.cols() != static_cast<Eigen::Index>(schema_.size()))
            throw DataError("prediction input has " + std::to_string(x.cols()) + " columns, model expects " +
                            std::to_string(schema_.size()));
        if (!x.allFinite()) throw DataError("non-finite value in prediction input");
        const Matrix z = scaler_.transform(x);
        return std::visit(
            [&](const auto& m) -> Vector {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, LogisticRegression>) return m.predict_proba(z);
                else return m.predict(z);
            },
            model_);
    }

    /// Score for one named vector; names must equal the training schema.
    double score(const std::vector<std::string>& names, const std::vector<double>& values) const
    {
        if (names != schema_) throw DataError("feature schema differs from the schema the model was trained on");
        if (values.size() != names.size()) throw DataError("feature vector length differs from its schema");
        Matrix row(1, static_cast<Eigen::Index>(values.size()));
        for (std::size_t j = 0; j < values.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = values[j];
        return scores(row)[0];
    }

    bool label(double score) const { return score >= spec_.threshold; }

    const ModelSpec& spec() const { return spec_; }
    const std::vector<std::string>& schema() const { return schema_; }
    const Standardizer& standardizer() const { return scaler_; }

    /// Impurity or coefficient magnitude per schema column, where the family
    /// has one; empty otherwise.
    Vector importance() const
    {
        return std::visit(
            [](const auto& m) -> Vector {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, Mlp>) return {};
                else if constexpr (std::is_same_v<M, DecisionTree> || std::is_same_v<M, RandomForest> ||
                                   std::is_same_v<M, GradientBoosting>)
                    return m.importance();
                else return m.weights().cwiseAbs();
            },
            model_);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json params;
        std::visit(
            [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, LogisticRegression> || std::is_same_v<M, Lasso> ||
                              std::is_same_v<M, Ridge>) {
                    params = {{"weights", to_std(m.weights())}, {"bias", m.bias()}};
                } else if constexpr (std::is_same_v<M, DecisionTree>) {
                    params = {{"tree", m.to_json()}};
                } else if constexpr (std::is_same_v<M, RandomForest>) {
                    auto trees = nlohmann::json::array();
                    for (const auto& t : m.trees()) trees.push_back(t.to_json());
                    params = {{"trees", trees}};
                } else if constexpr (std::is_same_v<M, GradientBoosting>) {
                    auto trees = nlohmann::json::array();
                    for (const auto& t : m.trees()) trees.push_back(t.to_json());
                    params = {{"base", m.base()}, {"trees", trees}};
                } else {
                    const auto& w = m.weights();
                    params = {{"hidden", w.w1.rows()},
                              {"inputs", w.w1.cols()},
                              {"flat", to_std(w.flatten())}};
                }
            },
            model_);
        return {{"format_version", kFormatVersion},
                {"spec", spec_.to_json()},
                {"schema", schema_},
                {"standardizer", scaler_.to_json()},
                {"parameters", params}};
    }

    static TrainedModel from_json(const nlohmann::json& j)
    {
        if (j.value("format_version", 0) != kFormatVersion)
            throw DataError("unsupported model format version " + j.value("format_version", nlohmann::json()).dump());
        TrainedModel m;
        m.spec_ = ModelSpec::from_json(j.at("spec"));
        m.schema_ = j.at("schema").get<std::vector<std::string>>();
        m.scaler_ = Standardizer::from_json(j.at("standardizer"));
        const auto& p = j.at("parameters");
        const auto hyper = m.spec_.resolved_hyperparameters();
        const Task task = m.spec_.task;
        auto linear_part = [&](auto model) {
            model.set(to_vector(p.at("weights").get<std::vector<double>>()), p.at("bias").get<double>());
            return model;
        };
        auto trees_of = [&](const TreeParams& tp) {
            std::vector<DecisionTree> trees;
            for (const auto& t : p.at("trees")) trees.push_back(DecisionTree::from_json(t, task, tp));
            return trees;
        };
        switch (m.spec_.family) {
        case Family::lr: m.model_ = linear_part(LogisticRegression(LogisticParams::from_json(hyper))); break;
        case Family::lasso: m.model_ = linear_part(Lasso(hyper.at("lambda").get<double>())); break;
        case Family::ridge: m.model_ = linear_part(Ridge(hyper.at("lambda").get<double>())); break;
        case Family::dt: m.model_ = DecisionTree::from_json(p.at("tree"), task, TreeParams::from_json(hyper)); break;
        case Family::rf: {
            const auto fp = ForestParams::from_json(hyper);
            RandomForest rf(task, fp, m.spec_.seed);
            rf.set_trees(trees_of(fp.tree));
            m.model_ = std::move(rf);
            break;
        }
        case Family::gb: {
            const auto bp = BoostingParams::from_json(hyper);
            GradientBoosting gb(task, bp);
            gb.set(p.at("base").get<double>(), trees_of(bp.tree));
            m.model_ = std::move(gb);
            break;
        }
        case Family::mlp: {
            const auto mp = MlpParams::from_json(hyper);
            MlpWeights w;
            w.w1.resize(p.at("hidden").get<Eigen::Index>(), p.at("inputs").get<Eigen::Index>());
            w.b1.resize(w.w1.rows());
            w.w2.resize(w.w1.rows());
            const auto flat = to_vector(p.at("flat").get<std::vector<double>>());
            if (flat.size() != w.size()) throw DataError("mlp parameter array has the wrong length");
            w.assign(flat);
            Mlp mlp(task, mp, m.spec_.seed);
            mlp.set_weights(std::move(w));
            m.model_ = std::move(mlp);
            break;
        }
        }
        return m;
    }

private:
    ModelSpec spec_;
    std::vector<std::string> schema_;
    Standardizer scaler_;
    std::variant<LogisticRegression, DecisionTree, RandomForest, GradientBoosting, Mlp, Lasso, Ridge> model_;
};

}  // namespace apppop::ml

#endif  // APPPOP_ML_MODEL_HPP
