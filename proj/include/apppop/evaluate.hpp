#ifndef APPPOP_EVALUATE_HPP
#define APPPOP_EVALUATE_HPP

// Leave-one-out evaluation. Every derived number in a report can be
// recomputed from the per-fold predictions stored alongside it.

#include <apppop/features.hpp>
#include <apppop/ml/model.hpp>
#include <apppop/ml/smote.hpp>

#include <json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace apppop::evaluate {

using ml::Matrix;
using ml::Task;
using ml::Vector;

struct Prediction {
    std::string app_id;
    double truth = 0;
    double score = 0;
};

// ---------------------------------------------------------------------------
// Metrics

struct ClassScores {
    double precision = 0, recall = 0, f1 = 0;
};

struct ClassificationMetrics {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    ClassScores popular;    // class 1
    ClassScores unpopular;  // class 0
    std::optional<double> auc;  // unset when one truth class is absent
    double mcc = 0;

    nlohmann::json to_json() const
    {
        auto cls = [](const ClassScores& c) {
            return nlohmann::json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
        };
        return {{"confusion", {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}}},
                {"popular", cls(popular)},
                {"unpopular", cls(unpopular)},
                {"auc", auc ? nlohmann::json(*auc) : nlohmann::json()},
                {"mcc", mcc}};
    }
};

/// Precision, recall and F1 are 0 when their denominator is 0.
inline ClassScores class_scores(double tp, double fp, double fn)
{
    ClassScores s;
    s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

inline double mcc(double tp, double fp, double fn, double tn)
{
    const double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return denom > 0 ? (tp * tn - fp * fn) / denom : 0.0;
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
inline double auc(const std::vector<Prediction>& preds)
{
    std::vector<double> pos, neg;
    for (const auto& p : preds) (p.truth == 1.0 ? pos : neg).push_back(p.score);
    if (pos.empty() || neg.empty()) throw DataError("AUC needs both truth classes");
    std::sort(neg.begin(), neg.end());
    double wins = 0;
    for (double s : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), s);
        wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline ClassificationMetrics confusion_metrics(long tp, long fp, long fn, long tn)
{
    ClassificationMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    const auto d = [](long v) { return static_cast<double>(v); };
    m.popular = class_scores(d(tp), d(fp), d(fn));
    m.unpopular = class_scores(d(tn), d(fn), d(fp));
    m.mcc = mcc(d(tp), d(fp), d(fn), d(tn));
    return m;
}

inline ClassificationMetrics classification_metrics(const std::vector<Prediction>& preds, double threshold = 0.5)
{
    if (preds.empty()) throw DataError("no predictions to score");
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& p : preds) {
        const bool predicted = p.score >= threshold;
        const bool actual = p.truth == 1.0;
        (predicted ? (actual ? tp : fp) : (actual ? fn : tn)) += 1;
    }
    auto m = confusion_metrics(tp, fp, fn, tn);
    if (tp + fn > 0 && fp + tn > 0) m.auc = auc(preds);
    return m;
}

struct RegressionMetrics {
    double rmse = 0, mae = 0, r2 = 0;

    nlohmann::json to_json() const { return {{"rmse", rmse}, {"mae", mae}, {"r2", r2}}; }
};

inline RegressionMetrics regression_metrics(const std::vector<Prediction>& preds)
{
    if (preds.size() < 2) throw DataError("regression metrics need at least two predictions");
    double mean = 0;
    for (const auto& p : preds) mean += p.truth;
    mean /= static_cast<double>(preds.size());
    double sse = 0, sae = 0, sst = 0;
    for (const auto& p : preds) {
        const double e = p.score - p.truth;
        sse += e * e;
        sae += std::abs(e);
        sst += (p.truth - mean) * (p.truth - mean);
    }
    if (sst == 0) throw DataError("R^2 undefined: truth has zero variance");
    const double n = static_cast<double>(preds.size());
    return {std::sqrt(sse / n), sae / n, 1.0 - sse / sst};
}

// ---------------------------------------------------------------------------
// Outlier trimming

struct TrimReport {
    std::vector<std::size_t> kept;      // indices into the input
    std::vector<std::string> dropped;   // ids
    double q1 = 0, q3 = 0, lower = 0, upper = 0, k = 1.5;

    nlohmann::json to_json() const
    {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
        return {{"rule", "tukey"}, {"k", num(k)}, {"q1", q1}, {"q3", q3},
                {"lower", num(lower)}, {"upper", num(upper)}, {"dropped", dropped}};
    }
};

/// Tukey fences [Q1 - k IQR, Q3 + k IQR] with linearly interpolated quartiles.
inline TrimReport trim_outliers(const std::vector<double>& values, const std::vector<std::string>& ids, double k = 1.5)
{
    if (values.size() != ids.size()) throw InternalError("trim_outliers: ids and values differ in length");
    if (values.size() < 4) throw DataError("outlier trimming needs at least four values");
    if (!(k >= 0)) throw ConfigError("outlier multiplier must be >= 0");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    TrimReport t;
    t.k = k;
    t.q1 = features::percentile_sorted(sorted, 25);
    t.q3 = features::percentile_sorted(sorted, 75);
    const double iqr = t.q3 - t.q1;
    t.lower = std::isinf(k) ? -std::numeric_limits<double>::infinity() : t.q1 - k * iqr;
    t.upper = std::isinf(k) ? std::numeric_limits<double>::infinity() : t.q3 + k * iqr;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < t.lower || values[i] > t.upper) t.dropped.push_back(ids[i]);
        else t.kept.push_back(i);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Leave-one-out

struct LoocvOptions {
    bool smote = false;
    int smote_k = 5;
    int jobs = 1;
};

/// Chooses columns from the training rows of one fold. Used for per-fold
/// feature selection; it never sees the held-out row.
using FoldSelector = std::function<std::vector<int>(std::size_t fold, const Matrix& x_train, const Vector& y_train)>;

struct LeakageAudit {
    int folds_checked = 0;
    int synthetic_rows = 0;
    bool passed = true;
    std::vector<std::string> violations;

    nlohmann::json to_json() const
    {
        return {{"folds_checked", folds_checked},
                {"synthetic_rows", synthetic_rows},
                {"passed", passed},
                {"violations", violations}};
    }
};

struct EvalReport {
    Task task = Task::classification;
    nlohmann::json provenance = nlohmann::json::object();
    double threshold = 0.5;
    std::vector<Prediction> predictions;  // non-degenerate folds, input order
    std::vector<std::string> degenerate_folds;
    int smote_skipped_folds = 0;
    LeakageAudit leakage;
    std::optional<ClassificationMetrics> classification;
    std::optional<RegressionMetrics> regression;

    std::size_t n_instances() const { return predictions.size() + degenerate_folds.size(); }

    /// Metrics from `predictions` alone.
    void recompute()
    {
        if (task == Task::classification) classification = classification_metrics(predictions, threshold);
        else regression = regression_metrics(predictions);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json preds = nlohmann::json::array();
        for (const auto& p : predictions) preds.push_back({{"app_id", p.app_id}, {"truth", p.truth}, {"score", p.score}});
        nlohmann::json j = {{"task", ml::to_string(task)},
                            {"provenance", provenance},
                            {"threshold", threshold},
                            {"n_instances", n_instances()},
                            {"degenerate_folds", degenerate_folds},
                            {"smote_skipped_folds", smote_skipped_folds},
                            {"leakage_audit", leakage.to_json()},
                            {"predictions", preds}};
        j["metrics"] = classification ? classification->to_json() : regression ? regression->to_json() : nlohmann::json();
        return j;
    }

    /// Rebuilds a report from JSON; metrics are recomputed, not read.
    static EvalReport from_json(const nlohmann::json& j)
    {
        EvalReport r;
        r.task = ml::parse_task(j.at("task").get<std::string>());
        r.provenance = j.at("provenance");
        r.threshold = j.at("threshold").get<double>();
        r.degenerate_folds = j.at("degenerate_folds").get<std::vector<std::string>>();
        r.smote_skipped_folds = j.value("smote_skipped_folds", 0);
        const auto& audit = j.at("leakage_audit");
        r.leakage.folds_checked = audit.at("folds_checked").get<int>();
        r.leakage.synthetic_rows = audit.at("synthetic_rows").get<int>();
        r.leakage.passed = audit.at("passed").get<bool>();
        r.leakage.violations = audit.at("violations").get<std::vector<std::string>>();
        for (const auto& p : j.at("predictions"))
            r.predictions.push_back({p.at("app_id").get<std::string>(), p.at("truth").get<double>(), p.at("score").get<double>()});
        r.recompute();
        return r;
    }
};

/// Trains on every row but i and predicts row i, for each i. With SMOTE,
/// synthetic rows are interpolated from the fold's training minority only.
inline EvalReport loocv(const Matrix& x, const Vector& y, const std::vector<std::string>& app_ids,
                        const std::vector<std::string>& schema, const ml::ModelSpec& spec, const LoocvOptions& options,
                        const FoldSelector& fold_selector = nullptr)
{
    spec.validate();
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != app_ids.size() || y.size() != n)
        throw InternalError("loocv: matrix, targets and ids differ in length");
    if (n < 3) throw DataError("leave-one-out needs at least 3 instances, got " + std::to_string(n));
    ml::validate_training_data(x, y, spec.task);
    if (options.smote && spec.task != Task::classification) throw ConfigError("SMOTE applies to classification only");

    struct FoldOutcome {
        std::optional<double> score;
        bool smote_skipped = false;
        int synthetic = 0;
        std::vector<std::string> violations;
    };
    std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(n));
    ml::ModelSpec fold_spec = spec;
    fold_spec.jobs = 1;

    parallel_for(static_cast<std::size_t>(n), options.jobs, [&](std::size_t fold) {
        auto& out = outcomes[fold];
        const auto held = static_cast<Eigen::Index>(fold);
        std::vector<Eigen::Index> train;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != held) train.push_back(i);
        for (auto i : train)
            if (app_ids[static_cast<std::size_t>(i)] == app_ids[fold])
                out.violations.push_back("fold " + app_ids[fold] + ": held-out id in training rows");

        Matrix x_train(static_cast<Eigen::Index>(train.size()), x.cols());
        Vector y_train(static_cast<Eigen::Index>(train.size()));
        for (std::size_t r = 0; r < train.size(); ++r) {
            x_train.row(static_cast<Eigen::Index>(r)) = x.row(train[r]);
            y_train[static_cast<Eigen::Index>(r)] = y[train[r]];
        }
        if (spec.task == Task::classification) {
            const double pos = y_train.sum();
            if (pos == 0 || pos == static_cast<double>(y_train.size())) return;  // degenerate
        }

        std::vector<int> columns(static_cast<std::size_t>(x.cols()));
        std::iota(columns.begin(), columns.end(), 0);
        if (fold_selector) columns = fold_selector(fold, x_train, y_train);
        std::vector<std::string> fold_schema;
        Matrix xs(x_train.rows(), static_cast<Eigen::Index>(columns.size()));
        Matrix held_row(1, static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            fold_schema.push_back(schema[static_cast<std::size_t>(columns[c])]);
            xs.col(static_cast<Eigen::Index>(c)) = x_train.col(columns[c]);
            held_row(0, static_cast<Eigen::Index>(c)) = x(held, columns[c]);
        }

        Matrix x_fit = xs;
        Vector y_fit = y_train;
        if (options.smote) {
            std::vector<Eigen::Index> minority_rows, majority_rows;
            const double pos = y_train.sum();
            const double minority_label = pos * 2 < static_cast<double>(y_train.size()) ? 1.0 : 0.0;
            for (Eigen::Index r = 0; r < y_train.size(); ++r)
                (y_train[r] == minority_label ? minority_rows : majority_rows).push_back(r);
            Matrix minority(static_cast<Eigen::Index>(minority_rows.size()), xs.cols());
            Matrix majority(static_cast<Eigen::Index>(majority_rows.size()), xs.cols());
            for (std::size_t r = 0; r < minority_rows.size(); ++r) minority.row(static_cast<Eigen::Index>(r)) = xs.row(minority_rows[r]);
            for (std::size_t r = 0; r < majority_rows.size(); ++r) majority.row(static_cast<Eigen::Index>(r)) = xs.row(majority_rows[r]);
            if (minority.rows() < 2 && majority.rows() > minority.rows()) {
                out.smote_skipped = true;
            } else {
                const auto syn = ml::smote(minority, majority, options.smote_k, Rng::derive(spec.seed, fold));
                for (const auto& p : syn.provenance) {
                    // Parents map back to original rows; neither may be the held-out row.
                    for (int parent : {p.base, p.neighbor}) {
                        const auto original = train[static_cast<std::size_t>(minority_rows[static_cast<std::size_t>(parent)])];
                        if (original == held)
                            out.violations.push_back("fold " + app_ids[fold] + ": synthetic row derived from held-out row");
                    }
                }
                out.synthetic = static_cast<int>(syn.synthetic.rows());
                x_fit.conservativeResize(xs.rows() + syn.synthetic.rows(), Eigen::NoChange);
                x_fit.bottomRows(syn.synthetic.rows()) = syn.synthetic;
                y_fit.conservativeResize(y_train.size() + syn.synthetic.rows());
                y_fit.tail(syn.synthetic.rows()).setConstant(minority_label);
            }
        }
        const auto model = ml::TrainedModel::fit(fold_spec, fold_schema, x_fit, y_fit);
        out.score = model.scores(held_row)[0];
    });

    EvalReport report;
    report.task = spec.task;
    report.threshold = spec.threshold;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = outcomes[static_cast<std::size_t>(i)];
        report.leakage.folds_checked += 1;
        report.leakage.synthetic_rows += o.synthetic;
        report.smote_skipped_folds += o.smote_skipped ? 1 : 0;
        for (const auto& v : o.violations) report.leakage.violations.push_back(v);
        if (o.score) report.predictions.push_back({app_ids[static_cast<std::size_t>(i)], y[i], *o.score});
        else report.degenerate_folds.push_back(app_ids[static_cast<std::size_t>(i)]);
    }
    report.leakage.passed = report.leakage.violations.empty();
    if (!report.leakage.passed) throw InternalError("leakage audit failed: " + report.leakage.violations.front());
    if (report.predictions.empty()) throw DataError("every leave-one-out fold was degenerate");
    report.recompute();
    return report;
}

// ---------------------------------------------------------------------------
// Summary table

inline const std::vector<std::string>& summary_columns()
{
    static const std::vector<std::string> kColumns = {
        "model",          "feature_set",       "target",           "task",           "n_instances",
        "degenerate",     "precision_popular", "recall_popular",   "f1_popular",     "precision_unpopular",
        "recall_unpopular", "f1_unpopular",    "auc",              "mcc",            "rmse",
        "mae",            "r2"};
    return kColumns;
}

inline std::vector<std::string> summary_row(const std::string& model, const std::string& feature_set,
                                            const std::string& target, const EvalReport& r)
{
    std::vector<std::string> row = {model, feature_set, target, ml::to_string(r.task), std::to_string(r.n_instances()),
                                    std::to_string(r.degenerate_folds.size())};
    auto num = [](double v) { return format_number(v); };
    if (r.classification) {
        const auto& c = *r.classification;
        for (const auto& s : {c.popular, c.unpopular}) {
            row.push_back(num(s.precision));
            row.push_back(num(s.recall));
            row.push_back(num(s.f1));
        }
        row.insert(row.end(), {c.auc ? num(*c.auc) : "", num(c.mcc), "", "", ""});
    } else {
        row.insert(row.end(), {"", "", "", "", "", "", "", ""});
        const auto& g = *r.regression;
        row.insert(row.end(), {num(g.rmse), num(g.mae), num(g.r2)});
    }
    return row;
}

}  // namespace apppop::evaluate

#endif  // APPPOP_EVALUATE_HPP
