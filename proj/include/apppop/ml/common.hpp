#ifndef APPPOP_ML_COMMON_HPP
#define APPPOP_ML_COMMON_HPP

#include <apppop/common.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace apppop::ml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Task { classification, regression };

inline std::string to_string(Task t) { return t == Task::classification ? "classification" : "regression"; }

inline Task parse_task(const std::string& s)
{
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw ConfigError("unknown task '" + s + "' (expected classification or regression)");
}

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw DataError("ragged feature matrix");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

inline Vector to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Rejects non-finite inputs and, for classification, anything other than
/// two present classes coded 0/1.
inline void validate_training_data(const Matrix& x, const Vector& y, Task task)
{
    if (x.rows() != y.size()) throw DataError("feature rows and targets differ in length");
    if (x.rows() == 0) throw DataError("empty training set");
    if (!x.allFinite()) throw DataError("non-finite value in features");
    if (!y.allFinite()) throw DataError("non-finite value in targets");
    if (task == Task::classification) {
        bool zero = false, one = false;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] == 0) zero = true;
            else if (y[i] == 1) one = true;
            else throw DataError("classification targets must be 0 or 1");
        }
        if (!zero || !one) throw DataError("single-class training set");
    }
}

/// Per-column centering and scaling fitted on training data only. Constant
/// columns get unit scale.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& x)
    {
        Standardizer s;
        s.mean = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - s.mean[j]).square().mean();
            s.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
        return s;
    }

    Matrix transform(const Matrix& x) const
    {
        return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }

    Vector transform_row(const Vector& x) const { return (x - mean).cwiseQuotient(scale); }

    nlohmann::json to_json() const { return {{"mean", to_std(mean)}, {"scale", to_std(scale)}}; }

    static Standardizer from_json(const nlohmann::json& j)
    {
        Standardizer s;
        s.mean = to_vector(j.at("mean").get<std::vector<double>>());
        s.scale = to_vector(j.at("scale").get<std::vector<double>>());
        return s;
    }
};

inline double sigmoid(double z)
{
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double binary_log_loss(const Vector& logits, const Vector& y)
{
    double loss = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) loss += softplus(logits[i]) - y[i] * logits[i];
    return loss / static_cast<double>(y.size());
}

}  // namespace apppop::ml

#endif  // APPPOP_ML_COMMON_HPP
