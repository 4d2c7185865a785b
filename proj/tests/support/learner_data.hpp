#ifndef APPPOP_TESTS_LEARNER_DATA_HPP
#define APPPOP_TESTS_LEARNER_DATA_HPP

// Small generated datasets shared by the learner tests and the acceptance run.

#include <apppop/ml/model.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace testing_support {

using apppop::Rng;
using apppop::ml::Family;
using apppop::ml::Matrix;
using apppop::ml::ModelSpec;
using apppop::ml::Task;
using apppop::ml::Vector;

struct Dataset {
    Matrix x;
    Vector y;
};

inline Dataset separable_blobs(int n, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d{Matrix(n, 2), Vector(n)};
    for (int i = 0; i < n; ++i) {
        const bool positive = i % 2 == 0;
        const double cx = positive ? 3.0 : -3.0;
        d.x(i, 0) = cx + 0.5 * rng.normal();
        d.x(i, 1) = cx + 0.5 * rng.normal();
        d.y[i] = positive ? 1.0 : 0.0;
    }
    return d;
}

inline Dataset xor_quadrants(int n, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d{Matrix(n, 2), Vector(n)};
    for (int i = 0; i < n; ++i) {
        const double sx = (i % 2 == 0) ? 1.0 : -1.0;
        const double sy = ((i / 2) % 2 == 0) ? 1.0 : -1.0;
        d.x(i, 0) = sx * (0.2 + rng.uniform());
        d.x(i, 1) = sy * (0.2 + rng.uniform());
        d.y[i] = sx * sy > 0 ? 1.0 : 0.0;
    }
    return d;
}

inline double accuracy(const Vector& scores, const Vector& y)
{
    int hits = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) hits += ((scores[i] >= 0.5) == (y[i] == 1.0));
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

inline std::vector<std::string> feature_names(Eigen::Index d)
{
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < d; ++j) out.push_back("f" + std::to_string(j));
    return out;
}

inline ModelSpec spec_of(Family f, Task t, nlohmann::json hyper = nlohmann::json::object(), std::uint64_t seed = 7)
{
    ModelSpec s;
    s.family = f;
    s.task = t;
    s.hyperparameters = std::move(hyper);
    s.seed = seed;
    return s;
}

inline double relative_error(const Vector& a, const Vector& b)
{
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Feature rows where the label is the sign of a fixed linear combination of
/// five columns; every other column is independent noise.
struct PlantedSignal {
    Matrix x;
    Vector y;
    std::vector<std::string> schema;
    std::vector<std::string> informative;
};

inline PlantedSignal planted_signal(int n, int d, std::uint64_t seed)
{
    Rng rng(seed);
    PlantedSignal p{Matrix(n, d), Vector(n), feature_names(d), {}};
    const std::vector<double> coef = {1.5, -1.2, 1.0, -0.9, 1.3};
    std::vector<int> cols;
    for (int k = 0; k < 5; ++k) cols.push_back(k * d / 5 + 1);
    for (int c : cols) p.informative.push_back(p.schema[static_cast<std::size_t>(c)]);
    for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = rng.normal();
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t k = 0; k < cols.size(); ++k) s += coef[k] * p.x(i, cols[k]);
        p.y[i] = s > 0 ? 1.0 : 0.0;
    }
    return p;
}

}  // namespace testing_support

#endif
