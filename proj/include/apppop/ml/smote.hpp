#ifndef APPPOP_ML_SMOTE_HPP
#define APPPOP_ML_SMOTE_HPP

// Synthetic minority oversampling. Each synthetic row records the two
// minority rows it interpolates, so callers can audit provenance.

#include <apppop/ml/common.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace apppop::ml {

struct SyntheticSample {
    int base = 0;      // row of the minority matrix
    int neighbor = 0;  // row of the minority matrix
    double weight = 0; // x = base + weight * (neighbor - base), weight in (0,1)
};

struct SmoteResult {
    Matrix synthetic;
    std::vector<SyntheticSample> provenance;
    int k_used = 0;
};

/// k nearest minority neighbours of every minority row (self excluded),
/// Euclidean distance on `scaled` rows; ties go to the lower index.
inline std::vector<std::vector<int>> nearest_neighbours(const Matrix& scaled, int k)
{
    const Eigen::Index n = scaled.rows();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> dist;
    for (Eigen::Index i = 0; i < n; ++i) {
        dist.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) dist.emplace_back((scaled.row(i) - scaled.row(j)).squaredNorm(), static_cast<int>(j));
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(i)].push_back(dist[static_cast<std::size_t>(t)].second);
    }
    return out;
}

/// Synthesizes |majority| - |minority| rows so both classes end up equal.
/// Neighbour search runs on features standardized over both classes;
/// interpolation happens in the original units (the two are equivalent
/// for a per-column affine scaling).
inline SmoteResult smote(const Matrix& minority, const Matrix& majority, int k, std::uint64_t seed)
{
    SmoteResult result;
    result.synthetic.resize(0, minority.cols());
    const Eigen::Index needed = majority.rows() - minority.rows();
    if (needed <= 0) return result;
    if (minority.rows() < 2) throw DataError("cannot interpolate: fewer than two minority samples");
    if (k < 1) throw ConfigError("smote k must be >= 1");
    result.k_used = std::min<int>(k, static_cast<int>(minority.rows()) - 1);

    Matrix both(minority.rows() + majority.rows(), minority.cols());
    both << minority, majority;
    const auto scaler = Standardizer::fit(both);
    const auto neighbours = nearest_neighbours(scaler.transform(minority), result.k_used);

    Rng rng(seed);
    result.synthetic.resize(needed, minority.cols());
    for (Eigen::Index s = 0; s < needed; ++s) {
        SyntheticSample p;
        p.base = static_cast<int>(rng.below(static_cast<std::size_t>(minority.rows())));
        const auto& nn = neighbours[static_cast<std::size_t>(p.base)];
        p.neighbor = nn[rng.below(nn.size())];
        p.weight = rng.uniform_open();
        result.synthetic.row(s) = minority.row(p.base) + p.weight * (minority.row(p.neighbor) - minority.row(p.base));
        result.provenance.push_back(p);
    }
    return result;
}

/// Largest distance of a synthetic row from the segment between its two
/// recorded parents. The interpolation weight is re-derived by projection,
/// not read back; a weight outside (0,1) yields +inf.
inline double smote_residual(const Matrix& minority, const SmoteResult& r)
{
    double worst = 0;
    for (std::size_t s = 0; s < r.provenance.size(); ++s) {
        const auto& p = r.provenance[s];
        const Vector a = minority.row(p.base).transpose();
        const Vector d = minority.row(p.neighbor).transpose() - a;
        const Vector x = r.synthetic.row(static_cast<Eigen::Index>(s)).transpose();
        const double len = d.squaredNorm();
        double residual = (x - a).cwiseAbs().maxCoeff();
        if (len > 0) {
            const double u = (x - a).dot(d) / len;
            if (!(u > 0 && u < 1)) return std::numeric_limits<double>::infinity();
            residual = (x - a - u * d).cwiseAbs().maxCoeff();
        }
        worst = std::max(worst, residual);
    }
    return worst;
}

}  // namespace apppop::ml

#endif  // APPPOP_ML_SMOTE_HPP
