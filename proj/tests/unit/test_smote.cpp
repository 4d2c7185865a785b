#include <apppop/ml/smote.hpp>

#include <gtest/gtest.h>

using namespace apppop;
using namespace apppop::ml;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double offset = 0)
{
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = offset + rng.normal();
    return m;
}

}  // namespace

TEST(Smote, BalancedInputIsUnchanged)
{
    Rng rng(1);
    const Matrix a = random_matrix(4, 2, rng), b = random_matrix(4, 2, rng);
    const auto r = smote(a, b, 5, 0);
    EXPECT_EQ(r.synthetic.rows(), 0);
    EXPECT_TRUE(r.provenance.empty());
}

TEST(Smote, TwoPointsInterpolateOnOpenSegment)
{
    Matrix minority(2, 2);
    minority << 0, 0, 1, 1;
    Rng rng(2);
    const Matrix majority = random_matrix(4, 2, rng, 5);
    const auto r = smote(minority, majority, 5, 3);
    ASSERT_EQ(r.synthetic.rows(), 2);
    EXPECT_EQ(r.k_used, 1);
    for (Eigen::Index s = 0; s < 2; ++s) {
        const double u = r.synthetic(s, 0);
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_DOUBLE_EQ(r.synthetic(s, 1), u);
    }
    EXPECT_LT(smote_residual(minority, r), 1e-12);
}

TEST(Smote, ClampsNeighbourCount)
{
    Rng rng(4);
    const auto r = smote(random_matrix(3, 2, rng), random_matrix(9, 2, rng), 5, 1);
    EXPECT_EQ(r.k_used, 2);
    EXPECT_EQ(r.synthetic.rows(), 6);
}

TEST(Smote, SingleMinorityPointCannotInterpolate)
{
    Rng rng(5);
    try {
        smote(random_matrix(1, 2, rng), random_matrix(4, 2, rng), 5, 1);
        FAIL() << "expected a data error";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("cannot interpolate"), std::string::npos);
    }
}

TEST(Smote, RandomInstancesStayOnParentSegments)
{
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(6));
        const int minority = 2 + static_cast<int>(rng.below(10));
        const int majority = minority + static_cast<int>(rng.below(20));
        const Matrix a = random_matrix(minority, d, rng), b = random_matrix(majority, d, rng, 2);
        const auto r = smote(a, b, 1 + static_cast<int>(rng.below(6)), rng.next());
        EXPECT_EQ(a.rows() + r.synthetic.rows(), b.rows());
        EXPECT_LT(smote_residual(a, r), 1e-9);
        for (const auto& p : r.provenance) {
            EXPECT_NE(p.base, p.neighbor);
            EXPECT_GT(p.weight, 0.0);
            EXPECT_LT(p.weight, 1.0);
        }
    }
}

TEST(Smote, NeighboursComeFromStandardizedSpace)
{
    // Column 1 has a huge raw scale; standardized, column 0 separates the
    // minority points into two tight pairs.
    Matrix minority(4, 2);
    minority << 0, 0, 0.01, 1000, 10, 10, 10.01, 1010;
    Matrix majority(8, 2);
    majority << -5, -5000, 15, 5000, -5, 5000, 15, -5000, 5, 0, 5, 500, 5, -500, 5, 1500;
    const auto r = smote(minority, majority, 1, 9);
    for (const auto& p : r.provenance) EXPECT_EQ(p.base / 2, p.neighbor / 2);
}

TEST(Smote, DeterministicUnderSeed)
{
    Rng rng(7);
    const Matrix a = random_matrix(5, 3, rng), b = random_matrix(12, 3, rng);
    const auto r1 = smote(a, b, 3, 77), r2 = smote(a, b, 3, 77);
    EXPECT_EQ(r1.synthetic, r2.synthetic);
}
