#include "../support/learner_data.hpp"

#include <apppop/ml/model.hpp>

#include <gtest/gtest.h>

using namespace apppop;
using namespace apppop::ml;

using namespace testing_support;

TEST(Logistic, SeparableBlobsReachFullAccuracy)
{
    const auto d = separable_blobs(60, 1);
    const auto m = TrainedModel::fit(spec_of(Family::lr, Task::classification), feature_names(2), d.x, d.y);
    EXPECT_DOUBLE_EQ(accuracy(m.scores(d.x), d.y), 1.0);
}

TEST(Logistic, ZeroWeightsScoreOneHalf)
{
    LogisticRegression lr;
    lr.set(Vector::Zero(3), 0.0);
    Rng rng(3);
    Matrix x(5, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 10 * rng.normal();
    for (double p : to_std(lr.predict_proba(x))) EXPECT_DOUBLE_EQ(p, 0.5);
}

TEST(Logistic, GradientMatchesFiniteDifferences)
{
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(19));
        const int d = 1 + static_cast<int>(rng.below(10));
        Matrix x(n, d);
        Vector y(n), w(d);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int i = 0; i < n; ++i) y[i] = rng.below(2) ? 1.0 : 0.0;
        for (int j = 0; j < d; ++j) w[j] = rng.normal();
        const double b = rng.normal(), l2 = rng.uniform();
        Vector gw;
        double gb = 0;
        LogisticRegression::gradient(x, y, w, b, l2, gw, gb);
        Vector analytic(d + 1), numeric(d + 1);
        analytic << gw, gb;
        const double h = 1e-6;
        for (int j = 0; j <= d; ++j) {
            Vector wp = w, wm = w;
            double bp = b, bm = b;
            if (j < d) {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            numeric[j] = (LogisticRegression::loss(x, y, wp, bp, l2) - LogisticRegression::loss(x, y, wm, bm, l2)) / (2 * h);
        }
        EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "trial " << trial;
    }
}

TEST(Logistic, NewtonFitIsStationary)
{
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(40));
        const int d = 1 + static_cast<int>(rng.below(8));
        Matrix x(n, d);
        Vector y(n);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int i = 0; i < n; ++i) y[i] = x(i, 0) + rng.normal() > 0 ? 1.0 : 0.0;
        if (y.sum() == 0 || y.sum() == n) continue;
        LogisticRegression lr({0.05, 0.0, 500, 0.1});
        lr.fit(x, y);
        Vector gw;
        double gb = 0;
        LogisticRegression::gradient(x, y, lr.weights(), lr.bias(), 0.05, gw, gb);
        EXPECT_LT(gw.cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
        EXPECT_LT(std::abs(gb), 1e-8) << "trial " << trial;
    }
}

TEST(Mlp, GradientMatchesFiniteDifferences)
{
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(19));
        const int d = 1 + static_cast<int>(rng.below(10));
        const Task task = trial % 2 ? Task::regression : Task::classification;
        Matrix x(n, d);
        Vector y(n);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int i = 0; i < n; ++i) y[i] = task == Task::classification ? (rng.below(2) ? 1.0 : 0.0) : rng.normal();
        auto wt = Mlp::initial_weights(d, 6, rng);
        for (Eigen::Index i = 0; i < wt.b1.size(); ++i) wt.b1[i] = 0.1 * rng.normal();
        const double l2 = 0.1 * rng.uniform();
        MlpWeights grad = wt;
        Mlp::loss_and_gradient(wt, x, y, task, l2, &grad);
        const Vector analytic = grad.flatten();
        const Vector theta = wt.flatten();
        Vector numeric(theta.size());
        const double h = 1e-6;
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            MlpWeights plus = wt, minus = wt;
            Vector tp = theta, tm = theta;
            tp[k] += h;
            tm[k] -= h;
            plus.assign(tp);
            minus.assign(tm);
            numeric[k] = (Mlp::loss_and_gradient(plus, x, y, task, l2, nullptr) -
                          Mlp::loss_and_gradient(minus, x, y, task, l2, nullptr)) / (2 * h);
        }
        EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "trial " << trial;
    }
}

TEST(Mlp, LearnsXorWhereLogisticCannot)
{
    const auto d = xor_quadrants(200, 5);
    const auto mlp = TrainedModel::fit(spec_of(Family::mlp, Task::classification), feature_names(2), d.x, d.y);
    EXPECT_GE(accuracy(mlp.scores(d.x), d.y), 0.95);
    const auto lr = TrainedModel::fit(spec_of(Family::lr, Task::classification), feature_names(2), d.x, d.y);
    EXPECT_LE(accuracy(lr.scores(d.x), d.y), 0.6);
}

TEST(Ridge, SatisfiesNormalEquations)
{
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(30));
        const int d = 1 + static_cast<int>(rng.below(8));
        Matrix x(n, d);
        Vector y(n);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int i = 0; i < n; ++i) y[i] = rng.normal();
        const double lambda = rng.uniform() * 2;
        const Vector w = ridge_solve(x, y, lambda);
        Matrix gram = x.transpose() * x;
        gram.diagonal().array() += lambda;
        EXPECT_LT((gram * w - x.transpose() * y).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Lasso, RecoversSparseSignal)
{
    Rng rng(4);
    Matrix x(100, 6);
    Vector y(100);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (int i = 0; i < 100; ++i) y[i] = 2 * x(i, 1) - 3 * x(i, 4) + 0.01 * rng.normal();
    Lasso lasso(1e-2);
    lasso.fit(x, y);
    EXPECT_NEAR(lasso.weights()[1], 2.0, 0.05);
    EXPECT_NEAR(lasso.weights()[4], -3.0, 0.05);
    for (int j : {0, 2, 3, 5}) EXPECT_LT(std::abs(lasso.weights()[j]), 0.05);
}

TEST(Tree, ConstantTargetPredictsConstant)
{
    Rng rng(2);
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Vector y = Vector::Constant(30, 4.25);
    DecisionTree tree(Task::regression, {});
    tree.fit(x, y);
    EXPECT_EQ(tree.nodes().size(), 1u);
    Matrix probe(4, 3);
    probe << -9, 0, 9, 1, 2, 3, 100, -100, 0, 0, 0, 0;
    for (double v : to_std(tree.predict(probe))) EXPECT_DOUBLE_EQ(v, 4.25);
}

TEST(Tree, StumpIsPiecewiseConstant)
{
    const auto stump = DecisionTree::stump(Task::regression, 1, 0.5, -1.0, 2.0);
    Eigen::RowVector3d row(0, 0.5, 0);
    EXPECT_DOUBLE_EQ(stump.predict_row(row), -1.0);
    row[1] = 0.4999;
    EXPECT_DOUBLE_EQ(stump.predict_row(row), -1.0);
    row[1] = 0.5001;
    EXPECT_DOUBLE_EQ(stump.predict_row(row), 2.0);
    row[0] = 1e9;
    EXPECT_DOUBLE_EQ(stump.predict_row(row), 2.0);
}

TEST(Tree, TieBreaksOnLowestFeatureThenThreshold)
{
    // Columns 0 and 2 are identical perfect splitters; column 0 must win.
    Matrix x(4, 3);
    x << 0, 5, 0, 1, 5, 1, 2, 5, 2, 3, 5, 3;
    Vector y(4);
    y << 0, 0, 1, 1;
    DecisionTree tree(Task::classification, {8, 1, 0});
    tree.fit(x, y);
    EXPECT_EQ(tree.nodes()[0].feature, 0);
    EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 1.5);
}

TEST(Forest, IdenticalTreesMatchOneTree)
{
    const auto stump = DecisionTree::stump(Task::regression, 0, 1.0, 3.0, 7.0);
    RandomForest forest(Task::regression, {}, 0);
    forest.set_trees({stump, stump, stump});
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        Eigen::RowVector2d row(4 * rng.normal(), rng.normal());
        EXPECT_DOUBLE_EQ(forest.predict_row(row), stump.predict_row(row));
    }
}

TEST(Forest, ThreadCountDoesNotChangeResult)
{
    const auto d = xor_quadrants(80, 9);
    ForestParams p;
    p.trees = 25;
    RandomForest one(Task::classification, p, 42, 1), four(Task::classification, p, 42, 4);
    one.fit(d.x, d.y);
    four.fit(d.x, d.y);
    const Vector a = one.predict(d.x), b = four.predict(d.x);
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Boosting, TrainingLossNeverIncreases)
{
    for (Task task : {Task::classification, Task::regression}) {
        Rng rng(task == Task::classification ? 1 : 2);
        Matrix x(60, 4);
        Vector y(60);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (int i = 0; i < 60; ++i) {
            const double signal = x(i, 0) - x(i, 2) * x(i, 3) + 0.3 * rng.normal();
            y[i] = task == Task::classification ? (signal > 0 ? 1.0 : 0.0) : signal;
        }
        BoostingParams p;
        p.rounds = 60;
        GradientBoosting gb(task, p);
        gb.fit(x, y);
        const auto& h = gb.loss_history();
        ASSERT_EQ(h.size(), 61u);
        for (std::size_t r = 1; r < h.size(); ++r) EXPECT_LE(h[r], h[r - 1] + 1e-12) << "round " << r;
        EXPECT_LT(h.back(), 0.5 * h.front());
    }
}

TEST(Model, SpecValidation)
{
    EXPECT_THROW(spec_of(Family::lr, Task::regression).validate(), ConfigError);
    EXPECT_THROW(spec_of(Family::ridge, Task::classification).validate(), ConfigError);
    EXPECT_THROW(spec_of(Family::dt, Task::regression, {{"max_depth", 0}}).validate(), ConfigError);
    EXPECT_THROW(spec_of(Family::mlp, Task::regression, {{"learning_rate", 0.0}}).validate(), ConfigError);
    EXPECT_THROW(spec_of(Family::lasso, Task::regression, {{"lambda", -1.0}}).validate(), ConfigError);
    EXPECT_THROW(spec_of(Family::rf, Task::regression, {{"tree_count", 3}}).validate(), ConfigError);
    EXPECT_NO_THROW(spec_of(Family::gb, Task::classification, {{"rounds", 5}}).validate());
}

TEST(Model, RejectsBadTrainingData)
{
    auto d = separable_blobs(10, 1);
    const Vector ones = Vector::Ones(10);
    EXPECT_THROW(TrainedModel::fit(spec_of(Family::lr, Task::classification), feature_names(2), d.x, ones), DataError);
    d.x(3, 1) = std::nan("");
    EXPECT_THROW(TrainedModel::fit(spec_of(Family::lr, Task::classification), feature_names(2), d.x, d.y), DataError);
}

TEST(Model, PredictRejectsForeignSchema)
{
    const auto d = separable_blobs(20, 1);
    const auto m = TrainedModel::fit(spec_of(Family::lr, Task::classification), feature_names(2), d.x, d.y);
    EXPECT_NO_THROW(m.score({"f0", "f1"}, {1.0, 2.0}));
    EXPECT_THROW(m.score({"f1", "f0"}, {1.0, 2.0}), DataError);
    EXPECT_THROW(m.score({"f0"}, {1.0}), DataError);
    EXPECT_THROW(m.scores(Matrix::Zero(1, 3)), DataError);
}

TEST(Model, ScoresAreProbabilitiesForClassification)
{
    const auto d = xor_quadrants(60, 3);
    for (Family f : default_families(Task::classification)) {
        const auto m = TrainedModel::fit(spec_of(f, Task::classification, f == Family::rf ? nlohmann::json{{"trees", 20}}
                                                                                       : nlohmann::json::object()),
                                         feature_names(2), d.x, d.y);
        for (double s : to_std(m.scores(d.x))) {
            EXPECT_GE(s, 0.0) << to_string(f);
            EXPECT_LE(s, 1.0) << to_string(f);
        }
    }
}

TEST(Model, JsonRoundTripIsBitIdentical)
{
    const auto cls = xor_quadrants(40, 4);
    Dataset reg{cls.x, cls.x.col(0) - 2 * cls.x.col(1)};
    for (Task task : {Task::classification, Task::regression}) {
        const auto& d = task == Task::classification ? cls : reg;
        for (Family f : default_families(task)) {
            nlohmann::json hyper = nlohmann::json::object();
            if (f == Family::rf) hyper = {{"trees", 10}};
            if (f == Family::gb) hyper = {{"rounds", 10}};
            if (f == Family::mlp) hyper = {{"epochs", 5}, {"hidden", 8}};
            const auto m = TrainedModel::fit(spec_of(f, task, hyper), feature_names(2), d.x, d.y);
            const auto text = m.to_json().dump();
            const auto back = TrainedModel::from_json(nlohmann::json::parse(text));
            EXPECT_EQ(back.to_json().dump(), text) << to_string(f);
            const Vector a = m.scores(d.x), b = back.scores(d.x);
            for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << to_string(f);
        }
    }
}

TEST(Model, FitIsDeterministicUnderSeed)
{
    const auto d = xor_quadrants(60, 6);
    for (Family f : {Family::rf, Family::mlp}) {
        nlohmann::json hyper = f == Family::rf ? nlohmann::json{{"trees", 15}} : nlohmann::json{{"epochs", 20}};
        const auto a = TrainedModel::fit(spec_of(f, Task::classification, hyper, 99), feature_names(2), d.x, d.y);
        const auto b = TrainedModel::fit(spec_of(f, Task::classification, hyper, 99), feature_names(2), d.x, d.y);
        EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    }
}
