#include <apppop/select.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace apppop;
using namespace apppop::select;

namespace {

features::FeatureMatrix matrix_with(const std::vector<std::string>& schema)
{
    features::FeatureMatrix m;
    m.schema = schema;
    m.app_ids = {"a"};
    m.rows = {std::vector<double>(schema.size(), 1.0)};
    return m;
}

struct Planted {
    Matrix x;
    Vector y;
    std::vector<std::string> schema;
    std::vector<std::string> informative;
};

/// 5 informative columns at scattered positions among `d` noise columns; d > 5.
Planted planted(Task task, int n, int d, std::uint64_t seed)
{
    Rng rng(seed);
    Planted p{Matrix(n, d), Vector(n), {}, {}};
    for (int j = 0; j < d; ++j) p.schema.push_back("f" + std::to_string(j));
    std::vector<int> cols;
    for (int k = 0; k < 5; ++k) cols.push_back(k * d / 5 + 1);
    const std::vector<double> coef = {1.5, -1.2, 1.0, -0.9, 1.3};
    for (int c : cols) p.informative.push_back(p.schema[static_cast<std::size_t>(c)]);
    for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = rng.normal();
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t k = 0; k < cols.size(); ++k) s += coef[k] * p.x(i, cols[k]);
        s += 0.3 * rng.normal();
        p.y[i] = task == Task::classification ? (s > 0 ? 1.0 : 0.0) : s;
    }
    return p;
}

}  // namespace

TEST(SizeOnly, ReturnsAppLoc)
{
    const auto m = matrix_with({"x", "app_loc"});
    EXPECT_EQ(size_only(m), std::vector<std::string>{"app_loc"});
    EXPECT_EQ(size_only(m), size_only(m));
    EXPECT_THROW(size_only(matrix_with({"x"})), DataError);
}

TEST(Handpicked, TwentyEightNamesAllInSchema)
{
    EXPECT_EQ(handpicked_names().size(), 28u);
    EXPECT_EQ(std::set<std::string>(handpicked_names().begin(), handpicked_names().end()).size(), 28u);
    const auto schema = features::feature_schema(features::Vocabulary{});
    for (const auto& n : handpicked_names())
        EXPECT_NE(std::find(schema.begin(), schema.end(), n), schema.end()) << n;
    EXPECT_EQ(handpicked(matrix_with(schema)).size(), 28u);
}

TEST(Handpicked, MissingNameIsReported)
{
    auto schema = features::feature_schema(features::Vocabulary{});
    schema.erase(std::find(schema.begin(), schema.end(), "method_readability_p50"));
    try {
        handpicked(matrix_with(schema));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("method_readability_p50"), std::string::npos);
    }
}

TEST(Selectors, PerfectCorrelateRanksFirst)
{
    Rng rng(1);
    Matrix x(40, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Vector y = x.col(3);
    const auto r = run_selector("pearson", x, y, {"a", "b", "c", "d", "e"}, Task::regression, {});
    EXPECT_EQ(r.ranked.front(), "d");
}

TEST(Selectors, ReturnsExactlyN)
{
    const auto p = planted(Task::classification, 60, 30, 2);
    SelectorParams params;
    params.forest_trees = 20;
    params.boosting_rounds = 20;
    for (const auto& name : selector_names(Task::classification)) {
        const auto r = run_selector(name, p.x, p.y, p.schema, Task::classification, params);
        EXPECT_EQ(r.ranked.size(), 25u) << name;
        EXPECT_EQ(std::set<std::string>(r.ranked.begin(), r.ranked.end()).size(), 25u) << name;
    }
}

TEST(Selectors, ConstantFeatureNeverAboveNonConstant)
{
    Rng rng(3);
    for (Task task : {Task::classification, Task::regression}) {
        auto p = planted(task, 50, 30, 4);
        p.x.col(0).setConstant(7.0);
        p.x.col(5).setConstant(0.0);
        SelectorParams params;
        params.n = 30;
        params.forest_trees = 10;
        params.boosting_rounds = 10;
        for (const auto& name : selector_names(task)) {
            const auto r = run_selector(name, p.x, p.y, p.schema, task, params);
            EXPECT_EQ(r.ranked[28], "f0") << name;
            EXPECT_EQ(r.ranked[29], "f5") << name;
            EXPECT_EQ(r.scores[28], 0.0) << name;
        }
    }
}

TEST(Selectors, PlantedSignalInEveryTopList)
{
    for (Task task : {Task::classification, Task::regression}) {
        const auto p = planted(task, 200, 100, 5);
        SelectorParams params;
        params.forest_trees = 100;
        params.boosting_rounds = 100;
        for (const auto& name : selector_names(task)) {
            const auto r = run_selector(name, p.x, p.y, p.schema, task, params);
            for (const auto& f : p.informative)
                EXPECT_NE(std::find(r.ranked.begin(), r.ranked.end(), f), r.ranked.end())
                    << ml::to_string(task) << " " << name << " missed " << f;
        }
    }
}

TEST(Selectors, DuplicatedRowsKeepUnivariateRanking)
{
    const auto p = planted(Task::regression, 40, 30, 6);
    Matrix x2(80, 30);
    x2 << p.x, p.x;
    Vector y2(80);
    y2 << p.y, p.y;
    for (const char* name : {"pearson", "anova_f"}) {
        const auto a = run_selector(name, p.x, p.y, p.schema, Task::regression, {});
        const auto b = run_selector(name, x2, y2, p.schema, Task::regression, {});
        EXPECT_EQ(a.ranked, b.ranked) << name;
    }
}

TEST(Selectors, DeterministicUnderSeed)
{
    const auto p = planted(Task::classification, 60, 30, 7);
    SelectorParams params;
    params.forest_trees = 30;
    params.seed = 11;
    const auto a = run_selector("random_forest", p.x, p.y, p.schema, Task::classification, params);
    params.jobs = 3;
    const auto b = run_selector("random_forest", p.x, p.y, p.schema, Task::classification, params);
    EXPECT_EQ(a.ranked, b.ranked);
    EXPECT_EQ(a.scores, b.scores);
}

TEST(Selectors, WrongTaskSelectorRejected)
{
    const auto p = planted(Task::regression, 20, 10, 1);
    std::vector<std::string> schema(p.schema.begin(), p.schema.begin() + 5);
    EXPECT_THROW(run_selector("chi2", p.x.leftCols(5), p.y, schema, Task::regression, {}), ConfigError);
}

TEST(Chi2, SeparatingFeatureScoresHighest)
{
    Matrix x(8, 2);
    x << 0, 1, 0, 2, 0, 3, 0, 4, 1, 1, 1, 2, 1, 3, 1, 4;
    Vector y(8);
    y << 0, 0, 0, 0, 1, 1, 1, 1;
    const auto s = chi2_scores(x, y);
    EXPECT_DOUBLE_EQ(s[0], 8.0);
    EXPECT_DOUBLE_EQ(s[1], 0.0);
}

TEST(Vote, QuorumRules)
{
    auto result = [](std::vector<std::string> ranked) {
        SelectorResult r;
        r.selector = "s";
        r.ranked = std::move(ranked);
        return r;
    };
    std::vector<SelectorResult> rs = {result({"a", "b"}), result({"a", "b"}), result({"a", "c"}),
                                      result({"d"}),      result({"d"}),      result({"x"})};
    const auto v = vote(rs);
    EXPECT_EQ(v.quorum, 3);
    EXPECT_EQ(v.selected, std::vector<std::string>{"a"});
    EXPECT_EQ(v.votes.at("b"), 2);
    rs.pop_back();
    EXPECT_THROW(vote(rs), DataError);

    std::vector<SelectorResult> same(6, result({"p", "q", "r"}));
    EXPECT_EQ(vote(same).selected, (std::vector<std::string>{"p", "q", "r"}));
}

TEST(Vote, MatchesThresholdSetOnRandomPanels)
{
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SelectorResult> rs(6);
        std::map<std::string, int> expected;
        for (auto& r : rs) {
            std::vector<std::string> pool;
            for (int f = 0; f < 40; ++f) pool.push_back("f" + std::to_string(f));
            rng.shuffle(pool);
            pool.resize(1 + rng.below(25));
            for (const auto& f : pool) ++expected[f];
            r.ranked = pool;
        }
        std::set<std::string> want;
        for (const auto& [f, c] : expected)
            if (c >= 3) want.insert(f);
        const auto v = vote(rs);
        EXPECT_EQ(std::set<std::string>(v.selected.begin(), v.selected.end()), want);
        auto reversed = rs;
        std::reverse(reversed.begin(), reversed.end());
        for (auto& r : reversed) std::reverse(r.ranked.begin(), r.ranked.end());
        EXPECT_EQ(vote(reversed).selected, v.selected);
    }
}
