#include <apppop/labeling.hpp>

#include <gtest/gtest.h>

using namespace apppop;
using namespace apppop::labeling;

namespace {

std::vector<corpus::Review> stars(std::initializer_list<int> s)
{
    std::vector<corpus::Review> out;
    for (int v : s) out.push_back({v, std::nullopt, std::nullopt});
    return out;
}

corpus::AppSnapshot app(std::string id, std::int64_t installs, std::initializer_list<int> s)
{
    corpus::AppSnapshot a;
    a.package_name = std::move(id);
    a.release_date = corpus::Date::parse("2018-01-01");
    a.snapshot_date = corpus::Date::parse("2020-01-01");
    a.install_count = installs;
    a.reviews = stars(s);
    return a;
}

}  // namespace

TEST(Rating, Means)
{
    EXPECT_DOUBLE_EQ(average_rating(stars({5, 5, 5})), 5.0);
    EXPECT_DOUBLE_EQ(average_rating(stars({1, 2, 3, 4, 5})), 3.0);
    EXPECT_DOUBLE_EQ(average_rating(stars({4, 4, 5})), 13.0 / 3.0);
    EXPECT_THROW(average_rating({}), DataError);
}

TEST(DownloadsPerYear, Examples)
{
    const auto d0 = corpus::Date::parse("2000-01-01");
    const auto d2 = corpus::Date::parse("2002-01-01");
    EXPECT_DOUBLE_EQ(corpus::years_between(d0, d2), 731.0 / 365.25);
    EXPECT_DOUBLE_EQ(downloads_per_year(1000, d0, d2), 1000.0 / (731.0 / 365.25));
    EXPECT_DOUBLE_EQ(downloads_per_year(0, d0, d2), 0.0);
    EXPECT_THROW(downloads_per_year(10, d2, d0), DataError);
    const double base = downloads_per_year(300, d0, d2);
    EXPECT_EQ(downloads_per_year(300 * 7, d0, d2), base * 7);
}

TEST(DownloadsPerYear, WholeLeapCycle)
{
    // 1461 days is exactly four 365.25-day years.
    const auto a = corpus::Date::parse("2001-03-01");
    const auto b = corpus::Date::parse("2005-03-01");
    EXPECT_DOUBLE_EQ(corpus::years_between(a, b), 4.0);
    EXPECT_DOUBLE_EQ(downloads_per_year(2000, a, b), 500.0);
    EXPECT_DOUBLE_EQ(300.0 / (730.5 / corpus::kDaysPerYear), 150.0);
}

TEST(Binarize, FixedAndMedian)
{
    const auto fixed = binarize({3, 4, 5}, BinarizeRule::fixed(4));
    EXPECT_EQ(fixed.popular, (std::vector<bool>{false, true, true}));
    const auto med = binarize({1, 2, 3, 4}, BinarizeRule::median());
    EXPECT_DOUBLE_EQ(med.threshold, 2.5);
    EXPECT_EQ(med.popular, (std::vector<bool>{false, false, true, true}));
    const auto all = binarize({1, 2, 3}, BinarizeRule::fixed(0));
    EXPECT_EQ(all.popular, (std::vector<bool>{true, true, true}));
    try {
        binarize({2, 2, 2}, BinarizeRule::median());
        FAIL();
    } catch (const DataError& e) {
        EXPECT_STREQ(e.what(), "degenerate split");
    }
}

TEST(Binarize, MedianLabelsInvariantUnderMonotoneTransform)
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(3 + rng.below(20));
        for (auto& x : v) x = rng.normal();
        std::vector<double> t = v;
        for (auto& x : t) x = std::exp(3 * x) + 7;
        EXPECT_EQ(binarize(v, BinarizeRule::median()).popular, binarize(t, BinarizeRule::median()).popular);
    }
}

TEST(Binarize, RuleJson)
{
    EXPECT_EQ(BinarizeRule::from_json({{"rule", "fixed"}, {"threshold", 4.0}}).threshold, 4.0);
    EXPECT_THROW(BinarizeRule::from_json({{"rule", "fixed"}}), ConfigError);
    EXPECT_THROW(BinarizeRule::from_json({{"rule", "quantile"}}), ConfigError);
}

TEST(Kendall, Examples)
{
    EXPECT_DOUBLE_EQ(kendall_tau({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0);
    EXPECT_DOUBLE_EQ(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(kendall_tau({1, 2, 3, 4}, {1, 3, 2, 4}), 2.0 / 3.0, 1e-15);
    EXPECT_THROW(kendall_tau({1, 1, 1}, {1, 2, 3}), DataError);
    EXPECT_THROW(kendall_tau({1}, {1}), DataError);
}

TEST(Kendall, Symmetric)
{
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(2 + rng.below(15)), y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<double>(rng.below(4));
            y[i] = rng.normal();
        }
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
        EXPECT_DOUBLE_EQ(kendall_tau(x, y), kendall_tau(y, x));
    }
}

TEST(LabelCorpus, ExclusionsSplitsAndCsv)
{
    const std::vector<corpus::AppSnapshot> apps = {app("a", 100, {5, 5}), app("b", 400, {1, 2}), app("c", 900, {}),
                                                   app("d", 50, {3, 4})};
    auto labels = label_corpus(apps, BinarizeRule::median(), BinarizeRule::median());
    ASSERT_EQ(labels.rows.size(), 3u);
    ASSERT_EQ(labels.exclusions.size(), 1u);
    EXPECT_EQ(labels.exclusions[0].package_name, "c");
    EXPECT_EQ(labels.exclusions[0].reason, "no_reviews");
    EXPECT_DOUBLE_EQ(labels.rating_split.threshold, 3.5);
    EXPECT_TRUE(labels.find("a")->popular_by_rating);
    EXPECT_FALSE(labels.find("b")->popular_by_rating);
    EXPECT_TRUE(labels.find("b")->popular_by_dpy);
    EXPECT_DOUBLE_EQ(labels.find("a")->log_downloads_per_year, std::log1p(labels.find("a")->downloads_per_year));

    labels.config_hash = "h";
    const auto back = LabelSet::from_csv(labels.to_csv());
    ASSERT_EQ(back.rows.size(), 3u);
    EXPECT_EQ(back.rows[1].app_id, "b");
    EXPECT_EQ(back.rows[1].downloads_per_year, labels.rows[1].downloads_per_year);
    EXPECT_EQ(labels.sidecar()["rating"]["rule"], "median");
}
