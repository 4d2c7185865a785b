#ifndef APPPOP_LABELING_HPP
#define APPPOP_LABELING_HPP

// Popularity targets: mean review rating, age-normalized downloads, and
// their binarization into Popular / Unpopular.

#include <apppop/corpus.hpp>
#include <apppop/features.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace apppop::labeling {

inline double average_rating(const std::vector<corpus::Review>& reviews)
{
    if (reviews.empty()) throw DataError("no reviews");
    double sum = 0;
    for (const auto& r : reviews) sum += r.stars;
    return sum / static_cast<double>(reviews.size());
}

inline double downloads_per_year(std::int64_t install_count, const corpus::Date& release, const corpus::Date& snapshot)
{
    if (snapshot < release) throw DataError("snapshot date precedes release date");
    if (install_count < 0) throw DataError("negative install count");
    const double years = corpus::years_between(release, snapshot);
    if (years <= 0) throw DataError("app has zero age");
    return static_cast<double>(install_count) / years;
}

struct BinarizeRule {
    enum class Kind { fixed, median } kind = Kind::median;
    double threshold = 0;

    static BinarizeRule fixed(double theta) { return {Kind::fixed, theta}; }
    static BinarizeRule median() { return {Kind::median, 0}; }

    nlohmann::json to_json() const
    {
        if (kind == Kind::median) return {{"rule", "median"}};
        return {{"rule", "fixed"}, {"threshold", threshold}};
    }

    static BinarizeRule from_json(const nlohmann::json& j)
    {
        const auto rule = j.value("rule", std::string("median"));
        if (rule == "median") return median();
        if (rule == "fixed") {
            if (!j.contains("threshold")) throw ConfigError("fixed binarization needs a threshold");
            return fixed(j.at("threshold").get<double>());
        }
        throw ConfigError("unknown binarization rule '" + rule + "'");
    }
};

struct Binarized {
    std::vector<bool> popular;
    double threshold = 0;
    std::string rule;
};

inline double median(std::vector<double> xs)
{
    if (xs.empty()) throw DataError("median of an empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Popular iff value >= threshold. The median rule fails when it would put
/// every app in one class.
inline Binarized binarize(const std::vector<double>& values, const BinarizeRule& rule)
{
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("non-finite label value");
    Binarized b;
    if (rule.kind == BinarizeRule::Kind::median) {
        b.rule = "median";
        b.threshold = median(values);
    } else {
        b.rule = "fixed";
        b.threshold = rule.threshold;
    }
    for (double v : values) b.popular.push_back(v >= b.threshold);
    if (rule.kind == BinarizeRule::Kind::median) {
        const auto ones = std::count(b.popular.begin(), b.popular.end(), true);
        if (ones == 0 || ones == static_cast<long>(values.size())) throw DataError("degenerate split");
    }
    return b;
}

/// Kendall tau-b with tie correction, O(n^2).
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw DataError("kendall_tau: length mismatch");
    if (x.size() < 2) throw DataError("kendall_tau needs at least two pairs");
    double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0) {
                ++ties_x;
            } else if (dy == 0) {
                ++ties_y;
            } else if ((dx > 0) == (dy > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
    if (denom == 0) throw DataError("kendall_tau undefined for a constant vector");
    return (concordant - discordant) / denom;
}

enum class Target { rating, dpy, log_dpy };

inline std::string to_string(Target t)
{
    switch (t) {
        case Target::rating: return "rating";
        case Target::dpy: return "dpy";
        case Target::log_dpy: return "log_dpy";
    }
    return "?";
}

inline Target parse_target(const std::string& s)
{
    if (s == "rating") return Target::rating;
    if (s == "dpy") return Target::dpy;
    if (s == "log_dpy") return Target::log_dpy;
    throw ConfigError("unknown target '" + s + "' (expected rating, dpy or log_dpy)");
}

struct LabelRow {
    std::string app_id;
    double avg_rating = 0;
    double downloads_per_year = 0;
    double log_downloads_per_year = 0;  // log1p
    double age_years = 0;
    bool popular_by_rating = false;
    bool popular_by_dpy = false;

    double value(Target t) const
    {
        switch (t) {
            case Target::rating: return avg_rating;
            case Target::dpy: return downloads_per_year;
            case Target::log_dpy: return log_downloads_per_year;
        }
        return 0;
    }

    bool popular(Target t) const { return t == Target::rating ? popular_by_rating : popular_by_dpy; }
};

struct LabelSet {
    std::vector<LabelRow> rows;
    Binarized rating_split;
    Binarized dpy_split;
    std::vector<corpus::SkipRecord> exclusions;
    std::optional<double> age_downloads_tau;
    std::string config_hash;

    const LabelRow* find(const std::string& app_id) const
    {
        for (const auto& r : rows)
            if (r.app_id == app_id) return &r;
        return nullptr;
    }

    std::string to_csv() const
    {
        std::string out = "# config_hash=" + config_hash + "\n";
        out += csv::join_row({"app_id", "avg_rating", "downloads_per_year", "log_downloads_per_year", "age_years",
                              "popular_by_rating", "popular_by_dpy"});
        for (const auto& r : rows)
            out += csv::join_row({r.app_id, format_number(r.avg_rating), format_number(r.downloads_per_year),
                                  format_number(r.log_downloads_per_year), format_number(r.age_years),
                                  r.popular_by_rating ? "1" : "0", r.popular_by_dpy ? "1" : "0"});
        return out;
    }

    nlohmann::json sidecar() const
    {
        nlohmann::json excl = nlohmann::json::array();
        for (const auto& e : exclusions) excl.push_back({{"app_id", e.package_name}, {"reason", e.reason}});
        nlohmann::json j = {
            {"config_hash", config_hash},
            {"rating", {{"rule", rating_split.rule}, {"threshold", rating_split.threshold}}},
            {"downloads_per_year", {{"rule", dpy_split.rule}, {"threshold", dpy_split.threshold}}},
            {"exclusions", excl}};
        j["kendall_tau_age_downloads"] = age_downloads_tau ? nlohmann::json(*age_downloads_tau) : nlohmann::json();
        return j;
    }

    static LabelSet from_csv(std::string_view text)
    {
        LabelSet s;
        const auto table = csv::parse(text);
        if (table.empty() || table[0].size() != 7 || table[0][0] != "app_id")
            throw DataError("labels table has an unexpected header");
        for (std::size_t i = 1; i < table.size(); ++i) {
            const auto& c = table[i];
            if (c.size() != 7) throw DataError("labels row " + std::to_string(i) + " is malformed");
            LabelRow r;
            r.app_id = c[0];
            r.avg_rating = std::stod(c[1]);
            r.downloads_per_year = std::stod(c[2]);
            r.log_downloads_per_year = std::stod(c[3]);
            r.age_years = std::stod(c[4]);
            r.popular_by_rating = c[5] == "1";
            r.popular_by_dpy = c[6] == "1";
            s.rows.push_back(std::move(r));
        }
        return s;
    }
};

/// Labels for every app with at least one review; the others are recorded
/// as exclusions. Splits are computed over the labeled apps.
inline LabelSet label_corpus(const std::vector<corpus::AppSnapshot>& apps, const BinarizeRule& rating_rule,
                             const BinarizeRule& dpy_rule)
{
    LabelSet s;
    std::vector<double> ages, downloads;
    for (const auto& app : apps) {
        if (app.reviews.empty()) {
            s.exclusions.push_back({app.package_name, "no_reviews"});
            continue;
        }
        LabelRow r;
        r.app_id = app.package_name;
        r.avg_rating = average_rating(app.reviews);
        r.downloads_per_year = downloads_per_year(app.install_count, app.release_date, app.snapshot_date);
        r.log_downloads_per_year = std::log1p(r.downloads_per_year);
        r.age_years = app.age_years();
        ages.push_back(r.age_years);
        downloads.push_back(static_cast<double>(app.install_count));
        s.rows.push_back(std::move(r));
    }
    if (s.rows.empty()) return s;
    std::vector<double> ratings, dpy;
    for (const auto& r : s.rows) {
        ratings.push_back(r.avg_rating);
        dpy.push_back(r.downloads_per_year);
    }
    s.rating_split = binarize(ratings, rating_rule);
    s.dpy_split = binarize(dpy, dpy_rule);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        s.rows[i].popular_by_rating = s.rating_split.popular[i];
        s.rows[i].popular_by_dpy = s.dpy_split.popular[i];
    }
    try {
        if (s.rows.size() >= 2) s.age_downloads_tau = kendall_tau(ages, downloads);
    } catch (const DataError&) {
        s.age_downloads_tau.reset();
    }
    return s;
}

}  // namespace apppop::labeling

#endif  // APPPOP_LABELING_HPP
