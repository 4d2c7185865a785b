#ifndef APPPOP_FEATURES_HPP
#define APPPOP_FEATURES_HPP

// Per-app feature vectors: distribution summaries of class and method
// metrics, whole-app totals, architecture metrics, smell counts and one-hot
// metadata, under one schema shared by the whole corpus.

#include <apppop/metrics/code.hpp>
#include <apppop/metrics/system.hpp>
#include <apppop/smells.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <cctype>
#include <string>
#include <vector>

namespace apppop::features {

inline constexpr std::array<double, 11> kPercentileRanks = {10, 20, 30, 40, 50, 60, 70, 80, 90, 95, 99};

/// Linear interpolation at rank p/100 * (n-1) of the sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double p)
{
    if (sorted.empty()) throw DataError("percentile of an empty sample");
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::array<double, 11> percentiles(std::vector<double> xs)
{
    if (xs.empty()) throw DataError("percentiles of an empty sample");
    std::sort(xs.begin(), xs.end());
    std::array<double, 11> out{};
    for (std::size_t i = 0; i < kPercentileRanks.size(); ++i) out[i] = percentile_sorted(xs, kPercentileRanks[i]);
    return out;
}

inline const std::vector<std::string>& aggregate_names()
{
    static const std::vector<std::string> kNames = {"min", "max", "mean", "p10", "p20", "p30", "p40",
                                                    "p50", "p60", "p70", "p80", "p90", "p95", "p99"};
    return kNames;
}

/// min, max, mean and the 11 percentiles; all zeros for an empty sample.
inline std::array<double, 14> summarize(std::vector<double> xs)
{
    std::array<double, 14> out{};
    if (xs.empty()) return out;
    std::sort(xs.begin(), xs.end());
    out[0] = xs.front();
    out[1] = xs.back();
    double sum = 0;
    for (double x : xs) sum += x;
    // Clamp guards the mean against rounding past the extremes.
    out[2] = std::clamp(sum / static_cast<double>(xs.size()), xs.front(), xs.back());
    for (std::size_t i = 0; i < kPercentileRanks.size(); ++i) out[3 + i] = percentile_sorted(xs, kPercentileRanks[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Metadata vocabularies

inline std::string sanitize(std::string_view label)
{
    std::string out;
    bool pending = false;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending && !out.empty()) out += '_';
            pending = false;
            out += c;
        } else {
            pending = true;
        }
    }
    return out;
}

struct Vocabulary {
    std::vector<std::string> genres = {
        "ART_AND_DESIGN",    "AUTO_AND_VEHICLES", "BOOKS_AND_REFERENCE", "BUSINESS",
        "COMICS",            "COMMUNICATION",     "DATING",              "EDUCATION",
        "ENTERTAINMENT",     "EVENTS",            "FINANCE",             "FOOD_AND_DRINK",
        "GAME_ACTION",       "GAME_ADVENTURE",    "GAME_ARCADE",         "GAME_BOARD",
        "GAME_CARD",         "GAME_CASINO",       "GAME_CASUAL",         "GAME_EDUCATIONAL",
        "GAME_PUZZLE",       "GAME_RACING",       "GAME_ROLE_PLAYING",   "GAME_SIMULATION",
        "GAME_SPORTS",       "GAME_STRATEGY",     "GAME_TRIVIA",         "GAME_WORD",
        "HEALTH_AND_FITNESS", "HOUSE_AND_HOME",   "LIBRARIES_AND_DEMO",  "LIFESTYLE",
        "MAPS_AND_NAVIGATION", "MEDICAL",         "MUSIC_AND_AUDIO",     "NEWS_AND_MAGAZINES",
        "PARENTING",         "PERSONALIZATION",   "PHOTOGRAPHY",         "PRODUCTIVITY",
        "SHOPPING",          "SOCIAL",            "SPORTS",              "TOOLS",
        "TRAVEL_AND_LOCAL",  "VIDEO_PLAYERS",     "WEATHER"};
    std::vector<std::string> permissions = {"Location",
                                            "Phone",
                                            "Photos/Media/Files",
                                            "Storage",
                                            "Wi-Fi connection information",
                                            "Device ID & call information",
                                            "Other",
                                            "Uncategorized",
                                            "Camera",
                                            "Microphone",
                                            "Identity",
                                            "Calendar",
                                            "Contacts",
                                            "Device & app history",
                                            "SMS",
                                            "Wearable sensors/Activity data"};

    std::vector<std::string> genre_columns() const
    {
        std::vector<std::string> out;
        for (const auto& g : genres) out.push_back("genre_" + sanitize(g));
        out.push_back("genre__OTHER");
        return out;
    }

    std::vector<std::string> permission_columns() const
    {
        std::vector<std::string> out;
        for (const auto& p : permissions) out.push_back("perm_" + sanitize(p));
        out.push_back("perm__OTHER");
        return out;
    }

    nlohmann::json to_json() const { return {{"genres", genres}, {"permissions", permissions}}; }

    static Vocabulary from_json(const nlohmann::json& j)
    {
        Vocabulary v;
        if (j.contains("genres")) v.genres = j.at("genres").get<std::vector<std::string>>();
        if (j.contains("permissions")) v.permissions = j.at("permissions").get<std::vector<std::string>>();
        std::set<std::string> cols;
        for (const auto& c : v.genre_columns())
            if (!cols.insert(c).second) throw ConfigError("genre vocabulary has colliding entry " + c);
        for (const auto& c : v.permission_columns())
            if (!cols.insert(c).second) throw ConfigError("permission vocabulary has colliding entry " + c);
        return v;
    }
};

struct AppMeta {
    double app_loc = 0;
    double activity_count = 0;
    bool contains_ads = false;
    std::string genre;
    std::vector<std::string> permissions;
};

/// Named 0/1 indicator features plus the numeric metadata. Unknown
/// categories land in the `__OTHER` column.
inline std::vector<std::pair<std::string, double>> encode_metadata(const AppMeta& meta, const Vocabulary& vocab)
{
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("activity_count", meta.activity_count);
    out.emplace_back("contains_ads", meta.contains_ads ? 1.0 : 0.0);
    const auto genre_cols = vocab.genre_columns();
    std::size_t genre_hit = vocab.genres.size();
    for (std::size_t i = 0; i < vocab.genres.size(); ++i)
        if (vocab.genres[i] == meta.genre) genre_hit = i;
    for (std::size_t i = 0; i < genre_cols.size(); ++i) out.emplace_back(genre_cols[i], i == genre_hit ? 1.0 : 0.0);
    const auto perm_cols = vocab.permission_columns();
    std::vector<double> perm(perm_cols.size(), 0.0);
    for (const auto& p : meta.permissions) {
        const auto it = std::find(vocab.permissions.begin(), vocab.permissions.end(), p);
        perm[static_cast<std::size_t>(it - vocab.permissions.begin())] = 1.0;  // end() maps to __OTHER
    }
    for (std::size_t i = 0; i < perm_cols.size(); ++i) out.emplace_back(perm_cols[i], perm[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Schema

/// Ordinal class/method columns; the modifier bitmask is not aggregated.
inline std::vector<std::string> aggregated_columns(const std::vector<std::string>& all)
{
    std::vector<std::string> out;
    for (const auto& c : all)
        if (c != "modifiers_code") out.push_back(c);
    return out;
}

inline const std::vector<std::string>& global_columns()
{
    static const std::vector<std::string> kColumns = {"total_unique_words_qty",
                                                      "total_lambdas_qty",
                                                      "total_inner_classes_qty",
                                                      "total_anonymous_classes_qty",
                                                      "total_loop_qty",
                                                      "total_loc",
                                                      "total_methods_qty",
                                                      "total_normal_classes",
                                                      "app_loc"};
    return kColumns;
}

/// Column order: metadata, system, smells, class aggregates, method
/// aggregates, globals. A pure function of the vocabulary.
inline std::vector<std::string> feature_schema(const Vocabulary& vocab)
{
    std::vector<std::string> schema;
    for (const auto& [name, value] : encode_metadata(AppMeta{}, vocab)) schema.push_back(name);
    for (const auto& c : metrics::SystemMetrics::columns()) schema.push_back(c);
    for (const auto& s : smells::smell_names()) schema.push_back("smell_" + s);
    schema.push_back("class_present");
    for (const auto& m : aggregated_columns(metrics::ClassMetricsRow::numeric_columns()))
        for (const auto& a : aggregate_names()) schema.push_back("class_" + m + "_" + a);
    schema.push_back("method_present");
    for (const auto& m : aggregated_columns(metrics::MethodMetricsRow::numeric_columns()))
        for (const auto& a : aggregate_names()) schema.push_back("method_" + m + "_" + a);
    for (const auto& g : global_columns()) schema.push_back(g);
    return schema;
}

struct FeatureVector {
    std::string app_id;
    std::vector<std::string> names;
    std::vector<double> values;

    double at(const std::string& name) const
    {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw DataError("unknown feature " + name);
        return values[static_cast<std::size_t>(it - names.begin())];
    }
};

struct NormalClassDecision {
    bool keep = false;
    int normal_classes = 0;
    std::string reason;
};

inline NormalClassDecision normal_class_filter(const std::vector<metrics::ClassMetricsRow>& rows, int minimum = 5)
{
    NormalClassDecision d;
    d.normal_classes = static_cast<int>(
        std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.kind == "normal"; }));
    d.keep = d.normal_classes >= minimum;
    if (!d.keep) d.reason = "normal_classes<" + std::to_string(minimum);
    return d;
}

template <typename Row>
std::vector<std::vector<double>> columns_of(const std::vector<const Row*>& rows, std::size_t width)
{
    std::vector<std::vector<double>> cols(width);
    for (const Row* r : rows) {
        const auto v = r->numeric_values();
        for (std::size_t i = 0; i < width; ++i) cols[i].push_back(v[i]);
    }
    return cols;
}

inline FeatureVector aggregate_app(const std::string& app_id, const std::vector<metrics::ClassMetricsRow>& class_rows,
                                   const std::vector<metrics::MethodMetricsRow>& method_rows,
                                   const metrics::SystemMetrics& system, const smells::SmellReport& smell_report,
                                   const AppMeta& meta, const Vocabulary& vocab)
{
    FeatureVector fv;
    fv.app_id = app_id;
    auto push = [&](std::string name, double v) {
        fv.names.push_back(std::move(name));
        fv.values.push_back(v);
    };
    for (auto& [name, v] : encode_metadata(meta, vocab)) push(name, v);
    const auto sys = system.values();
    for (std::size_t i = 0; i < sys.size(); ++i) push(metrics::SystemMetrics::columns()[i], sys[i]);
    for (const auto& s : smells::smell_names()) push("smell_" + s, smell_report[s]);

    auto add_aggregates = [&](const std::string& prefix, const std::vector<std::string>& all_cols,
                              const std::vector<std::vector<double>>& cols, bool present) {
        push(prefix + "_present", present ? 1.0 : 0.0);
        for (std::size_t i = 0; i < all_cols.size(); ++i) {
            if (all_cols[i] == "modifiers_code") continue;
            const auto agg = summarize(cols[i]);
            for (std::size_t a = 0; a < agg.size(); ++a)
                push(prefix + "_" + all_cols[i] + "_" + aggregate_names()[a], agg[a]);
        }
    };
    std::vector<const metrics::ClassMetricsRow*> normal;
    for (const auto& r : class_rows)
        if (r.kind == "normal") normal.push_back(&r);
    const auto& class_cols = metrics::ClassMetricsRow::numeric_columns();
    add_aggregates("class", class_cols, columns_of(normal, class_cols.size()), !normal.empty());
    std::vector<const metrics::MethodMetricsRow*> methods;
    for (const auto& r : method_rows) methods.push_back(&r);
    const auto& method_cols = metrics::MethodMetricsRow::numeric_columns();
    add_aggregates("method", method_cols, columns_of(methods, method_cols.size()), !methods.empty());

    double words = 0, lambdas = 0, inner = 0, anonymous = 0, loops = 0, loc = 0, total_methods = 0;
    for (const auto& r : class_rows) {
        words += r.unique_words_qty;
        lambdas += r.lambdas_qty;
        inner += r.inner_classes_qty;
        anonymous += r.anonymous_classes_qty;
        loops += r.loop_qty;
        loc += r.loc;
        total_methods += r.total_methods;
    }
    push("total_unique_words_qty", words);
    push("total_lambdas_qty", lambdas);
    push("total_inner_classes_qty", inner);
    push("total_anonymous_classes_qty", anonymous);
    push("total_loop_qty", loops);
    push("total_loc", loc);
    push("total_methods_qty", total_methods);
    push("total_normal_classes", static_cast<double>(normal.size()));
    push("app_loc", meta.app_loc);

    if (fv.names != feature_schema(vocab)) throw InternalError("feature vector does not match the corpus schema");
    for (double v : fv.values)
        if (!std::isfinite(v)) throw InternalError("non-finite feature value for " + app_id);
    return fv;
}

// ---------------------------------------------------------------------------
// Matrix

struct FeatureMatrix {
    std::vector<std::string> schema;
    std::vector<std::string> app_ids;
    std::vector<std::vector<double>> rows;
    std::string config_hash;

    std::size_t size() const { return rows.size(); }

    std::optional<std::size_t> find(const std::string& feature) const
    {
        const auto it = std::find(schema.begin(), schema.end(), feature);
        if (it == schema.end()) return std::nullopt;
        return static_cast<std::size_t>(it - schema.begin());
    }

    std::size_t index_of(const std::string& feature) const
    {
        if (auto i = find(feature)) return *i;
        throw DataError("feature not in schema: " + feature);
    }

    void add(const FeatureVector& fv)
    {
        if (fv.names != schema) throw DataError("schema mismatch for app " + fv.app_id);
        if (std::find(app_ids.begin(), app_ids.end(), fv.app_id) != app_ids.end())
            throw DataError("duplicate app id " + fv.app_id);
        app_ids.push_back(fv.app_id);
        rows.push_back(fv.values);
    }

    /// Column subset in the order given.
    FeatureMatrix select(const std::vector<std::string>& features) const
    {
        FeatureMatrix out;
        out.schema = features;
        out.app_ids = app_ids;
        out.config_hash = config_hash;
        std::vector<std::size_t> idx;
        for (const auto& f : features) idx.push_back(index_of(f));
        for (const auto& r : rows) {
            std::vector<double> v;
            for (auto i : idx) v.push_back(r[i]);
            out.rows.push_back(std::move(v));
        }
        return out;
    }

    std::string to_csv() const
    {
        std::string out = "# config_hash=" + config_hash + "\n";
        std::vector<std::string> header = {"app_id"};
        header.insert(header.end(), schema.begin(), schema.end());
        out += csv::join_row(header);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::vector<std::string> cells = {app_ids[i]};
            for (double v : rows[i]) cells.push_back(format_number(v));
            out += csv::join_row(cells);
        }
        return out;
    }

    static FeatureMatrix from_csv(std::string_view text)
    {
        FeatureMatrix m;
        const std::string_view marker = "# config_hash=";
        if (text.substr(0, marker.size()) == marker) {
            const auto eol = text.find('\n');
            m.config_hash = trim(text.substr(marker.size(), eol - marker.size()));
        }
        const auto table = csv::parse(text);
        if (table.empty() || table[0].empty() || table[0][0] != "app_id")
            throw DataError("features table lacks an app_id header");
        m.schema.assign(table[0].begin() + 1, table[0].end());
        for (std::size_t r = 1; r < table.size(); ++r) {
            const auto& row = table[r];
            if (row.size() != table[0].size())
                throw DataError("features row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                " cells, expected " + std::to_string(table[0].size()));
            m.app_ids.push_back(row[0]);
            std::vector<double> values;
            for (std::size_t c = 1; c < row.size(); ++c) {
                double v = 0;
                try {
                    std::size_t used = 0;
                    v = std::stod(row[c], &used);
                    if (used != row[c].size()) throw std::invalid_argument(row[c]);
                } catch (const std::exception&) {
                    throw DataError("non-numeric feature value '" + row[c] + "' for " + row[0]);
                }
                if (!std::isfinite(v)) throw DataError("non-finite feature value for " + row[0]);
                values.push_back(v);
            }
            m.rows.push_back(std::move(values));
        }
        return m;
    }
};

}  // namespace apppop::features

#endif  // APPPOP_FEATURES_HPP
