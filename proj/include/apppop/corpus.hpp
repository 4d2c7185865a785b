#ifndef APPPOP_CORPUS_HPP
#define APPPOP_CORPUS_HPP

// Corpus ingestion: per-app snapshot directories (app.json + source tree),
// language-share filtering, and AndroidManifest activity counting.

#include <apppop/common.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apppop::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

/// Calendar date with day-granular arithmetic.
struct Date {
    std::chrono::year_month_day ymd{};

    static Date parse(std::string_view text)
    {
        // Strict YYYY-MM-DD.
        if (text.size() != 10 || text[4] != '-' || text[7] != '-')
            throw DataError("invalid date (expected YYYY-MM-DD): " + std::string(text));
        auto num = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            auto res = std::from_chars(text.data() + pos, text.data() + pos + len, v);
            if (res.ec != std::errc{} || res.ptr != text.data() + pos + len)
                throw DataError("invalid date (expected YYYY-MM-DD): " + std::string(text));
            return v;
        };
        const std::chrono::year_month_day d{std::chrono::year{num(0, 4)},
                                            std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                            std::chrono::day{static_cast<unsigned>(num(8, 2))}};
        if (!d.ok()) throw DataError("invalid calendar date: " + std::string(text));
        return Date{d};
    }

    std::string str() const
    {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    long days_since_epoch() const
    {
        return std::chrono::sys_days{ymd}.time_since_epoch().count();
    }

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date& a, const Date& b) { return a.ymd <=> b.ymd; }
};

inline constexpr double kDaysPerYear = 365.25;

/// Fractional years between two dates (days / 365.25).
inline double years_between(const Date& from, const Date& to)
{
    return static_cast<double>(to.days_since_epoch() - from.days_since_epoch()) / kDaysPerYear;
}

struct Review {
    int stars = 0;
    std::optional<std::string> text;
    std::optional<std::string> app_version;

    friend bool operator==(const Review&, const Review&) = default;
};

struct AppSnapshot {
    std::string package_name;
    fs::path source_root;
    fs::path manifest_path;  // empty when the tree has no AndroidManifest.xml
    std::string genre;
    bool contains_ads = false;
    std::vector<std::string> permissions;
    Date release_date;
    Date snapshot_date;
    std::int64_t install_count = 0;
    std::vector<Review> reviews;

    double age_years() const { return years_between(release_date, snapshot_date); }
};

struct SkipRecord {
    std::string package_name;  // directory name when the package is unknown
    std::string reason;
};

struct FilterConfig {
    double java_fraction_min = 0.5;
    double min_age_years = 1.0;
    int min_normal_classes = 5;
};

struct CorpusManifest {
    std::vector<AppSnapshot> apps;
    std::vector<SkipRecord> skips;
    std::optional<FilterConfig> filters_applied;
    std::vector<SkipRecord> exclusions;  // filled by filter_corpus
};

// ---------------------------------------------------------------------------
// app.json (de)serialization

inline AppSnapshot snapshot_from_json(const json& j, const fs::path& app_dir)
{
    auto require = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
        return j.at(key);
    };
    AppSnapshot s;
    try {
        s.package_name = require("package_name").get<std::string>();
        s.genre = require("genre").get<std::string>();
        s.contains_ads = require("contains_ads").get<bool>();
        s.permissions = require("permissions").get<std::vector<std::string>>();
        s.release_date = Date::parse(require("release_date").get<std::string>());
        s.snapshot_date = Date::parse(require("snapshot_date").get<std::string>());
        const json& installs = require("install_count");
        if (!installs.is_number_integer()) throw DataError("install_count must be an integer");
        s.install_count = installs.get<std::int64_t>();
        for (const auto& r : require("reviews")) {
            Review rv;
            if (!r.contains("stars") || !r.at("stars").is_number_integer())
                throw DataError("review without integer 'stars'");
            rv.stars = r.at("stars").get<int>();
            if (r.contains("text") && !r.at("text").is_null()) rv.text = r.at("text").get<std::string>();
            if (r.contains("app_version") && !r.at("app_version").is_null())
                rv.app_version = r.at("app_version").get<std::string>();
            s.reviews.push_back(std::move(rv));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed app.json: ") + e.what());
    }
    if (s.package_name.empty()) throw DataError("empty package_name");
    if (s.install_count < 0) throw DataError("negative install_count");
    if (s.snapshot_date < s.release_date) throw DataError("snapshot_date precedes release_date");
    for (const auto& r : s.reviews)
        if (r.stars < 1 || r.stars > 5) throw DataError("review stars outside 1..5");
    s.source_root = app_dir;
    return s;
}

/// Canonical app.json rendering of the metadata fields.
inline json snapshot_to_json(const AppSnapshot& s)
{
    json reviews = json::array();
    for (const auto& r : s.reviews) {
        json jr = {{"stars", r.stars}};
        if (r.text) jr["text"] = *r.text;
        if (r.app_version) jr["app_version"] = *r.app_version;
        reviews.push_back(std::move(jr));
    }
    return json{{"package_name", s.package_name},
                {"genre", s.genre},
                {"contains_ads", s.contains_ads},
                {"permissions", s.permissions},
                {"release_date", s.release_date.str()},
                {"snapshot_date", s.snapshot_date.str()},
                {"install_count", s.install_count},
                {"reviews", std::move(reviews)}};
}

inline fs::path find_manifest(const fs::path& root)
{
    std::vector<fs::path> found;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (it->is_regular_file(ec) && it->path().filename() == "AndroidManifest.xml")
            found.push_back(it->path());
    }
    if (found.empty()) return {};
    // Prefer the canonical Gradle location, then the shallowest path.
    std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) {
        const bool ma = a.generic_string().find("src/main/AndroidManifest.xml") != std::string::npos;
        const bool mb = b.generic_string().find("src/main/AndroidManifest.xml") != std::string::npos;
        if (ma != mb) return ma;
        const auto da = std::distance(a.begin(), a.end());
        const auto db = std::distance(b.begin(), b.end());
        if (da != db) return da < db;
        return a < b;
    });
    return found.front();
}

/// Loads every `<root>/<app>/app.json`. Malformed apps become skip records;
/// a duplicate package name is a fatal data error naming both directories.
inline CorpusManifest load_corpus(const fs::path& root)
{
    if (!fs::is_directory(root)) throw DataError("corpus root does not exist: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());

    CorpusManifest m;
    std::map<std::string, fs::path> seen;
    for (const auto& dir : dirs) {
        const fs::path meta = dir / "app.json";
        if (!fs::exists(meta)) {
            m.skips.push_back({dir.filename().string(), "missing app.json"});
            continue;
        }
        AppSnapshot snap;
        try {
            const json j = json::parse(read_file(meta.string()));
            snap = snapshot_from_json(j, dir);
        } catch (const json::exception& e) {
            m.skips.push_back({dir.filename().string(), std::string("malformed JSON: ") + e.what()});
            continue;
        } catch (const DataError& e) {
            m.skips.push_back({dir.filename().string(), e.what()});
            continue;
        }
        if (auto it = seen.find(snap.package_name); it != seen.end())
            throw DataError("duplicate package name '" + snap.package_name + "' in " +
                            it->second.string() + " and " + dir.string());
        seen.emplace(snap.package_name, dir);
        snap.manifest_path = find_manifest(dir);
        m.apps.push_back(std::move(snap));
    }
    return m;
}

inline std::string skip_report_csv(const std::vector<SkipRecord>& skips)
{
    std::string out = csv::join_row({"package_name", "reason"});
    for (const auto& s : skips) out += csv::join_row({s.package_name, s.reason});
    return out;
}

// ---------------------------------------------------------------------------
// Line counting

enum class CommentStyle { c_family, hash };

/// Nonblank, noncomment lines. String literals are respected so a "//" inside
/// a string does not start a comment.
inline std::size_t count_code_lines(std::string_view text, CommentStyle style)
{
    std::size_t lines = 0;
    bool in_block = false;
    bool line_has_code = false;
    char quote = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            if (line_has_code) ++lines;
            line_has_code = false;
            if (quote != '`') quote = 0;  // plain string literals do not span lines
            continue;
        }
        if (in_block) {
            if (c == '*' && i + 1 < text.size() && text[i + 1] == '/') {
                in_block = false;
                ++i;
            }
            continue;
        }
        if (quote) {
            line_has_code = line_has_code || !std::isspace(static_cast<unsigned char>(c));
            if (c == '\\') {
                if (i + 1 < text.size() && text[i + 1] != '\n') ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (style == CommentStyle::c_family && c == '/' && i + 1 < text.size()) {
            if (text[i + 1] == '/') {
                while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
                continue;
            }
            if (text[i + 1] == '*') {
                in_block = true;
                ++i;
                continue;
            }
        }
        if (style == CommentStyle::hash && c == '#') {
            while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
            continue;
        }
        if (c == '"' || c == '\'' || (c == '`' && style == CommentStyle::c_family)) quote = c;
        line_has_code = true;
    }
    if (line_has_code) ++lines;
    return lines;
}

/// Recognized source extensions and their comment syntax.
inline std::optional<std::pair<std::string, CommentStyle>> classify_source(const fs::path& p)
{
    static const std::map<std::string, std::pair<std::string, CommentStyle>> kLanguages = {
        {".java", {"java", CommentStyle::c_family}}, {".kt", {"kotlin", CommentStyle::c_family}},
        {".c", {"c", CommentStyle::c_family}},       {".cpp", {"cpp", CommentStyle::c_family}},
        {".cs", {"csharp", CommentStyle::c_family}}, {".js", {"javascript", CommentStyle::c_family}},
        {".py", {"python", CommentStyle::hash}},
    };
    auto it = kLanguages.find(p.extension().string());
    if (it == kLanguages.end()) return std::nullopt;
    return it->second;
}

struct SourceLineCounts {
    std::map<std::string, std::size_t> by_language;
    std::vector<std::string> warnings;

    std::size_t total() const
    {
        std::size_t t = 0;
        for (const auto& [_, n] : by_language) t += n;
        return t;
    }
    std::size_t of(const std::string& lang) const
    {
        auto it = by_language.find(lang);
        return it == by_language.end() ? 0 : it->second;
    }
};

/// Files under `root` in deterministic (sorted) order.
inline std::vector<fs::path> list_files(const fs::path& root, std::vector<std::string>* warnings = nullptr)
{
    std::vector<fs::path> files;
    std::error_code ec;
    auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        if (warnings) warnings->push_back("cannot list " + root.string() + ": " + ec.message());
        return files;
    }
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            if (warnings) warnings->push_back("directory walk error: " + ec.message());
            break;
        }
        const auto name = it->path().filename().string();
        if (it->is_directory(ec) && !name.empty() && name[0] == '.') {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file(ec)) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline SourceLineCounts count_source_lines(const fs::path& root)
{
    SourceLineCounts counts;
    for (const auto& file : list_files(root, &counts.warnings)) {
        auto lang = classify_source(file);
        if (!lang) continue;
        std::string text;
        try {
            text = read_file(file.string());
        } catch (const DataError& e) {
            counts.warnings.push_back(e.what());
            continue;
        }
        counts.by_language[lang->first] += count_code_lines(text, lang->second);
    }
    return counts;
}

/// Java share of recognized source lines; 0 when there are none.
inline double java_fraction(const fs::path& source_root)
{
    const auto counts = count_source_lines(source_root);
    const auto total = counts.total();
    if (total == 0) return 0.0;
    return static_cast<double>(counts.of("java")) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Filtering

inline std::string format_threshold(double v)
{
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

/// Keeps apps meeting the Java-share and minimum-age criteria. Excluded apps
/// are listed in `exclusions` with the first failing reason.
inline CorpusManifest filter_corpus(const CorpusManifest& manifest, const FilterConfig& cfg,
                                    const std::function<double(const AppSnapshot&)>& fraction_of = nullptr)
{
    CorpusManifest out;
    out.skips = manifest.skips;
    out.exclusions = manifest.exclusions;
    out.filters_applied = cfg;
    for (const auto& app : manifest.apps) {
        if (app.age_years() < cfg.min_age_years) {
            out.exclusions.push_back({app.package_name, "age<" + format_threshold(cfg.min_age_years) + "y"});
            continue;
        }
        const double frac = fraction_of ? fraction_of(app) : java_fraction(app.source_root);
        if (frac < cfg.java_fraction_min) {
            out.exclusions.push_back(
                {app.package_name, "java_fraction<" + format_threshold(cfg.java_fraction_min)});
            continue;
        }
        out.apps.push_back(app);
    }
    return out;
}

// ---------------------------------------------------------------------------
// AndroidManifest.xml

/// Number of `<activity>` elements directly under `<manifest><application>`.
/// `<activity-alias>` is not counted; commented-out declarations are ignored.
inline std::size_t count_activities(const fs::path& manifest_path)
{
    namespace pt = boost::property_tree;
    if (manifest_path.empty() || !fs::exists(manifest_path))
        throw DataError("manifest not found: " + manifest_path.string());
    pt::ptree tree;
    try {
        pt::read_xml(manifest_path.string(), tree);
    } catch (const pt::xml_parser_error& e) {
        throw DataError(std::string("malformed manifest XML: ") + e.what());
    }
    const auto manifest = tree.get_child_optional("manifest");
    if (!manifest) throw DataError("manifest has no <manifest> root: " + manifest_path.string());
    std::size_t count = 0;
    for (const auto& [tag, node] : *manifest) {
        if (tag != "application") continue;
        for (const auto& [child_tag, _] : node)
            if (child_tag == "activity") ++count;
    }
    return count;
}

}  // namespace apppop::corpus

#endif  // APPPOP_CORPUS_HPP
