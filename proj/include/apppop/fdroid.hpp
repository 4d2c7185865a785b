#ifndef APPPOP_FDROID_HPP
#define APPPOP_FDROID_HPP

// Download of the F-Droid package index. Kept apart from corpus.hpp so that
// only targets that fetch pull in cpp-httplib (and OpenSSL, when enabled).

#include <apppop/common.hpp>

#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace apppop::fdroid {

/// Network-level failure; the caller may retry.
class TransportError : public DataError {
public:
    using DataError::DataError;
    bool retryable() const noexcept { return true; }
};

/// The server answered but the body is not an index document.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

struct IndexEntry {
    std::string package_name;
    std::string source_url;
};

struct IndexSummary {
    std::vector<IndexEntry> entries;
};

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

inline ParsedUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// Extracts (package, source repository) pairs from an index-v2 document
/// (`packages` object) or an index-v1 document (`apps` array).
inline IndexSummary summarize_index(const nlohmann::json& index)
{
    IndexSummary summary;
    auto source_of = [](const nlohmann::json& meta) -> std::string {
        if (!meta.contains("sourceCode")) return {};
        const auto& sc = meta.at("sourceCode");
        if (sc.is_string()) return sc.get<std::string>();
        if (sc.is_object() && !sc.empty() && sc.begin()->is_string()) return sc.begin()->get<std::string>();
        return {};
    };
    if (index.contains("packages") && index.at("packages").is_object()) {
        for (const auto& [name, pkg] : index.at("packages").items()) {
            const auto meta = pkg.contains("metadata") ? pkg.at("metadata") : nlohmann::json::object();
            summary.entries.push_back({name, source_of(meta)});
        }
    } else if (index.contains("apps") && index.at("apps").is_array()) {
        for (const auto& app : index.at("apps"))
            summary.entries.push_back({app.value("packageName", std::string{}), source_of(app)});
    } else {
        throw FormatError("document has neither 'packages' nor 'apps'");
    }
    std::sort(summary.entries.begin(), summary.entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.package_name < b.package_name; });
    return summary;
}

/// GETs the index, validates it as JSON, and persists the body verbatim.
/// Nothing is written unless the response is a 200 with a JSON body.
inline IndexSummary fetch_fdroid_index(const std::string& url, const std::filesystem::path& out)
{
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    auto res = client.Get(parts.path);
    if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("request to " + url + " returned HTTP " + std::to_string(res->status));
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("index body is not JSON: ") + e.what());
    }
    auto summary = summarize_index(doc);
    write_file(out.string(), res->body);
    return summary;
}

}  // namespace apppop::fdroid

#endif  // APPPOP_FDROID_HPP
