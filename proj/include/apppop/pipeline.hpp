#ifndef APPPOP_PIPELINE_HPP
#define APPPOP_PIPELINE_HPP

// Stage orchestration. Every stage reads declared artifacts under the output
// directory, writes its own, and stamps the config hash into each file.
// Stage outputs depend only on (inputs, config, seed); `jobs` never changes
// a byte.

#include "corpus.hpp"
#include "evaluate.hpp"
#include "features.hpp"
#include "labeling.hpp"
#include "metrics/code.hpp"
#include "metrics/system.hpp"
#include "select.hpp"
#include "smells.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apppop::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using labeling::Target;
using ml::Matrix;
using ml::Task;
using ml::Vector;

using Log = std::function<void(const std::string&)>;

inline void log_to_stderr(const std::string& message) { std::cerr << "apppop: " << message << '\n'; }

// ---------------------------------------------------------------------------
// Configuration

enum class SelectionScope { corpus, per_fold };

struct EvaluationConfig {
    bool smote = true;  // classification only
    int smote_k = 5;
    double trim_k = 1.5;  // regression outlier fence; infinity disables trimming
    SelectionScope scope = SelectionScope::corpus;
};

struct ModelEntry {
    ml::Family family = ml::Family::lr;
    json hyperparameters = json::object();
};

struct RunConfig {
    fs::path corpus;
    fs::path out = "out";
    corpus::FilterConfig filters;
    smells::SmellConfig smells;
    features::Vocabulary vocabulary;
    labeling::BinarizeRule rating_rule = labeling::BinarizeRule::median();
    labeling::BinarizeRule dpy_rule = labeling::BinarizeRule::median();
    Task task = Task::classification;
    std::vector<Target> targets = {Target::rating, Target::dpy};
    std::vector<std::string> feature_sets = {"size", "handpicked", "voting"};
    std::optional<std::vector<ModelEntry>> models;  // unset: every family supporting the task
    select::SelectorParams selection;
    EvaluationConfig evaluation;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    int jobs = 1;

    std::vector<ModelEntry> resolved_models() const
    {
        if (models) return *models;
        std::vector<ModelEntry> out;
        for (auto f : ml::default_families(task)) out.push_back({f, json::object()});
        return out;
    }

    void validate() const
    {
        if (targets.empty()) throw ConfigError("config lists no targets");
        if (feature_sets.empty()) throw ConfigError("config lists no feature sets");
        for (const auto& fs_name : feature_sets)
            if (fs_name != "size" && fs_name != "handpicked" && fs_name != "voting")
                throw ConfigError("unknown feature set '" + fs_name + "' (expected size, handpicked or voting)");
        const auto entries = resolved_models();
        if (entries.empty()) throw ConfigError("config lists no models");
        std::set<ml::Family> seen;
        for (const auto& m : entries) {
            if (!seen.insert(m.family).second) throw ConfigError("model family listed twice: " + ml::to_string(m.family));
            spec_for(m).validate();
        }
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        if (!(threshold > 0 && threshold < 1)) throw ConfigError("threshold must lie in (0, 1)");
        if (evaluation.smote_k < 1) throw ConfigError("smote_k must be >= 1");
        if (!(evaluation.trim_k > 0)) throw ConfigError("trim_k must be > 0");
        smells.validate();
        selection.validate();
    }

    ml::ModelSpec spec_for(const ModelEntry& m) const
    {
        ml::ModelSpec s;
        s.family = m.family;
        s.task = task;
        s.hyperparameters = m.hyperparameters;
        s.seed = seed;
        s.threshold = threshold;
        s.jobs = jobs;
        return s;
    }

    select::SelectorParams selector_params() const
    {
        auto p = selection;
        p.seed = seed;
        p.jobs = jobs;
        return p;
    }

    /// Everything that can change an output byte. Paths and `jobs` are left
    /// out so relocated or parallel runs share a hash.
    json substantive_json() const
    {
        json model_list = json::array();
        for (const auto& m : resolved_models()) model_list.push_back(spec_for(m).to_json());
        json target_list = json::array();
        for (auto t : targets) target_list.push_back(labeling::to_string(t));
        return {{"filters",
                 {{"java_fraction_min", filters.java_fraction_min},
                  {"min_age_years", filters.min_age_years},
                  {"min_normal_classes", filters.min_normal_classes}}},
                {"smells", smells.to_json()},
                {"vocabulary", vocabulary.to_json()},
                {"binarization", {{"rating", rating_rule.to_json()}, {"dpy", dpy_rule.to_json()}}},
                {"task", ml::to_string(task)},
                {"targets", target_list},
                {"feature_sets", feature_sets},
                {"models", model_list},
                {"selection", selection.to_json()},
                {"evaluation",
                 {{"smote", evaluation.smote},
                  {"smote_k", evaluation.smote_k},
                  {"trim_k", std::isinf(evaluation.trim_k) ? json("inf") : json(evaluation.trim_k)},
                  {"selection_scope", evaluation.scope == SelectionScope::corpus ? "corpus" : "per_fold"}}},
                {"threshold", threshold},
                {"seed", seed}};
    }

    std::string hash() const { return hash_hex(substantive_json().dump()); }

    /// Hash of the settings that feed extraction, keying the per-app cache.
    std::string extraction_hash() const
    {
        const auto j = substantive_json();
        return hash_hex(json{{"filters", j["filters"]}, {"smells", j["smells"]}, {"vocabulary", j["vocabulary"]}}.dump());
    }

    static RunConfig from_json(const json& j)
    {
        static const std::set<std::string> kKeys = {"corpus", "out", "filters", "smells", "vocabulary",
                                                    "binarization", "task", "targets", "feature_sets", "models",
                                                    "selection", "evaluation", "threshold", "seed", "jobs"};
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        for (const auto& [key, _] : j.items())
            if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
        RunConfig c;
        try {
            if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
            if (j.contains("out")) c.out = j.at("out").get<std::string>();
            if (j.contains("filters")) {
                const auto& f = j.at("filters");
                c.filters.java_fraction_min = f.value("java_fraction_min", c.filters.java_fraction_min);
                c.filters.min_age_years = f.value("min_age_years", c.filters.min_age_years);
                c.filters.min_normal_classes = f.value("min_normal_classes", c.filters.min_normal_classes);
            }
            if (j.contains("smells")) c.smells = smells::SmellConfig::from_json(j.at("smells"));
            if (j.contains("vocabulary")) c.vocabulary = features::Vocabulary::from_json(j.at("vocabulary"));
            if (j.contains("binarization")) {
                const auto& b = j.at("binarization");
                if (b.contains("rating")) c.rating_rule = labeling::BinarizeRule::from_json(b.at("rating"));
                if (b.contains("dpy")) c.dpy_rule = labeling::BinarizeRule::from_json(b.at("dpy"));
            }
            if (j.contains("task")) c.task = ml::parse_task(j.at("task").get<std::string>());
            if (j.contains("targets")) {
                c.targets.clear();
                for (const auto& t : j.at("targets")) c.targets.push_back(labeling::parse_target(t.get<std::string>()));
            }
            if (j.contains("feature_sets")) c.feature_sets = j.at("feature_sets").get<std::vector<std::string>>();
            if (j.contains("models")) {
                std::vector<ModelEntry> entries;
                for (const auto& m : j.at("models")) {
                    ModelEntry e;
                    e.family = ml::parse_family(m.at("family").get<std::string>());
                    e.hyperparameters = m.value("hyperparameters", json::object());
                    entries.push_back(std::move(e));
                }
                c.models = std::move(entries);
            }
            if (j.contains("selection")) {
                c.selection = select::SelectorParams::from_json(j.at("selection"));
            }
            if (j.contains("evaluation")) {
                const auto& e = j.at("evaluation");
                c.evaluation.smote = e.value("smote", c.evaluation.smote);
                c.evaluation.smote_k = e.value("smote_k", c.evaluation.smote_k);
                if (e.contains("trim_k")) {
                    const auto& k = e.at("trim_k");
                    c.evaluation.trim_k = k.is_string() && k.get<std::string>() == "inf"
                                              ? std::numeric_limits<double>::infinity()
                                              : k.get<double>();
                }
                const auto scope = e.value("selection_scope", std::string("corpus"));
                if (scope == "corpus") c.evaluation.scope = SelectionScope::corpus;
                else if (scope == "per_fold") c.evaluation.scope = SelectionScope::per_fold;
                else throw ConfigError("selection_scope must be corpus or per_fold");
            }
            c.threshold = j.value("threshold", c.threshold);
            c.seed = j.value("seed", c.seed);
            c.jobs = j.value("jobs", c.jobs);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed config: ") + e.what());
        }
        return c;
    }

    static RunConfig load(const fs::path& path)
    {
        json j;
        try {
            j = json::parse(read_file(path.string()));
        } catch (const json::exception& e) {
            throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
        return from_json(j);
    }
};

// ---------------------------------------------------------------------------
// Artifact paths

struct Artifacts {
    fs::path root;

    fs::path features() const { return root / "features.csv"; }
    fs::path extract_log() const { return root / "extract.json"; }
    fs::path app_dir(const std::string& app_id) const { return root / "apps" / app_id; }
    fs::path labels() const { return root / "labels.csv"; }
    fs::path labels_sidecar() const { return root / "labels.json"; }
    fs::path selection() const { return root / "selection.json"; }
    fs::path models_index() const { return root / "models" / "index.json"; }
    fs::path model(const std::string& target, const std::string& feature_set, const std::string& family) const
    {
        return root / "models" / target / feature_set / (family + ".json");
    }
    fs::path report_json() const { return root / "report.json"; }
    fs::path report_csv() const { return root / "report.csv"; }
    fs::path report_txt() const { return root / "report.txt"; }
};

/// Missing inputs name the command that produces them.
inline void require(const fs::path& artifact, const std::string& producer)
{
    if (!fs::exists(artifact))
        throw DataError("missing " + artifact.string() + "; run `apppop " + producer + "` first");
}

inline void write_json(const fs::path& path, const json& j) { write_file(path.string(), j.dump(2) + "\n"); }

inline json read_json(const fs::path& path)
{
    try {
        return json::parse(read_file(path.string()));
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

/// Refuses artifacts produced under a different configuration.
inline void check_hash(const std::string& found, const RunConfig& cfg, const fs::path& artifact,
                       const std::string& producer)
{
    if (found != cfg.hash())
        throw DataError(artifact.string() + " was produced under config " + found + ", current config is " +
                        cfg.hash() + "; rerun `apppop " + producer + "`");
}

// ---------------------------------------------------------------------------
// extract

/// Per-app result, cached under apps/<id>/features.json.
struct AppExtraction {
    std::string app_id;
    std::string content_hash;
    bool kept = false;
    std::string reason;
    features::FeatureVector vector;

    json to_json() const
    {
        json j = {{"app_id", app_id}, {"content_hash", content_hash}, {"kept", kept}, {"reason", reason}};
        if (kept) {
            j["names"] = vector.names;
            j["values"] = vector.values;
        }
        return j;
    }

    static AppExtraction from_json(const json& j)
    {
        AppExtraction a;
        a.app_id = j.at("app_id").get<std::string>();
        a.content_hash = j.at("content_hash").get<std::string>();
        a.kept = j.at("kept").get<bool>();
        a.reason = j.at("reason").get<std::string>();
        if (a.kept) {
            a.vector.app_id = a.app_id;
            a.vector.names = j.at("names").get<std::vector<std::string>>();
            a.vector.values = j.at("values").get<std::vector<double>>();
        }
        return a;
    }
};

/// Hash of every file under the app directory (relative path and bytes)
/// combined with the extraction settings.
inline std::string app_content_hash(const corpus::AppSnapshot& app, const std::string& extraction_hash)
{
    Fnv1a h;
    h.update(extraction_hash);
    for (const auto& file : corpus::list_files(app.source_root)) {
        const auto rel = fs::relative(file, app.source_root).generic_string();
        h.update(rel).update(std::string_view("\0", 1)).update(read_file(file.string())).update(std::string_view("\0", 1));
    }
    return h.hex();
}

inline AppExtraction extract_app(const corpus::AppSnapshot& app, const RunConfig& cfg, const Artifacts& art,
                                 const std::string& content_hash)
{
    AppExtraction out;
    out.app_id = app.package_name;
    out.content_hash = content_hash;
    try {
        std::vector<std::string> java_files;
        for (const auto& f : corpus::list_files(app.source_root))
            if (f.extension() == ".java") java_files.push_back(f.string());
        const auto model = java::load_model(java_files);
        const auto class_rows = metrics::class_metrics(model);
        const auto method_rows = metrics::method_metrics(model);
        const auto dir = art.app_dir(app.package_name);
        write_file((dir / "classes.csv").string(), metrics::classes_csv(class_rows));
        write_file((dir / "methods.csv").string(), metrics::methods_csv(method_rows));

        const auto decision = features::normal_class_filter(class_rows, cfg.filters.min_normal_classes);
        if (!decision.keep) {
            out.reason = decision.reason;
            return out;
        }
        const auto system = metrics::system_metrics(model);
        const auto smell_report = smells::detect_smells(model, cfg.smells);
        write_file((dir / "system.csv").string(), metrics::system_metrics_csv({{app.package_name, system}}));
        write_file((dir / "smells.csv").string(), smells::smells_csv({{app.package_name, smell_report}}, cfg.smells));

        features::AppMeta meta;
        meta.app_loc = static_cast<double>(corpus::count_source_lines(app.source_root).total());
        meta.activity_count =
            app.manifest_path.empty() ? 0.0 : static_cast<double>(corpus::count_activities(app.manifest_path));
        meta.contains_ads = app.contains_ads;
        meta.genre = app.genre;
        meta.permissions = app.permissions;
        out.vector = features::aggregate_app(app.package_name, class_rows, method_rows, system, smell_report, meta,
                                             cfg.vocabulary);
        out.kept = true;
    } catch (const Error& e) {
        // Re-throw with the same category, adding the app for context.
        const std::string msg = "app " + app.package_name + ": " + e.what();
        switch (e.kind()) {
            case ErrorKind::config: throw ConfigError(msg);
            case ErrorKind::data: throw DataError(msg);
            case ErrorKind::internal: throw InternalError(msg);
        }
    }
    return out;
}

struct ExtractSummary {
    features::FeatureMatrix matrix;
    int reused = 0;
    int extracted = 0;
};

inline ExtractSummary cmd_extract(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cfg.validate();
    if (cfg.corpus.empty()) throw ConfigError("no corpus root given (--corpus or config key 'corpus')");
    const Artifacts art{cfg.out};
    const auto loaded = corpus::load_corpus(cfg.corpus);
    for (const auto& s : loaded.skips) log("skipped " + s.package_name + ": " + s.reason);
    const auto filtered = corpus::filter_corpus(loaded, cfg.filters);
    const auto extraction_hash = cfg.extraction_hash();

    std::vector<AppExtraction> results(filtered.apps.size());
    std::vector<char> reused(filtered.apps.size(), 0);
    parallel_for(filtered.apps.size(), cfg.jobs, [&](std::size_t i) {
        const auto& app = filtered.apps[i];
        const auto content_hash = app_content_hash(app, extraction_hash);
        const auto cached = art.app_dir(app.package_name) / "features.json";
        if (fs::exists(cached)) {
            try {
                auto prior = AppExtraction::from_json(json::parse(read_file(cached.string())));
                if (prior.content_hash == content_hash && prior.app_id == app.package_name) {
                    results[i] = std::move(prior);
                    reused[i] = 1;
                    return;
                }
            } catch (const std::exception&) {
                // Unreadable cache entries are recomputed.
            }
        }
        results[i] = extract_app(app, cfg, art, content_hash);
        write_json(cached, results[i].to_json());
    });

    ExtractSummary summary;
    auto& m = summary.matrix;
    m.schema = features::feature_schema(cfg.vocabulary);
    m.config_hash = cfg.hash();
    json exclusions = json::array();
    for (const auto& e : filtered.exclusions) exclusions.push_back({{"app_id", e.package_name}, {"reason", e.reason}});
    for (std::size_t i = 0; i < results.size(); ++i) {
        (reused[i] ? summary.reused : summary.extracted) += 1;
        if (results[i].kept) m.add(results[i].vector);
        else exclusions.push_back({{"app_id", results[i].app_id}, {"reason", results[i].reason}});
    }
    json skips = json::array();
    for (const auto& s : loaded.skips) skips.push_back({{"app_id", s.package_name}, {"reason", s.reason}});
    if (m.size() == 0) log("warning: no app survived ingest and filtering; features.csv has no rows");
    write_file(art.features().string(), m.to_csv());
    write_json(art.extract_log(), {{"config_hash", m.config_hash},
                                   {"apps", m.app_ids},
                                   {"exclusions", exclusions},
                                   {"skips", skips},
                                   {"percentile_method", "linear interpolation"}});
    log("extract: " + std::to_string(m.size()) + " apps (" + std::to_string(summary.reused) + " cached)");
    return summary;
}

inline features::FeatureMatrix load_features(const RunConfig& cfg)
{
    const Artifacts art{cfg.out};
    require(art.features(), "extract");
    auto m = features::FeatureMatrix::from_csv(read_file(art.features().string()));
    check_hash(m.config_hash, cfg, art.features(), "extract");
    return m;
}

// ---------------------------------------------------------------------------
// label

inline labeling::LabelSet cmd_label(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cfg.validate();
    if (cfg.corpus.empty()) throw ConfigError("no corpus root given (--corpus or config key 'corpus')");
    const Artifacts art{cfg.out};
    const auto matrix = load_features(cfg);
    const std::set<std::string> extracted(matrix.app_ids.begin(), matrix.app_ids.end());
    const auto loaded = corpus::load_corpus(cfg.corpus);
    std::vector<corpus::AppSnapshot> apps;
    for (const auto& a : loaded.apps)
        if (extracted.count(a.package_name)) apps.push_back(a);
    if (apps.size() != extracted.size())
        throw DataError("corpus no longer contains every app in features.csv; rerun `apppop extract`");
    auto labels = apps.empty() ? labeling::LabelSet{} : labeling::label_corpus(apps, cfg.rating_rule, cfg.dpy_rule);
    labels.config_hash = cfg.hash();
    write_file(art.labels().string(), labels.to_csv());
    write_json(art.labels_sidecar(), labels.sidecar());
    log("label: " + std::to_string(labels.rows.size()) + " apps labeled");
    return labels;
}

inline labeling::LabelSet load_labels(const RunConfig& cfg)
{
    const Artifacts art{cfg.out};
    require(art.labels(), "label");
    require(art.labels_sidecar(), "label");
    const auto sidecar = read_json(art.labels_sidecar());
    check_hash(sidecar.value("config_hash", std::string()), cfg, art.labels_sidecar(), "label");
    auto labels = labeling::LabelSet::from_csv(read_file(art.labels().string()));
    labels.config_hash = sidecar.at("config_hash").get<std::string>();
    return labels;
}

// ---------------------------------------------------------------------------
// Dataset assembly

struct Dataset {
    Matrix x;
    Vector y;
    std::vector<std::string> app_ids;
    std::vector<std::string> schema;
    std::vector<std::string> trimmed;  // regression outliers removed
};

/// Rows of `matrix` that carry a label, restricted to `columns`, with the
/// target for `task`. Regression targets pass through the Tukey fences.
inline Dataset assemble(const features::FeatureMatrix& matrix, const labeling::LabelSet& labels, Target target,
                        Task task, double trim_k, const std::vector<std::string>& columns)
{
    std::vector<std::size_t> idx;
    for (const auto& c : columns) idx.push_back(matrix.index_of(c));
    std::map<std::string, const labeling::LabelRow*> by_id;
    for (const auto& r : labels.rows) by_id[r.app_id] = &r;

    std::vector<std::size_t> rows;
    std::vector<double> values;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        const auto it = by_id.find(matrix.app_ids[i]);
        if (it == by_id.end()) continue;
        rows.push_back(i);
        ids.push_back(matrix.app_ids[i]);
        values.push_back(task == Task::classification ? (it->second->popular(target) ? 1.0 : 0.0)
                                                      : it->second->value(target));
    }
    Dataset d;
    if (task == Task::regression && !std::isinf(trim_k) && values.size() >= 4) {
        const auto report = evaluate::trim_outliers(values, ids, trim_k);
        d.trimmed = report.dropped;
        const std::set<std::string> dropped(report.dropped.begin(), report.dropped.end());
        std::vector<std::size_t> keep_rows;
        std::vector<double> keep_values;
        std::vector<std::string> keep_ids;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (dropped.count(ids[k])) continue;
            keep_rows.push_back(rows[k]);
            keep_values.push_back(values[k]);
            keep_ids.push_back(ids[k]);
        }
        rows = std::move(keep_rows);
        values = std::move(keep_values);
        ids = std::move(keep_ids);
    }
    d.schema = columns;
    d.app_ids = ids;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(idx.size()));
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < idx.size(); ++c)
            d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = matrix.rows[rows[r]][idx[c]];
        d.y[static_cast<Eigen::Index>(r)] = values[r];
    }
    return d;
}

// ---------------------------------------------------------------------------
// select

struct Selection {
    std::string target;
    std::string feature_set;
    std::vector<std::string> features;
    std::optional<select::VotingSelection> voting;

    json to_json() const
    {
        json j = {{"target", target}, {"feature_set", feature_set}, {"features", features}};
        if (voting) {
            json results = json::array();
            for (const auto& r : voting->results) results.push_back(r.to_json());
            j["selectors"] = results;
            j["vote"] = voting->vote.to_json();
        }
        return j;
    }
};

/// Voting selection over every column of `matrix` for one target.
inline select::VotingSelection voting_for(const features::FeatureMatrix& matrix, const labeling::LabelSet& labels,
                                          Target target, const RunConfig& cfg)
{
    const auto d = assemble(matrix, labels, target, cfg.task, cfg.evaluation.trim_k, matrix.schema);
    if (d.x.rows() < 2) throw DataError("voting selection needs at least two labeled apps");
    return select::voting_selection(d.x, d.y, d.schema, cfg.task, cfg.selector_params());
}

inline std::vector<Selection> select_features(const features::FeatureMatrix& matrix, const labeling::LabelSet& labels,
                                              const RunConfig& cfg)
{
    std::vector<Selection> out;
    for (auto target : cfg.targets) {
        for (const auto& fs_name : cfg.feature_sets) {
            Selection s;
            s.target = labeling::to_string(target);
            s.feature_set = fs_name;
            if (fs_name == "size") {
                s.features = select::size_only(matrix);
            } else if (fs_name == "handpicked") {
                s.features = select::handpicked(matrix);
            } else {
                s.voting = voting_for(matrix, labels, target, cfg);
                s.features = s.voting->vote.selected;
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline std::vector<Selection> cmd_select(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cfg.validate();
    const Artifacts art{cfg.out};
    const auto matrix = load_features(cfg);
    const auto labels = load_labels(cfg);
    const auto selections = select_features(matrix, labels, cfg);
    json list = json::array();
    for (const auto& s : selections) list.push_back(s.to_json());
    write_json(art.selection(), {{"config_hash", cfg.hash()}, {"task", ml::to_string(cfg.task)}, {"selections", list}});
    log("select: " + std::to_string(selections.size()) + " feature sets");
    return selections;
}

inline std::vector<Selection> load_selection(const RunConfig& cfg)
{
    const Artifacts art{cfg.out};
    require(art.selection(), "select");
    const auto j = read_json(art.selection());
    check_hash(j.value("config_hash", std::string()), cfg, art.selection(), "select");
    std::vector<Selection> out;
    for (const auto& s : j.at("selections")) {
        Selection sel;
        sel.target = s.at("target").get<std::string>();
        sel.feature_set = s.at("feature_set").get<std::string>();
        sel.features = s.at("features").get<std::vector<std::string>>();
        out.push_back(std::move(sel));
    }
    return out;
}

// ---------------------------------------------------------------------------
// train

/// SMOTE-balanced copy of a classification training set. Used for final
/// models so they see the same class balance as the evaluated folds.
inline std::pair<Matrix, Vector> balanced(const Matrix& x, const Vector& y, const RunConfig& cfg)
{
    if (cfg.task != Task::classification || !cfg.evaluation.smote) return {x, y};
    const double pos = y.sum();
    const double minority_label = pos * 2 < static_cast<double>(y.size()) ? 1.0 : 0.0;
    std::vector<Eigen::Index> minority_rows, majority_rows;
    for (Eigen::Index r = 0; r < y.size(); ++r) (y[r] == minority_label ? minority_rows : majority_rows).push_back(r);
    if (minority_rows.size() < 2) return {x, y};
    Matrix minority(static_cast<Eigen::Index>(minority_rows.size()), x.cols());
    Matrix majority(static_cast<Eigen::Index>(majority_rows.size()), x.cols());
    for (std::size_t r = 0; r < minority_rows.size(); ++r) minority.row(static_cast<Eigen::Index>(r)) = x.row(minority_rows[r]);
    for (std::size_t r = 0; r < majority_rows.size(); ++r) majority.row(static_cast<Eigen::Index>(r)) = x.row(majority_rows[r]);
    const auto syn = ml::smote(minority, majority, cfg.evaluation.smote_k, cfg.seed);
    Matrix xb(x.rows() + syn.synthetic.rows(), x.cols());
    xb << x, syn.synthetic;
    Vector yb(y.size() + syn.synthetic.rows());
    yb << y, Vector::Constant(syn.synthetic.rows(), minority_label);
    return {xb, yb};
}

inline json cmd_train(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cfg.validate();
    const Artifacts art{cfg.out};
    const auto selections = load_selection(cfg);
    const auto matrix = load_features(cfg);
    const auto labels = load_labels(cfg);
    json index = json::array();
    for (const auto& sel : selections) {
        const auto target = labeling::parse_target(sel.target);
        const auto d = assemble(matrix, labels, target, cfg.task, cfg.evaluation.trim_k, sel.features);
        const auto [xb, yb] = balanced(d.x, d.y, cfg);
        for (const auto& entry : cfg.resolved_models()) {
            const auto spec = cfg.spec_for(entry);
            const auto family = ml::to_string(entry.family);
            const auto path = art.model(sel.target, sel.feature_set, family);
            json record = {{"target", sel.target}, {"feature_set", sel.feature_set}, {"model", family},
                           {"path", fs::relative(path, art.root).generic_string()}};
            try {
                const auto model = ml::TrainedModel::fit(spec, d.schema, xb, yb);
                write_json(path, {{"config_hash", cfg.hash()}, {"model", model.to_json()}});
                record["trained"] = true;
            } catch (const DataError& e) {
                // A corpus-wide fit can be impossible (e.g. one class) while
                // the fold-level evaluation still reports degenerate folds.
                write_json(path, {{"config_hash", cfg.hash()}, {"spec", spec.to_json()}, {"error", e.what()}});
                record["trained"] = false;
                record["error"] = e.what();
                log("warning: " + sel.target + "/" + sel.feature_set + "/" + family + " not trained: " + e.what());
            }
            index.push_back(record);
        }
    }
    write_json(art.models_index(), {{"config_hash", cfg.hash()}, {"models", index}});
    log("train: " + std::to_string(index.size()) + " models");
    return index;
}

// ---------------------------------------------------------------------------
// evaluate

struct ReportEntry {
    std::string model;
    std::string feature_set;
    std::string target;
    evaluate::EvalReport report;
};

/// Per-fold voting selections for one target, shared by every model family.
inline std::vector<std::vector<int>> per_fold_selections(const Dataset& d, const RunConfig& cfg)
{
    const auto n = static_cast<std::size_t>(d.x.rows());
    std::vector<std::vector<int>> out(n);
    auto params = cfg.selector_params();
    params.jobs = 1;
    parallel_for(n, cfg.jobs, [&](std::size_t fold) {
        Matrix xt(d.x.rows() - 1, d.x.cols());
        Vector yt(d.y.size() - 1);
        for (Eigen::Index i = 0, r = 0; i < d.x.rows(); ++i) {
            if (i == static_cast<Eigen::Index>(fold)) continue;
            xt.row(r) = d.x.row(i);
            yt[r++] = d.y[i];
        }
        if (cfg.task == Task::classification && (yt.sum() == 0 || yt.sum() == static_cast<double>(yt.size())))
            return;  // degenerate fold; loocv never asks for it
        const auto v = select::voting_selection(xt, yt, d.schema, cfg.task, params);
        for (const auto& f : v.vote.selected)
            out[fold].push_back(static_cast<int>(std::find(d.schema.begin(), d.schema.end(), f) - d.schema.begin()));
    });
    return out;
}

/// LOOCV of one model on one target and feature set.
inline evaluate::EvalReport evaluate_one(const Dataset& d, const ml::ModelSpec& spec, const RunConfig& cfg,
                                         const std::vector<std::vector<int>>* fold_columns)
{
    evaluate::LoocvOptions options;
    options.smote = cfg.task == Task::classification && cfg.evaluation.smote;
    options.smote_k = cfg.evaluation.smote_k;
    options.jobs = cfg.jobs;
    evaluate::FoldSelector selector;
    if (fold_columns)
        selector = [fold_columns](std::size_t fold, const Matrix&, const Vector&) { return (*fold_columns)[fold]; };
    return evaluate::loocv(d.x, d.y, d.app_ids, d.schema, spec, options, selector);
}

inline std::vector<ReportEntry> cmd_evaluate(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cfg.validate();
    const Artifacts art{cfg.out};
    require(art.models_index(), "train");
    const auto index = read_json(art.models_index());
    check_hash(index.value("config_hash", std::string()), cfg, art.models_index(), "train");
    const auto selections = load_selection(cfg);
    const auto matrix = load_features(cfg);
    const auto labels = load_labels(cfg);
    const auto sidecar = read_json(art.labels_sidecar());

    std::vector<ReportEntry> entries;
    json list = json::array();
    for (const auto& sel : selections) {
        const auto target = labeling::parse_target(sel.target);
        const bool per_fold = sel.feature_set == "voting" && cfg.evaluation.scope == SelectionScope::per_fold;
        const auto d = assemble(matrix, labels, target, cfg.task, cfg.evaluation.trim_k,
                                per_fold ? matrix.schema : sel.features);
        std::optional<std::vector<std::vector<int>>> fold_columns;
        if (per_fold) fold_columns = per_fold_selections(d, cfg);
        for (const auto& m : index.at("models")) {
            if (m.at("target") != sel.target || m.at("feature_set") != sel.feature_set) continue;
            const auto path = art.root / m.at("path").get<std::string>();
            require(path, "train");
            const auto stored = read_json(path);
            const auto spec = ml::ModelSpec::from_json(stored.contains("model") ? stored.at("model").at("spec")
                                                                                : stored.at("spec"));
            ReportEntry e{ml::to_string(spec.family), sel.feature_set, sel.target, {}};
            e.report = evaluate_one(d, spec, cfg, fold_columns ? &*fold_columns : nullptr);
            const auto& split = sel.target == "rating" ? sidecar.at("rating") : sidecar.at("downloads_per_year");
            e.report.provenance = {{"config_hash", cfg.hash()},
                                   {"model", spec.to_json()},
                                   {"hyperparameters", spec.resolved_hyperparameters()},
                                   {"feature_set", sel.feature_set},
                                   {"features", per_fold ? json("per_fold") : json(sel.features)},
                                   {"selection_scope", per_fold ? "per_fold" : "corpus"},
                                   {"target", sel.target},
                                   {"binarization", split},
                                   {"trimmed", d.trimmed},
                                   {"smote", cfg.task == Task::classification && cfg.evaluation.smote},
                                   {"seed", spec.seed}};
            entries.push_back(std::move(e));
        }
    }
    for (const auto& e : entries) {
        auto j = e.report.to_json();
        j["model_family"] = e.model;
        j["feature_set"] = e.feature_set;
        j["target"] = e.target;
        list.push_back(std::move(j));
    }
    write_json(art.report_json(), {{"config_hash", cfg.hash()}, {"reports", list}});
    log("evaluate: " + std::to_string(entries.size()) + " reports");
    return entries;
}

// ---------------------------------------------------------------------------
// report

/// Fixed-width rendering of a table; the first row is the header.
inline std::string text_table(const std::vector<std::vector<std::string>>& rows)
{
    if (rows.empty()) return {};
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            out += r[c];
            if (c + 1 < r.size()) out += std::string(width[c] - r[c].size() + 2, ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    };
    line(rows.front());
    std::vector<std::string> rule;
    for (auto w : width) rule.push_back(std::string(w, '-'));
    line(rule);
    for (std::size_t r = 1; r < rows.size(); ++r) line(rows[r]);
    return out;
}

/// Short numbers for the text table.
inline std::string fixed4(const std::string& cell)
{
    if (cell.empty()) return "-";
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') return cell;
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(4);
    ss << v;
    return ss.str();
}

inline std::vector<std::vector<std::string>> cmd_report(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    const Artifacts art{cfg.out};
    require(art.report_json(), "evaluate");
    const auto j = read_json(art.report_json());
    check_hash(j.value("config_hash", std::string()), cfg, art.report_json(), "evaluate");
    std::vector<std::vector<std::string>> rows = {evaluate::summary_columns()};
    for (const auto& r : j.at("reports")) {
        const auto report = evaluate::EvalReport::from_json(r);
        rows.push_back(evaluate::summary_row(r.at("model_family").get<std::string>(),
                                             r.at("feature_set").get<std::string>(), r.at("target").get<std::string>(),
                                             report));
    }
    std::string csv_text = "# config_hash=" + cfg.hash() + "\n";
    for (const auto& r : rows) csv_text += csv::join_row(r);
    write_file(art.report_csv().string(), csv_text);

    std::vector<std::vector<std::string>> pretty;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> r = rows[i];
        if (i > 0)
            for (std::size_t c = 6; c < r.size(); ++c) r[c] = fixed4(r[c]);
        pretty.push_back(std::move(r));
    }
    write_file(art.report_txt().string(), "config_hash " + cfg.hash() + "\n\n" + text_table(pretty));
    log("report: " + std::to_string(rows.size() - 1) + " rows");
    return rows;
}

/// Every stage in order.
inline void cmd_run(const RunConfig& cfg, const Log& log = log_to_stderr)
{
    cmd_extract(cfg, log);
    cmd_label(cfg, log);
    cmd_select(cfg, log);
    cmd_train(cfg, log);
    cmd_evaluate(cfg, log);
    cmd_report(cfg, log);
}

}  // namespace apppop::pipeline

#endif  // APPPOP_PIPELINE_HPP
