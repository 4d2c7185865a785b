// Command-line front end: one subcommand per pipeline stage plus `run`.
// Exit codes: 0 success, 1 config error, 2 data error, 3 internal error.

// Eigen goes first: httplib pulls in <resolv.h>, whose `_res` macro breaks it.
#include <apppop/pipeline.hpp>
#include <apppop/fdroid.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace apppop;
using pipeline::RunConfig;

struct Overrides {
    std::string config;
    std::string corpus;
    std::string out;
    std::string feature_set;
    std::string target;
    std::string task;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

/// The config file, then command-line flags on top.
RunConfig resolve_config(const Overrides& o)
{
    RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
    if (!o.corpus.empty()) cfg.corpus = o.corpus;
    if (!o.out.empty()) cfg.out = o.out;
    if (!o.feature_set.empty()) cfg.feature_sets = {o.feature_set};
    if (!o.target.empty()) cfg.targets = {labeling::parse_target(o.target)};
    if (!o.task.empty()) cfg.task = ml::parse_task(o.task);
    if (o.seed) cfg.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    cfg.validate();
    return cfg;
}

int exit_code(ErrorKind kind) { return static_cast<int>(kind); }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Static-analysis features and popularity models for Android apps"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--corpus", o.corpus, "Corpus root: one directory per app with app.json");
    app.add_option("--out", o.out, "Output directory for stage artifacts");
    app.add_option("--feature-set", o.feature_set, "Restrict to one feature set")
        ->check(CLI::IsMember({"size", "handpicked", "voting"}));
    app.add_option("--target", o.target, "Restrict to one target")->check(CLI::IsMember({"rating", "dpy", "log_dpy"}));
    app.add_option("--task", o.task, "Learning task")->check(CLI::IsMember({"classification", "regression"}));
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

    using Stage = std::function<void(const RunConfig&)>;
    const std::vector<std::tuple<std::string, std::string, Stage>> stages = {
        {"extract", "Parse every app and write features.csv plus per-app dumps",
         [](const RunConfig& c) { pipeline::cmd_extract(c); }},
        {"label", "Compute popularity labels (labels.csv, labels.json)", [](const RunConfig& c) { pipeline::cmd_label(c); }},
        {"select", "Build the feature sets (selection.json)", [](const RunConfig& c) { pipeline::cmd_select(c); }},
        {"train", "Fit every model on every feature set (models/)", [](const RunConfig& c) { pipeline::cmd_train(c); }},
        {"evaluate", "Leave-one-out evaluation (report.json)", [](const RunConfig& c) { pipeline::cmd_evaluate(c); }},
        {"report", "Summary table (report.csv, report.txt)",
         [](const RunConfig& c) {
             pipeline::cmd_report(c);
             std::cout << read_file(pipeline::Artifacts{c.out}.report_txt().string());
         }},
        {"run", "All stages in order",
         [](const RunConfig& c) {
             pipeline::cmd_run(c);
             std::cout << read_file(pipeline::Artifacts{c.out}.report_txt().string());
         }},
    };
    Stage chosen;
    for (const auto& [name, help, fn] : stages) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&chosen, fn = fn] { chosen = fn; });
    }

    std::string index_url = "https://f-droid.org/repo/index-v1.json";
    std::string index_out;
    bool fetch = false;
    auto* fetch_cmd = app.add_subcommand("fetch-index", "Download the F-Droid index and list source repositories");
    fetch_cmd->add_option("--url", index_url, "Index URL");
    fetch_cmd->add_option("--output", index_out, "Where to store the index (default <out>/fdroid_index.json)");
    fetch_cmd->callback([&fetch] { fetch = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        const auto cfg = resolve_config(o);
        if (fetch) {
            const auto out = index_out.empty() ? cfg.out / "fdroid_index.json" : std::filesystem::path(index_out);
            const auto summary = fdroid::fetch_fdroid_index(index_url, out);
            for (const auto& e : summary.entries) std::cout << e.package_name << ',' << e.source_url << '\n';
            return 0;
        }
        chosen(cfg);
        return 0;
    } catch (const Error& e) {
        std::cerr << "apppop: error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "apppop: internal error: " << e.what() << '\n';
        return exit_code(ErrorKind::internal);
    }
}
