#ifndef APPPOP_SMELLS_HPP
#define APPPOP_SMELLS_HPP

// Rule-based detection of twelve implementation, design and architecture
// smells. Every threshold is strict: an entity smells when it exceeds it.

#include <apppop/metrics/code.hpp>
#include <apppop/metrics/system.hpp>

#include <json.hpp>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace apppop::smells {

struct SmellConfig {
    int long_method_loc = 100;
    int complex_method_cc = 8;
    int long_param_list = 5;
    int long_statement_chars = 120;
    int long_identifier_chars = 30;
    std::vector<double> magic_number_whitelist = {-1, 0, 1, 2};
    int insufficient_modularization_class_loc = 1000;
    int insufficient_modularization_public_methods = 30;
    int insufficient_modularization_wmc = 100;
    int god_component_package_loc = 27000;
    int god_component_class_count = 30;
    int deep_hierarchy_dit = 6;

    void validate() const
    {
        const std::array<int, 11> thresholds = {long_method_loc,
                                                complex_method_cc,
                                                long_param_list,
                                                long_statement_chars,
                                                long_identifier_chars,
                                                insufficient_modularization_class_loc,
                                                insufficient_modularization_public_methods,
                                                insufficient_modularization_wmc,
                                                god_component_package_loc,
                                                god_component_class_count,
                                                deep_hierarchy_dit};
        for (int t : thresholds)
            if (t <= 0) throw ConfigError("smell thresholds must be positive");
    }

    nlohmann::json to_json() const
    {
        return {{"long_method_loc", long_method_loc},
                {"complex_method_cc", complex_method_cc},
                {"long_param_list", long_param_list},
                {"long_statement_chars", long_statement_chars},
                {"long_identifier_chars", long_identifier_chars},
                {"magic_number_whitelist", magic_number_whitelist},
                {"insufficient_modularization",
                 {{"class_loc", insufficient_modularization_class_loc},
                  {"public_methods", insufficient_modularization_public_methods},
                  {"wmc", insufficient_modularization_wmc}}},
                {"god_component",
                 {{"package_loc", god_component_package_loc}, {"class_count", god_component_class_count}}},
                {"deep_hierarchy_dit", deep_hierarchy_dit}};
    }

    static SmellConfig from_json(const nlohmann::json& j)
    {
        SmellConfig c;
        auto get = [&](const nlohmann::json& obj, const char* key, int& into) {
            if (obj.contains(key)) into = obj.at(key).get<int>();
        };
        get(j, "long_method_loc", c.long_method_loc);
        get(j, "complex_method_cc", c.complex_method_cc);
        get(j, "long_param_list", c.long_param_list);
        get(j, "long_statement_chars", c.long_statement_chars);
        get(j, "long_identifier_chars", c.long_identifier_chars);
        get(j, "deep_hierarchy_dit", c.deep_hierarchy_dit);
        if (j.contains("magic_number_whitelist"))
            c.magic_number_whitelist = j.at("magic_number_whitelist").get<std::vector<double>>();
        if (j.contains("insufficient_modularization")) {
            const auto& im = j.at("insufficient_modularization");
            get(im, "class_loc", c.insufficient_modularization_class_loc);
            get(im, "public_methods", c.insufficient_modularization_public_methods);
            get(im, "wmc", c.insufficient_modularization_wmc);
        }
        if (j.contains("god_component")) {
            const auto& gc = j.at("god_component");
            get(gc, "package_loc", c.god_component_package_loc);
            get(gc, "class_count", c.god_component_class_count);
        }
        c.validate();
        return c;
    }

    /// One-line description for CSV header comments.
    std::string summary() const { return to_json().dump(); }
};

inline const std::vector<std::string>& smell_names()
{
    static const std::vector<std::string> kNames = {
        "LongMethod",     "ComplexMethod",    "LongParameterList",          "LongStatement",
        "LongIdentifier", "MagicNumber",      "EmptyCatchClause",           "MissingDefault",
        "CyclicDependency", "InsufficientModularization", "GodComponent", "DeepHierarchy"};
    return kNames;
}

struct SmellReport {
    std::map<std::string, int> counts;

    SmellReport()
    {
        for (const auto& n : smell_names()) counts[n] = 0;
    }

    int operator[](const std::string& name) const { return counts.at(name); }

    /// Counts in `smell_names()` order.
    std::vector<int> ordered() const
    {
        std::vector<int> out;
        for (const auto& n : smell_names()) out.push_back(counts.at(n));
        return out;
    }
};

inline bool whitelisted(double v, const std::vector<double>& whitelist)
{
    return std::any_of(whitelist.begin(), whitelist.end(), [&](double w) { return w == v; });
}

/// Method-local smells of one code region.
inline void count_code_smells(const java::CodeFacts& f, const SmellConfig& cfg, SmellReport& r)
{
    for (int len : f.statement_lengths)
        if (len > cfg.long_statement_chars) ++r.counts["LongStatement"];
    for (const auto& name : f.declared_names)
        if (static_cast<int>(name.size()) > cfg.long_identifier_chars) ++r.counts["LongIdentifier"];
    for (const auto& n : f.numbers)
        if (!n.in_final_field_initializer && !whitelisted(n.value, cfg.magic_number_whitelist))
            ++r.counts["MagicNumber"];
    r.counts["EmptyCatchClause"] += f.empty_catch_count;
    r.counts["MissingDefault"] += f.missing_default_count;
}

inline SmellReport detect_smells(const java::StructuralModel& model, const java::DependencyGraph& class_graph,
                                 const SmellConfig& cfg)
{
    cfg.validate();
    SmellReport r;
    std::map<std::string, int> package_classes;
    for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
        const auto& c = model.classes[ci];
        count_code_smells(c.init_facts, cfg, r);
        for (const auto& m : c.methods) {
            count_code_smells(m.facts, cfg, r);
            if (!m.is_constructor && static_cast<int>(m.name.size()) > cfg.long_identifier_chars)
                ++r.counts["LongIdentifier"];
            if (!m.has_body) continue;
            if (m.loc > cfg.long_method_loc) ++r.counts["LongMethod"];
            if (metrics::cyclomatic(m) > cfg.complex_method_cc) ++r.counts["ComplexMethod"];
            if (static_cast<int>(m.parameters.size()) > cfg.long_param_list) ++r.counts["LongParameterList"];
        }
        const auto row = metrics::class_metrics(model, static_cast<int>(ci));
        if (row.loc > cfg.insufficient_modularization_class_loc ||
            row.public_methods > cfg.insufficient_modularization_public_methods ||
            row.wmc > cfg.insufficient_modularization_wmc)
            ++r.counts["InsufficientModularization"];
        if (row.dit > cfg.deep_hierarchy_dit) ++r.counts["DeepHierarchy"];
        if (c.kind != java::ClassKind::anonymous) ++package_classes[java::package_label(c.package)];
    }
    std::map<std::string, long> package_loc;
    for (const auto& u : model.units) package_loc[java::package_label(u.package)] += u.loc;
    for (const auto& [pkg, loc] : package_loc) {
        const int classes = package_classes.count(pkg) ? package_classes.at(pkg) : 0;
        if (loc > cfg.god_component_package_loc || classes > cfg.god_component_class_count)
            ++r.counts["GodComponent"];
    }
    r.counts["CyclicDependency"] = metrics::cliques(class_graph.adjacency()).count;
    return r;
}

inline SmellReport detect_smells(const java::StructuralModel& model, const SmellConfig& cfg = {})
{
    return detect_smells(model, java::build_graph(model, java::Granularity::cls), cfg);
}

inline std::string smells_csv(const std::vector<std::pair<std::string, SmellReport>>& rows, const SmellConfig& cfg)
{
    std::string out = "# thresholds=" + cfg.summary() + "\n";
    std::vector<std::string> header = {"app_id"};
    header.insert(header.end(), smell_names().begin(), smell_names().end());
    out += csv::join_row(header);
    for (const auto& [id, rep] : rows) {
        std::vector<std::string> cells = {id};
        for (int v : rep.ordered()) cells.push_back(std::to_string(v));
        out += csv::join_row(cells);
    }
    return out;
}

}  // namespace apppop::smells

#endif  // APPPOP_SMELLS_HPP
