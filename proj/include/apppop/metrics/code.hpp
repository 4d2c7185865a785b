#ifndef APPPOP_METRICS_CODE_HPP
#define APPPOP_METRICS_CODE_HPP

// Class-level (CK family plus statement counters) and method-level metrics
// over a resolved structural model.

#include <apppop/java/resolve.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace apppop::metrics {

using java::ClassInfo;
using java::ClassKind;
using java::MethodInfo;
using java::MethodRef;
using java::StructuralModel;

/// McCabe complexity; body-less methods count as 1.
inline int cyclomatic(const MethodInfo& m)
{
    if (!m.has_body) return 1;
    const auto& s = m.facts.stats;
    return 1 + s.if_count + s.loop_count + s.case_count + s.catch_count + s.logical_op_count + s.ternary_count;
}

inline double mean_of(const std::vector<int>& xs)
{
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Logistic readability proxy in (0,1); strictly decreasing in every driver.
inline double readability(double mean_line_length, double max_nesting, double cyclomatic_complexity,
                          double mean_identifier_length)
{
    const double z = 0.05 * (mean_line_length - 45.0) + 0.4 * (max_nesting - 2.0) +
                     0.3 * (std::log2(1.0 + cyclomatic_complexity) - 1.0) + 0.05 * (mean_identifier_length - 10.0);
    return 1.0 / (1.0 + std::exp(z));
}

inline double readability(const MethodInfo& m)
{
    const auto& s = m.facts.stats;
    return readability(mean_of(s.line_lengths), s.max_nesting, cyclomatic(m), mean_of(s.identifier_lengths));
}

struct ClassMetricsRow {
    std::string qualified_name;
    std::string kind;
    double cbo = 0, wmc = 0, dit = 1, noc = 0, rfc = 0, lcom = 0;
    double total_methods = 0, static_methods = 0, public_methods = 0, private_methods = 0, protected_methods = 0,
           default_methods = 0, visible_methods = 0, abstract_methods = 0, final_methods = 0;
    double total_fields = 0, protected_fields = 0, default_fields = 0, final_fields = 0;
    double nosi = 0, loc = 0;
    double return_qty = 0, loop_qty = 0, comparisons_qty = 0, try_catch_qty = 0, parenthesized_qty = 0,
           string_literals_qty = 0, numbers_qty = 0, assignments_qty = 0, math_ops_qty = 0, variables_qty = 0,
           max_nested_blocks = 0, anonymous_classes_qty = 0, inner_classes_qty = 0, lambdas_qty = 0,
           unique_words_qty = 0, modifiers_code = 0, log_statements_qty = 0;

    /// Numeric columns in dump order. Everything except `modifiers_code` is
    /// ordinal and aggregated.
    static const std::vector<std::string>& numeric_columns()
    {
        static const std::vector<std::string> kColumns = {
            "cbo", "wmc", "dit", "noc", "rfc", "lcom", "total_methods", "static_methods", "public_methods",
            "private_methods", "protected_methods", "default_methods", "visible_methods", "abstract_methods",
            "final_methods", "total_fields", "protected_fields", "default_fields", "final_fields", "nosi", "loc",
            "return_qty", "loop_qty", "comparisons_qty", "try_catch_qty", "parenthesized_qty", "string_literals_qty",
            "numbers_qty", "assignments_qty", "math_ops_qty", "variables_qty", "max_nested_blocks",
            "anonymous_classes_qty", "inner_classes_qty", "lambdas_qty", "unique_words_qty", "modifiers_code",
            "log_statements_qty"};
        return kColumns;
    }

    std::vector<double> numeric_values() const
    {
        return {cbo,
                wmc,
                dit,
                noc,
                rfc,
                lcom,
                total_methods,
                static_methods,
                public_methods,
                private_methods,
                protected_methods,
                default_methods,
                visible_methods,
                abstract_methods,
                final_methods,
                total_fields,
                protected_fields,
                default_fields,
                final_fields,
                nosi,
                loc,
                return_qty,
                loop_qty,
                comparisons_qty,
                try_catch_qty,
                parenthesized_qty,
                string_literals_qty,
                numbers_qty,
                assignments_qty,
                math_ops_qty,
                variables_qty,
                max_nested_blocks,
                anonymous_classes_qty,
                inner_classes_qty,
                lambdas_qty,
                unique_words_qty,
                modifiers_code,
                log_statements_qty};
    }
};

struct MethodMetricsRow {
    std::string class_name;
    std::string signature;
    double fan_in = 0, fan_out = 0, loc = 0, return_qty = 0, variables_qty = 0, parameters_qty = 0,
           methods_invoked_qty = 0, methods_invoked_local_qty = 0, methods_invoked_indirect_local_qty = 0,
           loop_qty = 0, comparisons_qty = 0, try_catch_qty = 0, parenthesized_qty = 0, assignments_qty = 0,
           math_ops_qty = 0, max_nested_blocks = 0, lambdas_qty = 0, unique_words_qty = 0, modifiers_code = 0,
           log_statements_qty = 0, wmc = 1, readability = 0.5;

    static const std::vector<std::string>& numeric_columns()
    {
        static const std::vector<std::string> kColumns = {
            "fan_in", "fan_out", "loc", "return_qty", "variables_qty", "parameters_qty", "methods_invoked_qty",
            "methods_invoked_local_qty", "methods_invoked_indirect_local_qty", "loop_qty", "comparisons_qty",
            "try_catch_qty", "parenthesized_qty", "assignments_qty", "math_ops_qty", "max_nested_blocks",
            "lambdas_qty", "unique_words_qty", "modifiers_code", "log_statements_qty", "wmc", "readability"};
        return kColumns;
    }

    std::vector<double> numeric_values() const
    {
        return {fan_in,
                fan_out,
                loc,
                return_qty,
                variables_qty,
                parameters_qty,
                methods_invoked_qty,
                methods_invoked_local_qty,
                methods_invoked_indirect_local_qty,
                loop_qty,
                comparisons_qty,
                try_catch_qty,
                parenthesized_qty,
                assignments_qty,
                math_ops_qty,
                max_nested_blocks,
                lambdas_qty,
                unique_words_qty,
                modifiers_code,
                log_statements_qty,
                wmc,
                readability};
    }
};

/// Depth of inheritance: 1 without a superclass, 2 for an external one,
/// 1 + DIT(parent) for an internal one.
inline int dit(const StructuralModel& model, int cls)
{
    int depth = 1;
    std::set<int> seen;
    int cur = cls;
    while (seen.insert(cur).second) {
        const auto& c = model.classes[static_cast<std::size_t>(cur)];
        if (c.superclass_index) {
            ++depth;
            cur = *c.superclass_index;
            continue;
        }
        // An anonymous class over an internal interface records it in
        // interface_indices and has no superclass.
        const bool over_internal_interface = c.kind == ClassKind::anonymous && !c.interface_indices.empty();
        if (c.superclass && !over_internal_interface) ++depth;
        break;
    }
    return depth;
}

/// Pairwise LCOM over declared non-constructor methods: max(0, P - Q) with P
/// the pairs sharing no field and Q the pairs sharing at least one.
inline int lcom(const ClassInfo& c)
{
    std::set<std::string> field_names;
    for (const auto& f : c.fields) field_names.insert(f.name);
    std::vector<std::set<std::string>> uses;
    for (const auto& m : c.methods) {
        if (m.is_constructor) continue;
        std::set<std::string> u;
        for (const auto& n : m.facts.names_used)
            if (field_names.count(n)) u.insert(n);
        uses.push_back(std::move(u));
    }
    long share = 0, disjoint = 0;
    for (std::size_t i = 0; i < uses.size(); ++i)
        for (std::size_t j = i + 1; j < uses.size(); ++j) {
            const bool shared = std::any_of(uses[i].begin(), uses[i].end(),
                                            [&](const std::string& f) { return uses[j].count(f) > 0; });
            ++(shared ? share : disjoint);
        }
    return static_cast<int>(std::max(0L, disjoint - share));
}

/// Direct internal subtypes, through either `extends` or `implements`.
inline int noc(const StructuralModel& model, int cls)
{
    int n = 0;
    for (const auto& c : model.classes) {
        if (c.superclass_index == cls ||
            std::find(c.interface_indices.begin(), c.interface_indices.end(), cls) != c.interface_indices.end())
            ++n;
    }
    return n;
}

inline ClassMetricsRow class_metrics(const StructuralModel& model, int cls)
{
    const ClassInfo& c = model.classes.at(static_cast<std::size_t>(cls));
    ClassMetricsRow r;
    r.qualified_name = c.qualified_name;
    r.kind = java::to_string(c.kind);
    r.cbo = static_cast<double>(c.referenced_classes.size());
    r.dit = dit(model, cls);
    r.noc = noc(model, cls);
    r.lcom = lcom(c);
    r.loc = c.loc;
    r.unique_words_qty = c.unique_word_count;
    r.anonymous_classes_qty = c.anonymous_classes;
    r.inner_classes_qty = c.inner_classes;
    r.modifiers_code = c.modifiers;

    std::set<std::pair<std::string, int>> invoked;
    auto add_facts = [&](const java::CodeFacts& f) {
        const auto& s = f.stats;
        r.return_qty += s.return_count;
        r.loop_qty += s.loop_count;
        r.comparisons_qty += s.comparison_count;
        r.try_catch_qty += s.try_catch_count;
        r.parenthesized_qty += s.parenthesized_expr_count;
        r.string_literals_qty += s.string_literal_count;
        r.numbers_qty += s.number_literal_count;
        r.assignments_qty += s.assignment_count;
        r.math_ops_qty += s.math_op_count;
        r.variables_qty += s.variable_decl_count;
        r.lambdas_qty += s.lambda_count;
        r.log_statements_qty += s.log_statement_count;
        r.max_nested_blocks = std::max(r.max_nested_blocks, static_cast<double>(s.max_nesting));
        for (const auto& inv : f.invocations)
            if (inv.receiver != "ctor") invoked.emplace(inv.name, inv.arg_count);
    };
    add_facts(c.init_facts);
    r.nosi = c.init_static_internal_call_count;
    for (const auto& m : c.methods) {
        add_facts(m.facts);
        r.wmc += cyclomatic(m);
        r.nosi += m.static_internal_call_count;
        r.total_methods += 1;
        const unsigned mod = m.modifiers;
        if (mod & java::kStatic) r.static_methods += 1;
        if (mod & java::kAbstract) r.abstract_methods += 1;
        if (mod & java::kFinal) r.final_methods += 1;
        if (mod & java::kPublic) r.public_methods += 1;
        else if (mod & java::kPrivate) r.private_methods += 1;
        else if (mod & java::kProtected) r.protected_methods += 1;
        else r.default_methods += 1;
    }
    r.visible_methods = r.total_methods - r.private_methods;
    r.rfc = static_cast<double>(c.methods.size() + invoked.size());
    for (const auto& f : c.fields) {
        r.total_fields += 1;
        if (f.modifiers & java::kProtected) r.protected_fields += 1;
        if (!(f.modifiers & (java::kPublic | java::kPrivate | java::kProtected))) r.default_fields += 1;
        if (f.modifiers & java::kFinal) r.final_fields += 1;
    }
    return r;
}

inline std::vector<ClassMetricsRow> class_metrics(const StructuralModel& model)
{
    std::vector<ClassMetricsRow> rows;
    rows.reserve(model.classes.size());
    for (std::size_t i = 0; i < model.classes.size(); ++i) rows.push_back(class_metrics(model, static_cast<int>(i)));
    return rows;
}

/// Distinct internal callers of every method, self-calls excluded. Callers
/// include constructors.
inline std::map<MethodRef, std::set<MethodRef>> caller_index(const StructuralModel& model)
{
    std::map<MethodRef, std::set<MethodRef>> callers;
    for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
        const auto& methods = model.classes[ci].methods;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const MethodRef self{static_cast<int>(ci), static_cast<int>(mi)};
            for (const auto& callee : methods[mi].resolved_calls)
                if (callee != self) callers[callee].insert(self);
        }
    }
    return callers;
}

inline std::set<MethodRef> distinct_callees(const MethodInfo& m, MethodRef self)
{
    std::set<MethodRef> out(m.resolved_calls.begin(), m.resolved_calls.end());
    out.erase(self);
    return out;
}

inline MethodMetricsRow method_metrics(const StructuralModel& model, MethodRef ref,
                                       const std::map<MethodRef, std::set<MethodRef>>& callers)
{
    const ClassInfo& c = model.classes.at(static_cast<std::size_t>(ref.cls));
    const MethodInfo& m = model.method(ref);
    if (m.is_constructor) throw InternalError("method metrics are not defined for constructors");
    MethodMetricsRow r;
    r.class_name = c.qualified_name;
    r.signature = m.signature();
    if (auto it = callers.find(ref); it != callers.end()) r.fan_in = static_cast<double>(it->second.size());
    const auto callees = distinct_callees(m, ref);
    r.fan_out = static_cast<double>(callees.size());

    std::set<MethodRef> local;
    for (const auto& t : callees)
        if (t.cls == ref.cls) local.insert(t);
    r.methods_invoked_local_qty = static_cast<double>(local.size());

    std::set<MethodRef> reached;
    std::queue<MethodRef> frontier;
    for (const auto& t : local) frontier.push(t);
    while (!frontier.empty()) {
        const MethodRef cur = frontier.front();
        frontier.pop();
        if (!reached.insert(cur).second) continue;
        for (const auto& t : model.method(cur).resolved_calls)
            if (t.cls == ref.cls && !reached.count(t)) frontier.push(t);
    }
    int indirect = 0;
    for (const auto& t : reached)
        if (t != ref && !local.count(t)) ++indirect;
    r.methods_invoked_indirect_local_qty = indirect;

    std::set<std::pair<std::string, int>> invoked;
    for (const auto& inv : m.facts.invocations)
        if (inv.receiver != "ctor") invoked.emplace(inv.name, inv.arg_count);
    r.methods_invoked_qty = static_cast<double>(invoked.size());

    const auto& s = m.facts.stats;
    r.loc = m.loc;
    r.return_qty = s.return_count;
    r.variables_qty = s.variable_decl_count;
    r.parameters_qty = static_cast<double>(m.parameters.size());
    r.loop_qty = s.loop_count;
    r.comparisons_qty = s.comparison_count;
    r.try_catch_qty = s.try_catch_count;
    r.parenthesized_qty = s.parenthesized_expr_count;
    r.assignments_qty = s.assignment_count;
    r.math_ops_qty = s.math_op_count;
    r.max_nested_blocks = s.max_nesting;
    r.lambdas_qty = s.lambda_count;
    r.unique_words_qty = s.unique_word_count;
    r.modifiers_code = m.modifiers;
    r.log_statements_qty = s.log_statement_count;
    r.wmc = cyclomatic(m);
    r.readability = readability(m);
    return r;
}

/// Rows for every non-constructor method, in class then declaration order.
inline std::vector<MethodMetricsRow> method_metrics(const StructuralModel& model)
{
    const auto callers = caller_index(model);
    std::vector<MethodMetricsRow> rows;
    for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
        const auto& methods = model.classes[ci].methods;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            if (methods[mi].is_constructor) continue;
            rows.push_back(method_metrics(model, {static_cast<int>(ci), static_cast<int>(mi)}, callers));
        }
    }
    return rows;
}

inline std::string classes_csv(const std::vector<ClassMetricsRow>& rows)
{
    std::vector<std::string> header = {"qualified_name", "kind"};
    const auto& cols = ClassMetricsRow::numeric_columns();
    header.insert(header.end(), cols.begin(), cols.end());
    std::string out = csv::join_row(header);
    for (const auto& r : rows) {
        std::vector<std::string> cells = {r.qualified_name, r.kind};
        for (double v : r.numeric_values()) cells.push_back(format_number(v));
        out += csv::join_row(cells);
    }
    return out;
}

inline std::string methods_csv(const std::vector<MethodMetricsRow>& rows)
{
    std::vector<std::string> header = {"class", "signature"};
    const auto& cols = MethodMetricsRow::numeric_columns();
    header.insert(header.end(), cols.begin(), cols.end());
    std::string out = csv::join_row(header);
    for (const auto& r : rows) {
        std::vector<std::string> cells = {r.class_name, r.signature};
        for (double v : r.numeric_values()) cells.push_back(format_number(v));
        out += csv::join_row(cells);
    }
    return out;
}

}  // namespace apppop::metrics

#endif  // APPPOP_METRICS_CODE_HPP
