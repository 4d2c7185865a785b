#ifndef APPPOP_JAVA_RESOLVE_HPP
#define APPPOP_JAVA_RESOLVE_HPP

// Corpus-wide name resolution and dependency graphs. Resolution is
// reference-level only (no type inference); anything not found in the corpus
// is treated as external and produces no edge.

#include <apppop/java/model.hpp>
#include <apppop/java/parser.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace apppop::java {

/// Merges parsed units into one model. Unparseable units are recorded and
/// contribute no classes.
inline StructuralModel build_model(std::vector<SourceUnit> units)
{
    StructuralModel model;
    for (auto& u : units) {
        if (!u.parsed()) {
            model.unparseable.push_back({u.path, u.error->line(), u.error->what()});
            continue;
        }
        const int unit_index = static_cast<int>(model.units.size());
        const int offset = static_cast<int>(model.classes.size());
        for (auto& c : u.classes) {
            c.unit = unit_index;
            if (c.enclosing >= 0) c.enclosing += offset;
            model.classes.push_back(std::move(c));
        }
        u.classes.clear();
        model.units.push_back(std::move(u));
    }
    return model;
}

namespace detail {

class Resolver {
public:
    /// Expects the name indices of `m` to be populated.
    explicit Resolver(const StructuralModel& m) : m_(m)
    {
        for (std::size_t i = 0; i < m_.classes.size(); ++i) {
            const auto& c = m_.classes[i];
            if (c.enclosing >= 0 && c.kind != ClassKind::anonymous)
                nested_[{c.enclosing, c.simple_name}] = static_cast<int>(i);
        }
    }

    /// Priority: same file (enclosing scopes first) -> same package ->
    /// explicit import -> wildcard import -> unique simple name in corpus.
    std::optional<int> resolve_type(std::string name, int from) const
    {
        while (name.size() > 2 && name.compare(name.size() - 2, 2, "[]") == 0) name.resize(name.size() - 2);
        if (name.empty() || is_primitive_type(name) || name == "var") return std::nullopt;
        if (name.find('.') != std::string::npos) {
            if (auto it = m_.by_qualified_name.find(name); it != m_.by_qualified_name.end()) return it->second;
            const auto dot = name.find('.');
            auto outer = resolve_simple(name.substr(0, dot), from);
            if (!outer) return std::nullopt;
            std::string rest = name.substr(dot + 1);
            int cur = *outer;
            while (!rest.empty()) {
                const auto d = rest.find('.');
                const std::string seg = rest.substr(0, d);
                auto it = nested_.find({cur, seg});
                if (it == nested_.end()) return std::nullopt;
                cur = it->second;
                rest = d == std::string::npos ? "" : rest.substr(d + 1);
            }
            return cur;
        }
        return resolve_simple(name, from);
    }

    std::optional<int> resolve_simple(const std::string& name, int from) const
    {
        auto key = std::make_pair(from, name);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        auto result = resolve_simple_uncached(name, from);
        cache_.emplace(key, result);
        return result;
    }

    std::optional<int> resolve_simple_uncached(const std::string& name, int from) const
    {
        const ClassInfo& c = m_.classes[static_cast<std::size_t>(from)];
        // 1. same file: the class itself, its enclosing scopes and their members
        for (int e = from; e >= 0; e = m_.classes[static_cast<std::size_t>(e)].enclosing) {
            const auto& ec = m_.classes[static_cast<std::size_t>(e)];
            if (ec.kind != ClassKind::anonymous && ec.simple_name == name) return e;
            if (auto it = nested_.find({e, name}); it != nested_.end()) return it->second;
        }
        const auto simple = m_.by_simple_name.find(name);
        if (simple != m_.by_simple_name.end()) {
            std::vector<int> same_unit;
            for (int k : simple->second)
                if (m_.classes[static_cast<std::size_t>(k)].unit == c.unit) same_unit.push_back(k);
            if (same_unit.size() == 1) return same_unit.front();
            // 2. same package, top-level types
            std::vector<int> same_pkg;
            for (int k : simple->second) {
                const auto& kc = m_.classes[static_cast<std::size_t>(k)];
                if (kc.enclosing < 0 && kc.package == c.package) same_pkg.push_back(k);
            }
            if (same_pkg.size() == 1) return same_pkg.front();
        }
        const auto& unit = m_.units[static_cast<std::size_t>(c.unit)];
        // 3. explicit single-type import
        for (const auto& imp : unit.imports) {
            if (imp.wildcard || imp.is_static) continue;
            const auto dot = imp.name.rfind('.');
            const std::string last = dot == std::string::npos ? imp.name : imp.name.substr(dot + 1);
            if (last != name) continue;
            auto it = m_.by_qualified_name.find(imp.name);
            if (it != m_.by_qualified_name.end()) return it->second;
            return std::nullopt;  // explicitly imported from outside the corpus
        }
        // 4. on-demand imports
        std::vector<int> wildcard_hits;
        for (const auto& imp : unit.imports) {
            if (!imp.wildcard || imp.is_static) continue;
            auto it = m_.by_qualified_name.find(imp.name + "." + name);
            if (it != m_.by_qualified_name.end()) wildcard_hits.push_back(it->second);
        }
        if (wildcard_hits.size() == 1) return wildcard_hits.front();
        if (wildcard_hits.size() > 1) return std::nullopt;
        // 5. unique simple name anywhere in the corpus
        if (simple != m_.by_simple_name.end() && simple->second.size() == 1) return simple->second.front();
        return std::nullopt;
    }

    /// Superclass chain starting at `c` (inclusive), internal classes only.
    std::vector<int> class_chain(int c) const
    {
        std::vector<int> chain;
        std::set<int> seen;
        for (std::optional<int> cur = c; cur && seen.insert(*cur).second;
             cur = m_.classes[static_cast<std::size_t>(*cur)].superclass_index)
            chain.push_back(*cur);
        return chain;
    }

    std::optional<MethodRef> find_method(int cls, const std::string& name, int arity) const
    {
        for (int k : class_chain(cls)) {
            const auto& methods = m_.classes[static_cast<std::size_t>(k)].methods;
            for (std::size_t j = 0; j < methods.size(); ++j) {
                const auto& mj = methods[j];
                if (mj.is_constructor || mj.name != name) continue;
                if (static_cast<int>(mj.parameters.size()) == arity) return MethodRef{k, static_cast<int>(j)};
            }
            // varargs
            for (std::size_t j = 0; j < methods.size(); ++j) {
                const auto& mj = methods[j];
                if (mj.is_constructor || mj.name != name || mj.parameters.empty()) continue;
                const auto& last = mj.parameters.back().type;
                const bool varargs = last.size() > 2 && last.compare(last.size() - 2, 2, "[]") == 0;
                if (varargs && arity >= static_cast<int>(mj.parameters.size()) - 1)
                    return MethodRef{k, static_cast<int>(j)};
            }
        }
        return std::nullopt;
    }

    std::optional<std::string> field_type(int cls, const std::string& name) const
    {
        for (int e = cls; e >= 0; e = m_.classes[static_cast<std::size_t>(e)].enclosing) {
            for (int k : class_chain(e))
                for (const auto& f : m_.classes[static_cast<std::size_t>(k)].fields)
                    if (f.name == name) return f.type;
        }
        return std::nullopt;
    }

    std::optional<MethodRef> resolve_call(int cls, const CodeFacts& facts, const Invocation& inv) const
    {
        const auto& c = m_.classes[static_cast<std::size_t>(cls)];
        if (inv.receiver == "ctor" || inv.receiver == "?") return std::nullopt;
        if (inv.receiver.empty()) {
            for (int e = cls; e >= 0; e = m_.classes[static_cast<std::size_t>(e)].enclosing)
                if (auto r = find_method(e, inv.name, inv.arg_count)) return r;
            // static imports of corpus methods
            const auto& unit = m_.units[static_cast<std::size_t>(c.unit)];
            for (const auto& imp : unit.imports) {
                if (!imp.is_static) continue;
                std::string owner = imp.name;
                if (!imp.wildcard) {
                    const auto dot = owner.rfind('.');
                    if (dot == std::string::npos || owner.substr(dot + 1) != inv.name) continue;
                    owner.resize(dot);
                }
                if (auto it = m_.by_qualified_name.find(owner); it != m_.by_qualified_name.end())
                    if (auto r = find_method(it->second, inv.name, inv.arg_count)) return r;
            }
            return std::nullopt;
        }
        if (inv.receiver == "this") return find_method(cls, inv.name, inv.arg_count);
        if (inv.receiver == "super") {
            if (!c.superclass_index) return std::nullopt;
            return find_method(*c.superclass_index, inv.name, inv.arg_count);
        }
        std::optional<int> target;
        if (auto it = facts.local_types.find(inv.receiver); it != facts.local_types.end()) {
            if (it->second.empty()) return std::nullopt;
            target = resolve_type(it->second, cls);
        } else if (auto ft = field_type(cls, inv.receiver)) {
            target = resolve_type(*ft, cls);
        } else {
            target = resolve_type(inv.receiver, cls);
        }
        if (!target) return std::nullopt;
        return find_method(*target, inv.name, inv.arg_count);
    }

    void run(StructuralModel& model)
    {
        auto& m_ = model;
        // Supertypes first: method lookup walks the superclass chain.
        for (std::size_t i = 0; i < m_.classes.size(); ++i) {
            auto& c = m_.classes[i];
            const int ci = static_cast<int>(i);
            c.superclass_index.reset();
            c.interface_indices.clear();
            if (c.superclass) {
                if (auto s = resolve_type(c.superclass->name, c.enclosing >= 0 && c.kind == ClassKind::anonymous
                                                                  ? c.enclosing
                                                                  : ci);
                    s && *s != ci) {
                    if (m_.classes[static_cast<std::size_t>(*s)].kind == ClassKind::interface_decl)
                        c.interface_indices.push_back(*s);
                    else c.superclass_index = *s;
                }
            }
            for (const auto& itf : c.interfaces)
                if (auto s = resolve_type(itf.name, ci); s && *s != ci) c.interface_indices.push_back(*s);
        }
        for (std::size_t i = 0; i < m_.classes.size(); ++i) {
            auto& c = m_.classes[i];
            const int ci = static_cast<int>(i);
            std::set<int> refs;
            auto add = [&](const std::vector<TypeRef>& v) {
                for (const auto& r : v)
                    if (auto t = resolve_type(r.name, ci); t && *t != ci) refs.insert(*t);
            };
            if (c.superclass_index) refs.insert(*c.superclass_index);
            for (int k : c.interface_indices) refs.insert(k);
            add(c.member_refs);
            add(c.init_facts.type_refs);
            add(c.init_facts.instantiations);
            c.init_resolved_calls.clear();
            c.init_static_internal_call_count = 0;
            for (const auto& inv : c.init_facts.invocations) {
                if (auto r = resolve_call(ci, c.init_facts, inv)) {
                    c.init_resolved_calls.push_back(*r);
                    if (m_.method(*r).modifiers & kStatic) ++c.init_static_internal_call_count;
                    if (r->cls != ci) refs.insert(r->cls);
                }
            }
            for (auto& m : c.methods) {
                add(m.signature_refs);
                add(m.facts.type_refs);
                add(m.facts.instantiations);
                m.resolved_calls.clear();
                m.static_internal_call_count = 0;
                for (const auto& inv : m.facts.invocations) {
                    if (auto r = resolve_call(ci, m.facts, inv)) {
                        m.resolved_calls.push_back(*r);
                        if (m_.method(*r).modifiers & kStatic) ++m.static_internal_call_count;
                        if (r->cls != ci) refs.insert(r->cls);
                    }
                }
            }
            refs.erase(ci);
            c.referenced_classes = std::move(refs);
        }
        m_.resolved = true;
    }

private:
    const StructuralModel& m_;
    std::map<std::pair<int, std::string>, int> nested_;
    mutable std::map<std::pair<int, std::string>, std::optional<int>> cache_;
};

}  // namespace detail

/// Resolves supertypes, type references and call targets in place.
inline StructuralModel& resolve(StructuralModel& model)
{
    model.by_qualified_name.clear();
    model.by_simple_name.clear();
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        const auto& c = model.classes[i];
        model.by_qualified_name.emplace(c.qualified_name, static_cast<int>(i));
        if (c.kind != ClassKind::anonymous) model.by_simple_name[c.simple_name].push_back(static_cast<int>(i));
    }
    detail::Resolver(model).run(model);
    return model;
}

/// Resolves a type name as seen from class `from`; nullopt means external.
inline std::optional<int> resolve_type_name(const StructuralModel& model, const std::string& name, int from)
{
    return detail::Resolver(model).resolve_type(name, from);
}

// ---------------------------------------------------------------------------
// Dependency graphs

enum class Granularity { file, cls, package };
enum class EdgeKind { inherit, invoke, reference };

inline const char* to_string(EdgeKind k)
{
    switch (k) {
        case EdgeKind::inherit: return "inherit";
        case EdgeKind::invoke: return "invoke";
        case EdgeKind::reference: return "reference";
    }
    return "?";
}

struct Edge {
    int from = 0;
    int to = 0;
    EdgeKind kind = EdgeKind::reference;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct DependencyGraph {
    Granularity granularity = Granularity::cls;
    std::vector<std::string> nodes;
    std::vector<Edge> edges;  // sorted, unique

    std::size_t size() const { return nodes.size(); }

    /// Adjacency without kinds, deduplicated.
    std::vector<std::vector<int>> adjacency() const
    {
        std::vector<std::vector<int>> adj(nodes.size());
        for (const auto& e : edges) adj[static_cast<std::size_t>(e.from)].push_back(e.to);
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }

    std::string to_csv() const
    {
        std::string out = csv::join_row({"from", "to", "kind"});
        for (const auto& e : edges)
            out += csv::join_row({nodes[static_cast<std::size_t>(e.from)], nodes[static_cast<std::size_t>(e.to)],
                                  to_string(e.kind)});
        return out;
    }
};

inline std::string package_label(const std::string& pkg) { return pkg.empty() ? "(default)" : pkg; }

/// Edge u->v iff u inherits from, invokes a member of, or references a type
/// declared in v. File and package graphs project the class graph and drop
/// self-edges.
inline DependencyGraph build_graph(const StructuralModel& model, Granularity granularity)
{
    if (!model.resolved) throw InternalError("build_graph requires a resolved model");
    std::set<Edge> class_edges;
    const detail::Resolver resolver(model);
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        const auto& c = model.classes[i];
        const int u = static_cast<int>(i);
        std::set<int> inherit, invoke;
        if (c.superclass_index) inherit.insert(*c.superclass_index);
        for (int k : c.interface_indices) inherit.insert(k);
        for (const auto& r : c.init_resolved_calls) invoke.insert(r.cls);
        for (const auto& m : c.methods)
            for (const auto& r : m.resolved_calls) invoke.insert(r.cls);
        auto add_instantiations = [&](const CodeFacts& f) {
            for (const auto& t : f.instantiations)
                if (auto v = resolver.resolve_type(t.name, u)) invoke.insert(*v);
        };
        add_instantiations(c.init_facts);
        for (const auto& m : c.methods) add_instantiations(m.facts);
        for (int v : inherit)
            if (v != u) class_edges.insert({u, v, EdgeKind::inherit});
        for (int v : invoke)
            if (v != u) class_edges.insert({u, v, EdgeKind::invoke});
        for (int v : c.referenced_classes)
            if (v != u && !inherit.count(v) && !invoke.count(v)) class_edges.insert({u, v, EdgeKind::reference});
    }

    DependencyGraph g;
    g.granularity = granularity;
    if (granularity == Granularity::cls) {
        for (const auto& c : model.classes) g.nodes.push_back(c.qualified_name);
        g.edges.assign(class_edges.begin(), class_edges.end());
        return g;
    }
    std::vector<int> node_of(model.classes.size());
    if (granularity == Granularity::file) {
        for (const auto& u : model.units) g.nodes.push_back(u.path);
        for (std::size_t i = 0; i < model.classes.size(); ++i) node_of[i] = model.classes[i].unit;
    } else {
        std::set<std::string> pkgs;
        for (const auto& u : model.units) pkgs.insert(package_label(u.package));
        g.nodes.assign(pkgs.begin(), pkgs.end());
        for (std::size_t i = 0; i < model.classes.size(); ++i) {
            const auto& pkg = package_label(model.units[static_cast<std::size_t>(model.classes[i].unit)].package);
            node_of[i] = static_cast<int>(std::lower_bound(g.nodes.begin(), g.nodes.end(), pkg) - g.nodes.begin());
        }
    }
    std::set<Edge> projected;
    for (const auto& e : class_edges) {
        const int a = node_of[static_cast<std::size_t>(e.from)];
        const int b = node_of[static_cast<std::size_t>(e.to)];
        if (a != b) projected.insert({a, b, e.kind});
    }
    g.edges.assign(projected.begin(), projected.end());
    return g;
}

/// Parses, merges and resolves a list of files.
inline StructuralModel load_model(const std::vector<std::string>& paths, int jobs = 1)
{
    std::vector<SourceUnit> units(paths.size());
    parallel_for(paths.size(), jobs, [&](std::size_t i) { units[i] = parse_unit(paths[i]); });
    StructuralModel model = build_model(std::move(units));
    resolve(model);
    return model;
}

}  // namespace apppop::java

#endif  // APPPOP_JAVA_RESOLVE_HPP
