#ifndef APPPOP_METRICS_SYSTEM_HPP
#define APPPOP_METRICS_SYSTEM_HPP

// Architecture-level metrics over dependency graphs. Edge u->v means u
// depends on v.

#include <apppop/java/resolve.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace apppop::metrics {

using Adjacency = std::vector<std::vector<int>>;

/// Strongly connected components (iterative Tarjan). Each component is
/// sorted; components are ordered by their smallest node.
inline std::vector<std::vector<int>> strongly_connected_components(const Adjacency& adj)
{
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(adj.size(), -1), low(adj.size(), 0);
    std::vector<char> on_stack(adj.size(), 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;
    struct Frame {
        int node;
        std::size_t next;
    };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            Frame& f = call.back();
            const auto v = static_cast<std::size_t>(f.node);
            if (f.next == 0 && index[v] < 0) {
                index[v] = low[v] = counter++;
                stack.push_back(f.node);
                on_stack[v] = 1;
            }
            if (f.next < adj[v].size()) {
                const int w = adj[v][f.next++];
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] < 0) call.push_back({w, 0});
                else if (on_stack[wi]) low[v] = std::min(low[v], index[wi]);
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp.push_back(w);
                } while (w != f.node);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
            const int done = f.node;
            call.pop_back();
            if (!call.empty()) {
                const auto parent = static_cast<std::size_t>(call.back().node);
                low[parent] = std::min(low[parent], low[static_cast<std::size_t>(done)]);
            }
        }
    }
    std::sort(comps.begin(), comps.end());
    return comps;
}

/// Reflexive-transitive closure, one BFS per node.
inline std::vector<std::vector<char>> reachability(const Adjacency& adj)
{
    const std::size_t n = adj.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    std::vector<int> queue;
    for (std::size_t s = 0; s < n; ++s) {
        auto& row = reach[s];
        row[s] = 1;
        queue.assign(1, static_cast<int>(s));
        for (std::size_t head = 0; head < queue.size(); ++head)
            for (int w : adj[static_cast<std::size_t>(queue[head])])
                if (!row[static_cast<std::size_t>(w)]) {
                    row[static_cast<std::size_t>(w)] = 1;
                    queue.push_back(w);
                }
    }
    return reach;
}

/// Fraction of ordered pairs (i, j), i = j included, with j reachable from i.
inline double propagation_cost(const Adjacency& adj)
{
    if (adj.empty()) throw DataError("empty system");
    const auto reach = reachability(adj);
    double pairs = 0;
    for (const auto& row : reach) pairs += static_cast<double>(std::count(row.begin(), row.end(), 1));
    const double n = static_cast<double>(adj.size());
    return pairs / (n * n);
}

/// SCC-based decoupling level: modules larger than t = max(1, ceil(0.05 N))
/// are penalized by t/|m|.
inline double decoupling_level(const Adjacency& adj)
{
    if (adj.empty()) throw DataError("empty system");
    const double n = static_cast<double>(adj.size());
    const double t = std::max(1.0, std::ceil(0.05 * n));
    double dl = 0;
    for (const auto& m : strongly_connected_components(adj)) {
        const double s = static_cast<double>(m.size());
        dl += (s / n) * (s <= t ? 1.0 : t / s);
    }
    return dl;
}

/// Fraction of nodes nothing depends on.
inline double independence_level(const Adjacency& adj)
{
    if (adj.empty()) throw DataError("empty system");
    std::vector<char> has_dependent(adj.size(), 0);
    for (const auto& out : adj)
        for (int w : out) has_dependent[static_cast<std::size_t>(w)] = 1;
    const auto free = std::count(has_dependent.begin(), has_dependent.end(), 0);
    return static_cast<double>(free) / static_cast<double>(adj.size());
}

/// Nodes with neither incoming nor outgoing edges.
inline std::vector<int> isolated_nodes(const Adjacency& adj)
{
    std::vector<char> touched(adj.size(), 0);
    for (std::size_t u = 0; u < adj.size(); ++u)
        for (int w : adj[u]) {
            touched[u] = 1;
            touched[static_cast<std::size_t>(w)] = 1;
        }
    std::vector<int> out;
    for (std::size_t u = 0; u < adj.size(); ++u)
        if (!touched[u]) out.push_back(static_cast<int>(u));
    return out;
}

/// Induced subgraph on `keep` (sorted), renumbered.
inline Adjacency induced_subgraph(const Adjacency& adj, const std::vector<int>& keep)
{
    std::vector<int> map(adj.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) map[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
    Adjacency sub(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (int w : adj[static_cast<std::size_t>(keep[i])])
            if (map[static_cast<std::size_t>(w)] >= 0) sub[i].push_back(map[static_cast<std::size_t>(w)]);
    return sub;
}

inline Adjacency without_isolated(const Adjacency& adj)
{
    const auto iso = isolated_nodes(adj);
    std::vector<int> keep;
    std::size_t k = 0;
    for (int u = 0; u < static_cast<int>(adj.size()); ++u) {
        if (k < iso.size() && iso[k] == u) {
            ++k;
            continue;
        }
        keep.push_back(u);
    }
    return induced_subgraph(adj, keep);
}

struct CycleGroups {
    int count = 0;
    int node_count = 0;
    std::vector<std::vector<int>> members;
};

/// SCCs with at least two nodes.
inline CycleGroups cliques(const Adjacency& adj)
{
    CycleGroups out;
    for (auto& comp : strongly_connected_components(adj)) {
        if (comp.size() < 2) continue;
        ++out.count;
        out.node_count += static_cast<int>(comp.size());
        out.members.push_back(std::move(comp));
    }
    return out;
}

struct InstanceCount {
    int count = 0;
    std::set<int> files;

    int file_count() const { return static_cast<int>(files.size()); }
};

/// Inheritance smells over a class graph: a parent depending on one of its
/// direct children, or a third class depending on both a parent and one of
/// its direct children. One instance per (parent, child) or
/// (client, parent, child).
inline InstanceCount unhealthy_inheritance(const java::StructuralModel& model, const java::DependencyGraph& class_graph)
{
    if (class_graph.granularity != java::Granularity::cls)
        throw InternalError("unhealthy_inheritance needs a class graph");
    const auto adj = class_graph.adjacency();
    auto depends = [&](int u, int v) {
        const auto& out = adj[static_cast<std::size_t>(u)];
        return std::binary_search(out.begin(), out.end(), v);
    };
    auto file_of = [&](int c) { return model.classes[static_cast<std::size_t>(c)].unit; };
    InstanceCount result;
    std::set<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        const auto& c = model.classes[i];
        if (c.superclass_index) pairs.emplace(*c.superclass_index, static_cast<int>(i));
        for (int p : c.interface_indices) pairs.emplace(p, static_cast<int>(i));
    }
    for (const auto& [parent, child] : pairs) {
        if (parent == child) continue;
        if (depends(parent, child)) {
            ++result.count;
            result.files.insert({file_of(parent), file_of(child)});
        }
        for (int client = 0; client < static_cast<int>(adj.size()); ++client) {
            if (client == parent || client == child) continue;
            if (depends(client, parent) && depends(client, child)) {
                ++result.count;
                result.files.insert({file_of(client), file_of(parent), file_of(child)});
            }
        }
    }
    return result;
}

/// Package-level SCCs of size >= 2; files are those whose package is in one.
inline InstanceCount package_cycles(const java::StructuralModel& model, const java::DependencyGraph& package_graph)
{
    if (package_graph.granularity != java::Granularity::package)
        throw InternalError("package_cycles needs a package graph");
    InstanceCount result;
    const auto groups = cliques(package_graph.adjacency());
    result.count = groups.count;
    std::set<std::string> cyclic;
    for (const auto& m : groups.members)
        for (int p : m) cyclic.insert(package_graph.nodes[static_cast<std::size_t>(p)]);
    for (std::size_t u = 0; u < model.units.size(); ++u)
        if (cyclic.count(java::package_label(model.units[u].package))) result.files.insert(static_cast<int>(u));
    return result;
}

struct SystemMetrics {
    double num_files = 0;
    double propagation_cost = 0;
    double propagation_cost_excl_isolated = 0;
    double isolated_file_count = 0;
    double decoupling_level = 0;
    double decoupling_level_excl_isolated = 0;
    double independence_level = 0;
    double clique_count = 0, clique_file_count = 0;
    double unhealthy_inheritance_count = 0, unhealthy_inheritance_file_count = 0;
    double package_cycle_count = 0, package_cycle_file_count = 0;
    double total_antipattern_count = 0, total_antipattern_files = 0;

    static const std::vector<std::string>& columns()
    {
        static const std::vector<std::string> kColumns = {"num_files",
                                                          "propagation_cost",
                                                          "propagation_cost_excl_isolated",
                                                          "isolated_file_count",
                                                          "decoupling_level",
                                                          "decoupling_level_excl_isolated",
                                                          "independence_level",
                                                          "clique_count",
                                                          "clique_file_count",
                                                          "unhealthy_inheritance_count",
                                                          "unhealthy_inheritance_file_count",
                                                          "package_cycle_count",
                                                          "package_cycle_file_count",
                                                          "total_antipattern_count",
                                                          "total_antipattern_files"};
        return kColumns;
    }

    std::vector<double> values() const
    {
        return {num_files,
                propagation_cost,
                propagation_cost_excl_isolated,
                isolated_file_count,
                decoupling_level,
                decoupling_level_excl_isolated,
                independence_level,
                clique_count,
                clique_file_count,
                unhealthy_inheritance_count,
                unhealthy_inheritance_file_count,
                package_cycle_count,
                package_cycle_file_count,
                total_antipattern_count,
                total_antipattern_files};
    }
};

/// All system metrics of one app. When every file is isolated the
/// excl-isolated variants are 0.
inline SystemMetrics system_metrics(const java::StructuralModel& model, const java::DependencyGraph& file_graph,
                                    const java::DependencyGraph& class_graph,
                                    const java::DependencyGraph& package_graph)
{
    if (file_graph.granularity != java::Granularity::file) throw InternalError("system_metrics needs a file graph");
    const auto adj = file_graph.adjacency();
    SystemMetrics s;
    s.num_files = static_cast<double>(adj.size());
    s.propagation_cost = propagation_cost(adj);
    s.decoupling_level = decoupling_level(adj);
    s.independence_level = independence_level(adj);
    s.isolated_file_count = static_cast<double>(isolated_nodes(adj).size());
    const auto connected = without_isolated(adj);
    if (!connected.empty()) {
        s.propagation_cost_excl_isolated = propagation_cost(connected);
        s.decoupling_level_excl_isolated = decoupling_level(connected);
    }
    const auto clique_groups = cliques(adj);
    s.clique_count = clique_groups.count;
    s.clique_file_count = clique_groups.node_count;
    const auto unhealthy = unhealthy_inheritance(model, class_graph);
    s.unhealthy_inheritance_count = unhealthy.count;
    s.unhealthy_inheritance_file_count = unhealthy.file_count();
    const auto pkg = package_cycles(model, package_graph);
    s.package_cycle_count = pkg.count;
    s.package_cycle_file_count = pkg.file_count();
    s.total_antipattern_count = s.clique_count + s.unhealthy_inheritance_count + s.package_cycle_count;
    std::set<int> files = unhealthy.files;
    files.insert(pkg.files.begin(), pkg.files.end());
    for (const auto& m : clique_groups.members) files.insert(m.begin(), m.end());
    s.total_antipattern_files = static_cast<double>(files.size());
    return s;
}

inline SystemMetrics system_metrics(const java::StructuralModel& model)
{
    return system_metrics(model, java::build_graph(model, java::Granularity::file),
                          java::build_graph(model, java::Granularity::cls),
                          java::build_graph(model, java::Granularity::package));
}

inline std::string system_metrics_csv(const std::vector<std::pair<std::string, SystemMetrics>>& rows)
{
    std::vector<std::string> header = {"app_id"};
    header.insert(header.end(), SystemMetrics::columns().begin(), SystemMetrics::columns().end());
    std::string out = csv::join_row(header);
    for (const auto& [id, s] : rows) {
        std::vector<std::string> cells = {id};
        for (double v : s.values()) cells.push_back(format_number(v));
        out += csv::join_row(cells);
    }
    return out;
}

}  // namespace apppop::metrics

#endif  // APPPOP_METRICS_SYSTEM_HPP
