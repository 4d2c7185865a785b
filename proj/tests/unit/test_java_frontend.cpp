#include <apppop/java/resolve.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace apppop::java;

namespace {

StructuralModel model_of(std::vector<std::pair<std::string, std::string>> files)
{
    std::vector<SourceUnit> units;
    for (const auto& [path, src] : files) units.push_back(parse_source(src, path));
    auto model = build_model(std::move(units));
    resolve(model);
    return model;
}

const ClassInfo& find_class(const StructuralModel& m, const std::string& qname)
{
    auto it = m.by_qualified_name.find(qname);
    if (it == m.by_qualified_name.end()) throw std::runtime_error("no class " + qname);
    return m.classes[static_cast<std::size_t>(it->second)];
}

bool has_edge(const DependencyGraph& g, const std::string& from, const std::string& to, EdgeKind kind)
{
    auto idx = [&](const std::string& n) {
        return static_cast<int>(std::find(g.nodes.begin(), g.nodes.end(), n) - g.nodes.begin());
    };
    return std::count(g.edges.begin(), g.edges.end(), Edge{idx(from), idx(to), kind}) > 0;
}

}  // namespace

TEST(Parser, EmptyClass)
{
    auto u = parse_source("package a; public class Empty {}", "Empty.java");
    ASSERT_TRUE(u.parsed());
    ASSERT_EQ(u.classes.size(), 1u);
    EXPECT_EQ(u.classes[0].qualified_name, "a.Empty");
    EXPECT_TRUE(u.classes[0].methods.empty());
    EXPECT_GE(u.classes[0].loc, 1);
}

TEST(Parser, AnonymousListener)
{
    const char* src = R"(package ui;
import android.view.View;
public class Screen {
    void setup(View button) {
        button.setOnClickListener(new View.OnClickListener() {
            @Override public void onClick(View v) { Log.d("x", "clicked"); }
        });
    }
}
)";
    auto u = parse_source(src, "Screen.java");
    ASSERT_TRUE(u.parsed()) << u.error->what();
    ASSERT_EQ(u.classes.size(), 2u);
    EXPECT_EQ(u.classes[0].kind, ClassKind::normal);
    EXPECT_EQ(u.classes[1].kind, ClassKind::anonymous);
    EXPECT_EQ(u.classes[1].enclosing, 0);
    EXPECT_EQ(u.classes[0].anonymous_classes, 1);
    ASSERT_EQ(u.classes[1].methods.size(), 1u);
    EXPECT_EQ(u.classes[1].methods[0].facts.stats.log_statement_count, 1);
}

TEST(Parser, UnbalancedBracesReportLine)
{
    auto u = parse_source("class A {\n  void f() {\n    int x = 1;\n", "A.java");
    ASSERT_FALSE(u.parsed());
    EXPECT_GE(u.error->line(), 1);
}

TEST(Parser, Idempotent)
{
    const char* src = "package p; class A { int x; int f(int a) { for (int i = 0; i < a; i++) { x += i; } return x; } }";
    auto a = parse_source(src, "A.java");
    auto b = parse_source(src, "A.java");
    EXPECT_EQ(a.classes, b.classes);
}

TEST(Parser, StatementCounters)
{
    const char* src = R"(class A {
    int f(int a, int b) {
        int c = (a + b) * 2;
        if (a > b && b != 0) {
            while (c < 10) { c++; }
        }
        try { g(); } catch (Exception e) { }
        String s = "hi";
        Runnable r = () -> g();
        return c > 3 ? c : -1;
    }
    void g() {}
}
)";
    auto u = parse_source(src, "A.java");
    ASSERT_TRUE(u.parsed()) << u.error->what();
    const auto& st = u.classes[0].methods[0].facts.stats;
    EXPECT_EQ(st.loop_count, 1);
    EXPECT_EQ(st.if_count, 1);
    EXPECT_EQ(st.logical_op_count, 1);
    EXPECT_EQ(st.ternary_count, 1);
    EXPECT_EQ(st.comparison_count, 4);
    EXPECT_EQ(st.try_catch_count, 1);
    EXPECT_EQ(st.catch_count, 1);
    EXPECT_EQ(st.return_count, 1);
    EXPECT_EQ(st.lambda_count, 1);
    EXPECT_EQ(st.string_literal_count, 1);
    EXPECT_EQ(st.variable_decl_count, 3);
    EXPECT_EQ(st.max_nesting, 2);
    EXPECT_EQ(u.classes[0].methods[0].facts.empty_catch_count, 1);
}

TEST(Resolve, SamePackageEdge)
{
    auto m = model_of({{"p/A.java", "package p; class A { B b; }"}, {"p/B.java", "package p; class B {}"}});
    auto g = build_graph(m, Granularity::cls);
    EXPECT_TRUE(has_edge(g, "p.A", "p.B", EdgeKind::reference));
    EXPECT_EQ(g.edges.size(), 1u);
}

TEST(Resolve, StdlibIsExternal)
{
    auto m = model_of({{"p/A.java", "package p; import java.util.List; class A { List<String> xs; }"}});
    EXPECT_TRUE(find_class(m, "p.A").referenced_classes.empty());
}

TEST(Resolve, AmbiguousSimpleNameIsExternal)
{
    auto m = model_of({{"a/Util.java", "package a; public class Util {}"},
                       {"b/Util.java", "package b; public class Util {}"},
                       {"c/Client.java", "package c; class Client { Util u; }"}});
    EXPECT_TRUE(find_class(m, "c.Client").referenced_classes.empty());
}

TEST(Resolve, ExplicitImportWins)
{
    auto m = model_of({{"a/Util.java", "package a; public class Util {}"},
                       {"b/Util.java", "package b; public class Util {}"},
                       {"c/Client.java", "package c; import b.Util; class Client { Util u; }"}});
    const auto& c = find_class(m, "c.Client");
    ASSERT_EQ(c.referenced_classes.size(), 1u);
    EXPECT_EQ(m.classes[static_cast<std::size_t>(*c.referenced_classes.begin())].qualified_name, "b.Util");
}

TEST(Graph, InheritEdgeAndProjection)
{
    auto m = model_of({{"p/A.java", "package p; class A extends B { void f() { new C().g(); } }"},
                       {"p/B.java", "package p; class B { void h(C c) {} }"},
                       {"p/C.java", "package p; class C { void g() {} A a; }"}});
    auto cg = build_graph(m, Granularity::cls);
    EXPECT_TRUE(has_edge(cg, "p.A", "p.B", EdgeKind::inherit));
    EXPECT_TRUE(has_edge(cg, "p.A", "p.C", EdgeKind::invoke));
    auto pg = build_graph(m, Granularity::package);
    EXPECT_EQ(pg.nodes.size(), 1u);
    EXPECT_TRUE(pg.edges.empty());
    auto fg = build_graph(m, Granularity::file);
    EXPECT_EQ(fg.nodes.size(), 3u);
    EXPECT_EQ(fg.edges.size(), cg.edges.size());
}

TEST(Graph, Singleton)
{
    auto m = model_of({{"A.java", "class A { void f() { f(); } }"}});
    auto g = build_graph(m, Granularity::cls);
    EXPECT_EQ(g.nodes.size(), 1u);
    EXPECT_TRUE(g.edges.empty());
}
