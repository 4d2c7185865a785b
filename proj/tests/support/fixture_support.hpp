#ifndef APPPOP_TESTS_FIXTURE_SUPPORT_HPP
#define APPPOP_TESTS_FIXTURE_SUPPORT_HPP

#include <apppop/java/resolve.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

inline std::filesystem::path app_root() { return std::filesystem::path(APPPOP_FIXTURES) / "apps" / "fixture_app"; }

inline std::vector<std::string> java_files(const std::filesystem::path& root)
{
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".java") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

inline apppop::java::StructuralModel load_app() { return apppop::java::load_model(java_files(app_root())); }

inline int class_index(const apppop::java::StructuralModel& m, const std::string& qname)
{
    return m.by_qualified_name.at(qname);
}

}  // namespace fixture

#endif
