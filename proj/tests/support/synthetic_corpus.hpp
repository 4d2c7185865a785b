#ifndef APPPOP_TESTS_SYNTHETIC_CORPUS_HPP
#define APPPOP_TESTS_SYNTHETIC_CORPUS_HPP

// Writes a small corpus of generated Android-style apps: app.json, an
// AndroidManifest.xml and a handful of Java classes whose size and
// complexity vary with the seed.

#include <apppop/common.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace testing_support {

struct SyntheticCorpusOptions {
    int apps = 12;
    std::uint64_t seed = 1;
    bool with_rejects = true;  // one app too young, one with too few classes
};

inline std::string java_class(const std::string& package, int index, int classes, apppop::Rng& rng)
{
    const std::string name = "C" + std::to_string(index);
    std::string s = "package " + package + ";\n\nimport java.util.List;\nimport java.util.ArrayList;\n\n";
    s += "public class " + name;
    if (index > 1 && rng.below(3) == 0) s += " extends C" + std::to_string(index - 1);
    s += " {\n";
    const int fields = 1 + static_cast<int>(rng.below(4));
    for (int f = 0; f < fields; ++f) s += "    private int field" + std::to_string(f) + " = " + std::to_string(f) + ";\n";
    s += "    private final List<String> names = new ArrayList<>();\n\n";
    s += "    public " + name + "() {\n        this.field0 = 1;\n    }\n\n";
    const int methods = 2 + static_cast<int>(rng.below(5));
    for (int m = 0; m < methods; ++m) {
        s += "    public int method" + std::to_string(m) + "(int value) {\n";
        s += "        int total = value + field" + std::to_string(m % fields) + ";\n";
        const int branches = static_cast<int>(rng.below(5));
        for (int b = 0; b < branches; ++b) {
            s += "        if (total > " + std::to_string(b * 7) + ") {\n";
            s += "            total -= " + std::to_string(b + 1) + ";\n";
            s += "        } else {\n            total += 3;\n        }\n";
        }
        if (rng.below(2) == 0) s += "        for (int i = 0; i < value; i++) {\n            total += i;\n        }\n";
        if (rng.below(3) == 0) s += "        while (total > 1000) {\n            total /= 2;\n        }\n";
        if (rng.below(4) == 0) s += "        try {\n            total = Integer.parseInt(\"12\");\n        } catch (NumberFormatException e) {\n            total = 0;\n        }\n";
        const int target = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        if (target != index) s += "        total += new C" + std::to_string(target) + "().method0(total);\n";
        s += "        names.add(\"item\" + total);\n";
        s += "        return total;\n    }\n\n";
    }
    s += "}\n";
    return s;
}

inline void write_app(const std::filesystem::path& root, const std::string& package, int classes,
                      const std::string& release, apppop::Rng& rng)
{
    namespace fs = std::filesystem;
    static const std::vector<std::string> kGenres = {"TOOLS", "GAME_PUZZLE", "EDUCATION", "PRODUCTIVITY", "SOCIAL"};
    static const std::vector<std::string> kPermissions = {"Camera", "Location", "Storage", "Contacts", "Microphone"};
    const fs::path dir = root / package;
    const std::string pkg_path = [&] {
        std::string p = package;
        for (auto& c : p)
            if (c == '.') c = '/';
        return p;
    }();
    for (int k = 1; k <= classes; ++k)
        apppop::write_file((dir / "src/main/java" / pkg_path / ("C" + std::to_string(k) + ".java")).string(),
                           java_class(package, k, classes, rng));
    std::string activities;
    const int n_activities = 1 + static_cast<int>(rng.below(4));
    for (int a = 0; a < n_activities; ++a)
        activities += "    <activity android:name=\".A" + std::to_string(a) + "\"/>\n";
    apppop::write_file((dir / "src/main/AndroidManifest.xml").string(),
                       "<?xml version=\"1.0\"?>\n<manifest package=\"" + package + "\">\n<application>\n" + activities +
                           "</application>\n</manifest>\n");
    nlohmann::json reviews = nlohmann::json::array();
    const int n_reviews = 3 + static_cast<int>(rng.below(8));
    for (int r = 0; r < n_reviews; ++r) reviews.push_back({{"stars", 1 + static_cast<int>(rng.below(5))}});
    nlohmann::json permissions = nlohmann::json::array();
    for (const auto& p : kPermissions)
        if (rng.below(2) == 0) permissions.push_back(p);
    const nlohmann::json meta = {{"package_name", package},
                                 {"genre", kGenres[rng.below(kGenres.size())]},
                                 {"contains_ads", rng.below(2) == 0},
                                 {"permissions", permissions},
                                 {"release_date", release},
                                 {"snapshot_date", "2021-06-01"},
                                 {"install_count", 1000 * (1 + static_cast<std::int64_t>(rng.below(5000)))},
                                 {"reviews", reviews}};
    apppop::write_file((dir / "app.json").string(), meta.dump(2) + "\n");
}

inline void write_synthetic_corpus(const std::filesystem::path& root, const SyntheticCorpusOptions& o = {})
{
    apppop::Rng rng(o.seed);
    for (int i = 0; i < o.apps; ++i) {
        const std::string package = "org.synth.app" + std::to_string(100 + i);
        const int year = 2012 + static_cast<int>(rng.below(8));
        write_app(root, package, 5 + static_cast<int>(rng.below(6)), std::to_string(year) + "-03-15", rng);
    }
    if (o.with_rejects) {
        write_app(root, "org.synth.young", 6, "2021-01-01", rng);
        write_app(root, "org.synth.tiny", 3, "2015-01-01", rng);
    }
}

}  // namespace testing_support

#endif
