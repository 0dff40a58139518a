#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "divergia/cli.hpp"
#include "divergia/errors.hpp"

using namespace divergia;

namespace {

std::string brief(const std::string& s) { return s.size() > 80 ? s.substr(0, 77) + "..." : s; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"divergia: exact experiments on divergence rates of weighted ergodic averages"};
    std::string experiment;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string names;
    for (const auto& n : cli::experiments()) names += (names.empty() ? "" : ", ") + n;
    app.add_option("experiment", experiment, "one of: " + names)->required();
    app.add_option("--config", config_path, "JSON config (for replay: a plan file)")->required();
    auto* out_opt = app.add_option("--out", out_dir, "output directory (default: config key \"out\", else .)");
    app.add_option("--seed", seed, "seed override for randomized experiments");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::Usage;
    }

    try {
        std::ifstream in(config_path);
        if (!in) throw cli::UsageError("cannot open config " + config_path);
        nlohmann::json config;
        try {
            config = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw cli::UsageError("config is not valid JSON: " + std::string(e.what()));
        }
        if (!out_opt->count() && config.is_object() && config.contains("out")) {
            if (!config.at("out").is_string()) throw cli::UsageError("key 'out' must be a string");
            out_dir = config.at("out").get<std::string>();
        }
        const auto report = cli::run(experiment, config, seed);
        cli::write_outputs(report, out_dir);
        for (const auto& a : report.assertions)
            std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << " (bound " << brief(a.bound) << ", achieved " << brief(a.achieved)
                      << ")\n";
        std::cout << experiment << ": " << (report.passed() ? "pass" : "assertion failure") << ", report in "
                  << out_dir << "/" << experiment << ".json\n";
        return report.passed() ? cli::Pass : cli::AssertionFailure;
    } catch (const cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return cli::Usage;
    } catch (const DomainError& e) {
        std::cerr << experiment << ": invalid input: " << e.what() << "\n";
        return cli::Usage;
    } catch (const ResourceGuardError& e) {
        std::cerr << experiment << ": resource guard: " << e.what() << "\n";
        return cli::ResourceGuard;
    } catch (const std::exception& e) {
        std::cerr << experiment << ": " << e.what() << "\n";
        return cli::AssertionFailure;
    }
}
