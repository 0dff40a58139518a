#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "divergia/cli.hpp"
#include "divergia/errors.hpp"

using namespace divergia;
using cli::json;

namespace {

json ubl1_config() {
    return {{"weights", {"0", "0", "0", "0", "0", "0", "0", "5", "6"}}, {"M", 3}, {"sequence", "power:7"}};
}

}  // namespace

TEST_CASE("a fresh plan replays identically and a tampered one does not") {
    const auto r = cli::run("ubl1", ubl1_config());
    CHECK(r.passed());
    REQUIRE(r.plan);
    const auto again = cli::replay(*r.plan);
    CHECK(again.passed());
    CHECK(again.results.at("replay") == "identical");

    json bad = *r.plan;
    bad["bookkeeping"]["alpha"] = "1/3";
    const auto tampered = cli::replay(bad);
    CHECK(!tampered.passed());
    CHECK(tampered.results.at("replay") == "replay-failure");
    std::size_t failed = 0;
    for (const auto& a : tampered.assertions) failed += !a.pass;
    CHECK(failed == 1);
}

TEST_CASE("config validation") {
    json c = ubl1_config();
    c["colour"] = "red";
    CHECK_THROWS_WITH_AS(cli::run("ubl1", c), doctest::Contains("colour"), cli::UsageError);
    CHECK_THROWS_AS(cli::run("nope", json::object()), cli::UsageError);
    CHECK_THROWS_WITH_AS(cli::run("ublp", {{"p", "2"}, {"sequence", "power:5"}}), doctest::Contains("'J'"),
                         cli::UsageError);
    CHECK_THROWS_AS(cli::run("ubl1", {{"weights", {{"tag", "reciprocal-t"}, {"horizon", 40}}}, {"M", 2}, {"sequence", "power:5"}}),
                    ResourceGuardError);
    // b^e counts
    const auto w = cli::run("weights-analyze", {{"tag", "reciprocal-t"}, {"horizon", "2^6"}, {"curve", false}});
    CHECK(w.config.at("horizon") == 64);
    CHECK(w.config.at("p") == "1");
}

TEST_CASE("seeded runs are deterministic and outputs land on disk") {
    const json c = {{"instances", 5}, {"levels", 6}};
    const auto a = cli::run("audit", c, 11);
    const auto b = cli::run("audit", c, 11);
    CHECK(a.payload() == b.payload());
    CHECK(a.config.at("seed") == 11);
    CHECK(a.passed());

    const auto dir = std::filesystem::temp_directory_path() / "divergia_test_cli";
    std::filesystem::remove_all(dir);
    cli::write_outputs(a, dir.string());
    CHECK(std::filesystem::exists(dir / "audit.json"));
    CHECK(std::filesystem::exists(dir / "audit.csv"));
    std::ifstream in(dir / "audit.json");
    const auto back = json::parse(in);
    CHECK(back.at("passed") == true);
    CHECK(back.at("config").at("seed") == 11);
    std::filesystem::remove_all(dir);
}

TEST_CASE("semigroup expectations become assertions") {
    const auto r = cli::run("semigroup", {{"generators", {2, 3}},
                                          {"N_max", 100000},
                                          {"expect", {{"count_at", 100}, {"count", 19}, {"verdict", "convergence side"}}}});
    CHECK(r.passed());
    CHECK(r.assertions.size() == 3);
    CHECK(r.csv.count("semigroup_folner.csv") == 1);
}
