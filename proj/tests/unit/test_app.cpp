#include "amod/app.hpp"
#include "amod/error.hpp"
#include "amod/text.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace amod;
using amod::testing::ScratchDir;
using nlohmann::json;

namespace {

// Golden inputs copied into a scratch directory, with the config as JSON so
// tests can edit it before writing.
struct GoldenCopy {
    ScratchDir dir{"app"};
    json config;

    GoldenCopy() {
        for (const char* f : {"nodes.txt", "edges.txt", "zones.geojson", "trips.csv"})
            std::filesystem::copy_file(amod::testing::golden_dir() / f, dir / f);
        std::ifstream in(amod::testing::golden_dir() / "config.json");
        config = json::parse(in);
    }

    app::RunConfig load() const {
        dir.write("config.json", config.dump(2));
        return app::load_run_config(dir / "config.json");
    }
};

bool contains(const std::vector<std::string>& lines, std::string_view needle) {
    return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("app") {

TEST_CASE("the golden config validates and reproduces the golden call records") {
    GoldenCopy g;
    app::RunConfig cfg = g.load();
    CHECK(cfg.dispatch.strategy == Strategy::SSS);
    CHECK(cfg.dispatch.eat_enabled);
    CHECK(cfg.fleet_start_nodes == std::vector<NodeId>{0, 5, 7});
    app::ValidationReport rep = app::validate(cfg);
    CHECK(rep.ok());
    CHECK(contains(rep.warnings, "rejected"));

    app::RunArtifacts art = app::execute_run(cfg, g.dir / "run");
    CHECK(art.result.stats.picked_up == 7);
    CHECK(text::read_file(g.dir / "run" / "calls.csv") ==
          text::read_file(amod::testing::golden_dir() / "calls.golden.csv"));
    for (const char* f : {"events.log", "summary.csv", "summary_daily.csv", "summary_monthly.csv", "periodic.csv",
                          "adjacency_initial.txt", "adjacency_final.txt", "cleaning_report.txt", "metadata.txt"})
        CHECK(std::filesystem::exists(g.dir / "run" / f));
    auto meta = app::read_lines(g.dir / "run" / "metadata.txt");
    CHECK(contains(meta, "status: complete"));
    CHECK(contains(meta, "config_hash: " + app::config_hash(cfg)));

    CHECK(app::replay_check(cfg, art.result.event_log).identical);
}

TEST_CASE("config errors name the problem") {
    GoldenCopy g;
    SUBCASE("unknown key") {
        g.config["dispatch"]["stratgy"] = "NSS";
        CHECK_THROWS_WITH_AS(g.load(), doctest::Contains("stratgy"), ConfigError);
    }
    SUBCASE("invalid strategy") {
        g.config["dispatch"]["strategy"] = "FASTEST";
        CHECK_THROWS_WITH_AS(g.load(), doctest::Contains("FASTEST"), ConfigError);
    }
    SUBCASE("demand seed is mandatory") {
        g.config["demand"].erase("seed");
        CHECK_THROWS_AS(g.load(), ConfigError);
    }
    SUBCASE("fleet needs a seed unless start nodes are given") {
        g.config["fleet"] = json{{"size", 3}};
        CHECK_THROWS_AS(g.load(), ConfigError);
        g.config["fleet"]["seed"] = 4;
        CHECK_NOTHROW(g.load());
    }
    SUBCASE("wrong types") {
        g.config["metrics"]["period_s"] = "hourly";
        CHECK_THROWS_AS(g.load(), ConfigError);
    }
    SUBCASE("not JSON") {
        g.dir.write("broken.json", "{ \"network\": ");
        CHECK_THROWS_AS(app::load_run_config(g.dir / "broken.json"), ConfigError);
    }
    SUBCASE("negative threshold") {
        g.config["dispatch"]["oss_threshold_s"] = -1;
        CHECK_THROWS_AS(g.load(), ConfigError);
    }
}

TEST_CASE("a missing input file is a validation error naming the path") {
    GoldenCopy g;
    g.config["network"]["edges"] = "no_such_edges.txt";
    app::ValidationReport rep = app::validate(g.load());
    CHECK_FALSE(rep.ok());
    CHECK(contains(rep.errors, "no_such_edges.txt"));
}

TEST_CASE("heavy row rejection only warns") {
    GoldenCopy g;
    std::string csv = "medallion,pickup time,dropoff time,passenger count,pickup log,pickup lat,dropoff log,dropoff lat\n";
    for (int i = 0; i < 7; ++i)
        csv += "M" + std::to_string(i) + ",2013-01-01 08:00:0" + std::to_string(i) +
               ",2013-01-01 08:10:00,1,-73.9891,40.75,-73.9891,40.7509\n";
    csv += "B1,2013-01-01 08:00:00,2013-01-01 08:10:00,9,-73.9891,40.75,-73.9891,40.7509\n";
    csv += "B2,2013-01-01 08:00:00,2013-01-01 08:10:00,1,0,0,-73.9891,40.7509\n";
    csv += "B3,yesterday,2013-01-01 08:10:00,1,-73.9891,40.75,-73.9891,40.7509\n";
    g.dir.write("trips.csv", csv);
    app::ValidationReport rep = app::validate(g.load());
    CHECK(rep.ok());
    CHECK(contains(rep.warnings, "3 of 10"));
}

TEST_CASE("hashes separate comparable inputs from dispatch choices") {
    GoldenCopy g;
    app::RunConfig base = g.load();
    const std::string h = app::config_hash(base);
    const std::string fp = app::inputs_fingerprint(base);

    app::RunConfig moved = base;
    moved.output_dir = "elsewhere";
    moved.matrix_strategies = {Strategy::OSS};
    CHECK(app::config_hash(moved) == h);

    app::RunConfig other = base;
    other.dispatch.strategy = Strategy::NSS;
    CHECK(app::config_hash(other) != h);
    CHECK(app::inputs_fingerprint(other) == fp);

    app::RunConfig seeded = base;
    app::apply_seed_override(seeded, 99);
    CHECK(app::inputs_fingerprint(seeded) != fp);
    app::RunConfig seeded2 = base;
    app::apply_seed_override(seeded2, 99);
    CHECK(app::config_hash(seeded2) == app::config_hash(seeded));

    // Editing an input file changes the fingerprint even with the same path.
    std::string trips = text::read_file(g.dir / "trips.csv");
    trips.replace(trips.find("M00"), 3, "X00");
    g.dir.write("trips.csv", trips);
    CHECK(app::inputs_fingerprint(base) != fp);

    // The effective config round-trips.
    app::RunConfig again = app::parse_run_config(app::to_json(base), g.dir.path());
    CHECK(app::config_hash(again) == h);
}

TEST_CASE("comparisons") {
    GoldenCopy g;
    app::RunConfig cfg = g.load();
    app::execute_run(cfg, g.dir / "eat");

    SUBCASE("a run against itself improves nothing") {
        std::istringstream report(app::compare_runs(g.dir / "eat", g.dir / "eat"));
        std::string line;
        int rows = 0;
        while (std::getline(report, line)) {
            if (line.starts_with("#") || line.starts_with("window")) continue;
            ++rows;
            CHECK(line.ends_with(",0.00,0.00"));
        }
        CHECK(rows == 2);
    }
    SUBCASE("the EAT run is the with side whichever order") {
        app::RunConfig plain = cfg;
        plain.dispatch.eat_enabled = false;
        app::execute_run(plain, g.dir / "plain");
        const std::string ab = app::compare_runs(g.dir / "plain", g.dir / "eat");
        const std::string ba = app::compare_runs(g.dir / "eat", g.dir / "plain");
        CHECK(ab == ba);
        CHECK(ab.starts_with("# with: SSS-EAT  without: SSS\n"));
    }
    SUBCASE("different demand is refused") {
        app::RunConfig other = cfg;
        app::apply_seed_override(other, 5);
        app::execute_run(other, g.dir / "other");
        CHECK_THROWS_AS(app::compare_runs(g.dir / "eat", g.dir / "other"), ComparisonMismatch);
    }
    SUBCASE("a directory without metadata") {
        CHECK_THROWS_AS(app::compare_runs(g.dir / "eat", g.dir.path()), LoadError);
    }
}

TEST_CASE("matrix runs both arms per strategy and resumes by hash") {
    GoldenCopy g;
    app::RunConfig cfg = g.load();
    app::MatrixResult first = app::run_matrix(cfg, {Strategy::NSS}, g.dir / "m");
    REQUIRE(first.cells.size() == 2);
    CHECK(first.all_ok());
    CHECK(first.cells[0].system == "NSS");
    CHECK(first.cells[1].system == "NSS-EAT");
    CHECK_FALSE(first.cells[0].reused);
    CHECK(std::filesystem::exists(first.report));
    CHECK(std::filesystem::exists(first.daily_series));

    // Simulate an interrupted sweep: one cell never finished.
    std::filesystem::remove(first.cells[1].directory / "metadata.txt");
    app::MatrixResult second = app::run_matrix(cfg, {Strategy::NSS}, g.dir / "m");
    CHECK(second.cells[0].reused);
    CHECK_FALSE(second.cells[1].reused);
    CHECK(text::read_file(first.report) == text::read_file(second.report));

    app::MatrixResult third = app::run_matrix(cfg, {Strategy::NSS}, g.dir / "m");
    CHECK(third.cells[0].reused);
    CHECK(third.cells[1].reused);

    // A changed input invalidates the recorded cells.
    app::RunConfig other = cfg;
    other.dispatch.oss_reassign_threshold_s = 30;
    app::MatrixResult fourth = app::run_matrix(other, {Strategy::NSS}, g.dir / "m");
    CHECK_FALSE(fourth.cells[0].reused);
}

TEST_CASE("system names") {
    CHECK(app::system_name(Strategy::OSS, true) == "OSS-EAT");
    CHECK(app::system_name(Strategy::NSS, false) == "NSS");
}

}  // TEST_SUITE
