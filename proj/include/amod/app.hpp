// Config-driven experiment plumbing behind the command-line tool: config
// parsing, input validation, single runs with on-disk artifacts, pairwise
// comparison and the six-system matrix.
#pragma once

#include "amod/demand.hpp"
#include "amod/dispatch.hpp"
#include "amod/engine.hpp"
#include "amod/metrics.hpp"
#include "amod/road_network.hpp"
#include "amod/zones.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace amod::app {

namespace fs = std::filesystem;

struct GeneratorConfig {
    double rate_per_hour = 0.0;
    double duration_s = 0.0;
    bool region_is_zones = true;
    std::optional<GeoBox> bbox;
    std::vector<double> party_weights{1.0};
    std::uint64_t seed = 0;
    std::int64_t start_unix_s = 0;
};

struct RunConfig {
    fs::path source;  // config file, empty for in-memory configs
    fs::path nodes_file;
    fs::path edges_file;
    double speed_limit_mps = kDefaultSpeedLimitMps;
    double snap_radius_m = 500.0;
    fs::path zones_file;

    std::optional<fs::path> trips_file;
    ParseOptions parse;  // bbox, capacity, seed, column aliases
    std::optional<GeneratorConfig> generator;

    std::size_t fleet_size = 12216;
    std::optional<std::uint64_t> fleet_seed;
    int capacity = kDefaultCapacity;
    std::optional<std::vector<NodeId>> fleet_start_nodes;

    std::vector<TrafficBreakpoint> traffic_schedule;
    RandomWalkSpec random_walk;

    DispatchConfig dispatch;
    /// Strategies swept by the matrix command.
    std::vector<Strategy> matrix_strategies{Strategy::NSS, Strategy::SSS, Strategy::OSS};
    double metrics_period_s = 3600.0;
    fs::path output_dir = "out";
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
/// Throws ConfigError with the offending key.
RunConfig parse_run_config(const nlohmann::json& doc, const fs::path& base_dir);
RunConfig load_run_config(const fs::path& config_file);

/// Effective configuration with every default filled in.
nlohmann::json to_json(const RunConfig& cfg);

/// Hash of the effective configuration (output directory excluded).
std::string config_hash(const RunConfig& cfg);
/// Hash of everything that must match for two runs to be comparable: the
/// configuration without its dispatch/metrics/output sections, plus the
/// contents of every input file.
std::string inputs_fingerprint(const RunConfig& cfg);

/// Replaces every seed with one derived from `seed`.
void apply_seed_override(RunConfig& cfg, std::uint64_t seed);

struct Scenario {
    RoadNetwork network;
    ZoneMap zones;
    Fleet fleet;
    TripTable demand;
    EngineConfig engine;
    std::vector<std::string> warnings;
};

/// Loads and cross-checks every input. Throws LoadError / ConfigError.
Scenario load_scenario(const RunConfig& cfg);

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const noexcept { return errors.empty(); }
};

/// Loads all inputs and runs integrity checks: file presence, graph
/// connectivity, zone coverage of demand points and the cleaning report.
/// Heavy row rejection is a warning, never an error.
ValidationReport validate(const RunConfig& cfg);

struct RunArtifacts {
    RunResult result;
    std::int64_t epoch_unix_s = 0;
    fs::path directory;
};

/// Runs one configuration and writes calls.csv, events.log, summary.csv,
/// summary_daily.csv, summary_monthly.csv, periodic.csv,
/// adjacency_initial.txt, adjacency_final.txt, cleaning_report.txt and
/// metadata.txt into `out_dir`.
RunArtifacts execute_run(const RunConfig& cfg, const fs::path& out_dir);

/// Re-runs `cfg` and compares against a recorded event log.
ReplayReport replay_check(const RunConfig& cfg, const std::vector<std::string>& recorded_log);

std::vector<std::string> read_lines(const fs::path& file);

struct RunDirectory {
    std::string system;  // e.g. "SSS-EAT"
    bool eat = false;
    std::string fingerprint;
    std::string config_hash;
    std::int64_t epoch_unix_s = 0;
    std::vector<CallRecord> records;
};

RunDirectory read_run_directory(const fs::path& dir);

/// Improvement report for two run directories; the run with EAT enabled is
/// treated as the "with" side (the first argument when both or neither
/// are). Throws ComparisonMismatch when input fingerprints differ.
std::string compare_runs(const fs::path& dir_a, const fs::path& dir_b);

struct MatrixCell {
    std::string system;
    fs::path directory;
    bool reused = false;
    std::optional<std::string> error;
};

struct MatrixResult {
    std::vector<MatrixCell> cells;
    fs::path report;
    fs::path daily_series;
    bool all_ok() const noexcept;
};

/// Runs each strategy with and without EAT under identical inputs, reusing
/// cells whose recorded config hash matches, then writes report.txt (waiting
/// time, success rate and improvement tables) and daily_series.csv.
MatrixResult run_matrix(const RunConfig& cfg, const std::vector<Strategy>& strategies, const fs::path& out_dir);

std::string system_name(Strategy s, bool eat);

}  // namespace amod::app
