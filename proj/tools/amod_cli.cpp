// amod: validate inputs, run single simulations, compare runs and sweep the
// strategy matrix.
//
// Exit codes: 0 ok, 1 validation/config error, 2 runtime error,
// 3 comparison mismatch.

#include "amod/app.hpp"
#include "amod/error.hpp"
#include "amod/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace amod;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr int kMismatch = 3;

app::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    app::RunConfig cfg = app::load_run_config(path);
    if (seed_override) app::apply_seed_override(cfg, *seed_override);
    return cfg;
}

std::vector<Strategy> parse_strategy_list(const std::vector<std::string>& items) {
    std::vector<Strategy> out;
    for (const auto& item : items) {
        std::string_view rest = item;
        while (!rest.empty()) {
            auto comma = rest.find(',');
            auto token = text::trim(rest.substr(0, comma));
            if (!token.empty()) {
                Strategy s = parse_strategy(token);
                if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
            }
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
    }
    return out;
}

void print_report(const app::ValidationReport& rep) {
    for (const auto& e : rep.errors) std::cerr << "error: " << e << '\n';
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_validate(const std::string& config, std::optional<std::uint64_t> seed) {
    app::RunConfig cfg = load_config(config, seed);
    app::ValidationReport rep = app::validate(cfg);
    print_report(rep);
    std::cout << (rep.ok() ? "valid" : "invalid") << ": " << rep.errors.size() << " error(s), "
              << rep.warnings.size() << " warning(s)\n";
    return rep.ok() ? kOk : kValidation;
}

int cmd_run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
    app::RunConfig cfg = load_config(config, seed);
    app::ValidationReport rep = app::validate(cfg);
    print_report(rep);
    if (!rep.ok()) return kValidation;
    fs::path dir = out.empty() ? cfg.output_dir : fs::path(out);
    app::RunArtifacts art = app::execute_run(cfg, dir);
    const auto& st = art.result.stats;
    std::cout << app::system_name(cfg.dispatch.strategy, cfg.dispatch.eat_enabled) << ": " << st.requests
              << " requests, " << st.picked_up << " picked up, " << st.rejected << " rejected, " << st.abandoned
              << " abandoned -> " << dir.generic_string() << '\n';
    return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
    std::string report = app::compare_runs(a, b);
    if (!out.empty()) text::write_file(out, report);
    std::cout << report;
    return kOk;
}

int cmd_matrix(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
               const std::vector<std::string>& strategies) {
    app::RunConfig cfg = load_config(config, seed);
    app::ValidationReport rep = app::validate(cfg);
    print_report(rep);
    if (!rep.ok()) return kValidation;
    std::vector<Strategy> list = strategies.empty() ? cfg.matrix_strategies : parse_strategy_list(strategies);
    if (list.empty()) throw ConfigError("--strategies names no strategy");
    fs::path dir = out.empty() ? cfg.output_dir : fs::path(out);
    app::MatrixResult res = app::run_matrix(cfg, list, dir);
    for (const auto& c : res.cells) {
        std::cout << c.system << ": ";
        if (c.error) std::cout << "FAILED: " << *c.error;
        else std::cout << (c.reused ? "reused " : "ran ") << c.directory.generic_string();
        std::cout << '\n';
    }
    std::cout << "report: " << res.report.generic_string() << '\n';
    return res.all_ok() ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Autonomous mobility-on-demand dispatch simulator"};
    cli.require_subcommand(1);

    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> strategies;
    std::string run_a;
    std::string run_b;

    auto* validate = cli.add_subcommand("validate", "Load every input and report integrity problems");
    validate->add_option("--config", config, "Run configuration (JSON)")->required();
    validate->add_option("--seed-override", seed, "Replace every seed with values derived from this one");

    auto* run = cli.add_subcommand("run", "Run one simulation and write its artifacts");
    run->add_option("--config", config, "Run configuration (JSON)")->required();
    run->add_option("--out", out, "Output directory (default: the config's output)");
    run->add_option("--seed-override", seed, "Replace every seed with values derived from this one");

    auto* compare = cli.add_subcommand("compare", "Improvement report for two run directories");
    compare->add_option("run_a", run_a, "Run directory")->required();
    compare->add_option("run_b", run_b, "Run directory")->required();
    compare->add_option("--out", out, "Also write the report to this file");

    auto* matrix = cli.add_subcommand("matrix", "Run each strategy with and without EAT");
    matrix->add_option("--config", config, "Run configuration (JSON)")->required();
    matrix->add_option("--out", out, "Output directory (default: the config's output)");
    matrix->add_option("--seed-override", seed, "Replace every seed with values derived from this one");
    matrix->add_option("--strategies", strategies, "Comma-separated strategies (default: the config's list)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = cli.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*validate) return cmd_validate(config, seed);
        if (*run) return cmd_run(config, out, seed);
        if (*compare) return cmd_compare(run_a, run_b, out);
        if (*matrix) return cmd_matrix(config, out, seed, strategies);
    } catch (const ComparisonMismatch& e) {
        std::cerr << "comparison error: " << e.what() << '\n';
        return kMismatch;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kValidation;
    } catch (const LoadError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kValidation;
    } catch (const EngineError& e) {
        std::cerr << "engine error: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
