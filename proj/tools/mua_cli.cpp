// Command-line driver: run one configuration, sweep its horizon grid, or
// refit the slope of an existing summary.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mua/io.hpp"
#include "mua/mua.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::size_t threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "replace the seed list with this seed");
    cmd->add_option("--reps", c.reps, "replications per seed")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

int execute(const Common& c, bool sweep) {
    mua::ExperimentConfig cfg = mua::load_config(c.config);
    auto& spec = cfg.spec;
    if (c.seed) {
        spec.seeds = {*c.seed};
        cfg.echo["seeds"] = spec.seeds;
    }
    if (c.reps) {
        spec.replications = *c.reps;
        cfg.echo["replications"] = *c.reps;
    }
    if (!sweep) {
        spec.T_grid.clear();
    } else if (spec.T_grid.empty()) {
        throw mua::ConfigError("sweep requires a non-empty T_grid");
    }

    fs::create_directories(c.out);
    const std::string trace_path = (fs::path(c.out) / "trace.csv").string();
    const std::string summary_path = (fs::path(c.out) / "summary.json").string();
    std::ofstream csv(trace_path, std::ios::binary);
    if (!csv) throw mua::IoError("cannot write '" + trace_path + "'");
    csv << mua::kTraceHeader << '\n';
    const mua::Summary s = mua::run_experiment(
        spec, c.threads, [&](std::size_t rep, const mua::RoundRecord& r) { mua::write_trace_row(csv, rep, r); });
    csv.flush();
    if (!csv) throw mua::IoError("write failed for '" + trace_path + "'");
    mua::write_json_file(mua::summary_to_json(s, cfg.echo), summary_path);

    std::cout << "oracle value " << mua::format_double(s.oracle_value) << '\n';
    for (const auto& h : s.horizons)
        std::cout << "T=" << h.T << " regret " << mua::format_double(h.mean) << " +- " << mua::format_double(h.stderr_)
                  << '\n';
    if (s.slope) std::cout << "slope " << mua::format_double(s.slope->slope) << '\n';
    std::cout << "wrote " << trace_path << " and " << summary_path << '\n';
    return 0;
}

int refit(const std::string& path, const std::optional<std::string>& out) {
    std::ifstream in(path);
    if (!in) throw mua::IoError("cannot open summary '" + path + "'");
    const mua::Json j = mua::Json::parse(in);
    const mua::Summary s = mua::summary_from_json(j);
    std::vector<std::pair<double, double>> pts;
    for (const auto& h : s.horizons) pts.emplace_back(static_cast<double>(h.T), h.mean);
    const mua::SlopeFit fit = mua::fit_loglog_slope(pts);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    const mua::Json result = {{"slope", fit.slope},
                              {"intercept", fit.intercept},
                              {"r_squared", fit.r_squared},
                              {"points_used", fit.points_used},
                              {"warnings", fit.warnings}};
    if (out) {
        fs::create_directories(*out);
        mua::write_json_file(result, (fs::path(*out) / "fit.json").string());
    }
    std::cout << result.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeated multi-unit auction learning experiments"};
    app.require_subcommand(1);

    Common run_opts, sweep_opts;
    auto* run = app.add_subcommand("run", "run one configuration at its horizon T");
    add_common(run, run_opts);
    auto* sweep = app.add_subcommand("sweep", "run a configuration over its T_grid and fit the regret slope");
    add_common(sweep, sweep_opts);

    std::string summary;
    std::optional<std::string> fit_out;
    auto* fit = app.add_subcommand("fit", "fit the log-log regret slope of an existing summary.json");
    fit->add_option("summary", summary, "summary.json produced by run or sweep")->required()->check(CLI::ExistingFile);
    fit->add_option("--out", fit_out, "directory for fit.json");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return execute(run_opts, false);
        if (*sweep) return execute(sweep_opts, true);
        return refit(summary, fit_out);
    } catch (const mua::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
