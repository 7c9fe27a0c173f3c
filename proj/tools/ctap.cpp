#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctap/config.hpp"
#include "ctap/runner.hpp"

namespace {

// exit codes: 0 ok, 1 usage/config error, 2 converged with warnings,
// 3 divergence-invalidated run, 5 comparison exceeded the sigma threshold
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitWarnings = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitCompareFailed = 5;

std::string rebase(const std::string& path, const std::string& out_dir) {
    if (path.empty() || out_dir.empty()) return path;
    return (std::filesystem::path(out_dir) / std::filesystem::path(path).filename()).string();
}

int cmd_run(const std::string& config_path, long trajectories, long long seed, int threads,
            const std::string& out_dir, double dt, bool dt_check) {
    ctap::RunConfig cfg = ctap::load_config_file(config_path);
    if (trajectories > 0) cfg.n_trajectories = trajectories;
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) cfg.n_threads = threads;
    if (dt > 0.0) cfg.integration.dt_request = dt;
    if (dt_check) cfg.dt_check = true;
    if (!out_dir.empty()) {
        cfg.output.table_path = rebase(cfg.output.table_path, out_dir);
        cfg.output.report_path = rebase(cfg.output.report_path, out_dir);
        cfg.output.gnuplot_path = rebase(cfg.output.gnuplot_path, out_dir);
    }

    const ctap::RunResult result = ctap::run(cfg);
    const ctap::RunReport& report = result.report;

    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "representation:   " << ctap::to_string(cfg.rep) << "\n";
    std::cout << "trajectories:     " << report.trajectories << "\n";
    std::cout << "steps x dt:       " << report.n_steps << " x " << report.dt << "\n";
    std::cout << "threads:          " << report.threads_used << "\n";
    std::cout << "wall time:        " << report.wall_seconds << " s\n";
    std::cout << "divergent:        " << report.divergence_count << " ("
              << 100.0 * report.divergence_fraction << "%)\n";
    if (!report.dt_check.empty())
        std::cout << "dt check:         " << (report.dt_check_pass ? "pass" : "FAIL") << "\n";
    const ctap::TimeSeries& ts = result.series;
    const std::size_t last = ts.t.size() - 1;
    std::cout << "final populations: N1=" << ts.n[0][last] << " N2=" << ts.n[1][last]
              << " N3=" << ts.n[2][last] << "\n";
    if (!cfg.output.table_path.empty())
        std::cout << "table:            " << cfg.output.table_path << "\n";
    if (!cfg.output.report_path.empty())
        std::cout << "report:           " << cfg.output.report_path << "\n";
    if (!cfg.output.gnuplot_path.empty())
        std::cout << "gnuplot:          " << cfg.output.gnuplot_path << "\n";

    if (!report.converged) return kExitDiverged;
    if (!report.warnings.empty()) return kExitWarnings;
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    const ctap::RunConfig cfg = ctap::load_config_file(config_path);
    const std::vector<std::string> warnings = ctap::validate_config(cfg);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "config ok: " << ctap::to_string(cfg.rep) << ", "
              << cfg.trajectories_effective() << " trajectories, seed " << cfg.master_seed
              << "\n";
    return warnings.empty() ? kExitOk : kExitWarnings;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, double sigma,
                long smooth, const std::vector<std::string>& observables) {
    const ctap::TimeSeries a = ctap::read_table(path_a);
    const ctap::TimeSeries b = ctap::read_table(path_b);
    ctap::CompareOptions opts;
    opts.sigma = sigma;
    opts.smooth = smooth;
    opts.observables = observables;
    const ctap::CompareReport report = ctap::compare_runs(a, b, opts);
    std::printf("%-6s %12s %12s %10s  %s\n", "obs", "max|diff|", "max sigmas", "t", "verdict");
    for (const ctap::CompareRow& row : report.rows)
        std::printf("%-6s %12.5g %12.4g %10.4g  %s\n", row.observable.c_str(), row.max_abs,
                    row.max_sigmas, row.t_at_max, row.pass ? "ok" : "EXCEEDS");
    std::printf("threshold: %g sigma, smooth window: %ld -> %s\n", sigma, smooth,
                report.pass ? "AGREE" : "DISAGREE");
    return report.pass ? kExitOk : kExitCompareFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-well CTAP phase-space simulator (gpe | wigner | positive-p)"};
    app.require_subcommand(1);

    std::string config_path;
    long trajectories = -1;
    long long seed = -1;
    int threads = -1;
    std::string out_dir;
    double dt = 0.0;
    bool dt_check = false;

    CLI::App* run_cmd = app.add_subcommand("run", "integrate an ensemble and write outputs");
    run_cmd->add_option("config", config_path, "run configuration file")->required();
    run_cmd->add_option("--trajectories", trajectories, "override trajectory count");
    run_cmd->add_option("--seed", seed, "override master seed");
    run_cmd->add_option("--threads", threads, "override worker count (0 = hardware)");
    run_cmd->add_option("--out-dir", out_dir, "redirect output files into this directory");
    run_cmd->add_option("--dt", dt, "override requested step size");
    run_cmd->add_flag("--dt-check", dt_check, "also integrate at dt/2 and report the change");

    std::string table_a, table_b;
    double sigma = 5.0;
    long smooth = 1;
    std::vector<std::string> observables;

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "check two result tables against each other");
    compare_cmd->add_option("table_a", table_a, "first result table")->required();
    compare_cmd->add_option("table_b", table_b, "second result table")->required();
    compare_cmd->add_option("--sigma", sigma, "combined-stderr threshold (default 5)");
    compare_cmd->add_option("--smooth", smooth,
                            "odd boxcar width applied before comparing (default 1 = off)");
    compare_cmd->add_option("--observables", observables,
                            "subset of N1,N2,N3,xi13 (default: all)")
        ->delimiter(',');

    std::string validate_path;
    CLI::App* validate_cmd = app.add_subcommand("validate", "parse and validate a config");
    validate_cmd->add_option("config", validate_path, "run configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(config_path, trajectories, seed, threads, out_dir, dt, dt_check);
        if (compare_cmd->parsed()) return cmd_compare(table_a, table_b, sigma, smooth, observables);
        return cmd_validate(validate_path);
    } catch (const ctap::AllDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
