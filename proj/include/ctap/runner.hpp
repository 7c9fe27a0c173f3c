#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctap/config.hpp"
#include "ctap/observables.hpp"

namespace ctap {

inline constexpr std::string_view kVersion = "0.1.0";

struct DtCheckResult {
    std::string observable;
    double max_abs_change = 0.0;   // max over t of |value(dt) - value(dt/2)|
    double max_sigma_change = 0.0; // worst |change| / stderr over the grid
    double t_at_max = 0.0;
    bool pass = false;
};

struct RunReport {
    std::string config_echo; // canonical config text (re-parseable)
    std::string provenance;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
    long trajectories = 0;
    int threads_used = 0;
    long n_steps = 0;
    double dt = 0.0;
    long divergence_count = 0;
    double divergence_fraction = 0.0;
    std::vector<long> first_divergence_histogram; // 20 bins across [0, t_p]
    double max_population_imag_ratio = 0.0;       // positive-P diagnostics
    double max_xi_imag_ratio = 0.0;
    bool converged = false; // no trajectory diverged
    std::vector<DtCheckResult> dt_check;
    bool dt_check_pass = true;
};

struct RunResult {
    TimeSeries series;
    RunReport report;
    std::optional<TimeSeries> series_half_dt;
};

// Raised when every trajectory diverged and no statistics exist.
class AllDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Executes the configured ensemble. Trajectory i always draws from stream
// (master_seed, i) and lands in batch i*B/N; whole batches are handed to
// workers and merged in batch order, so the result depends only on
// (config, seed), never on the number of workers or their scheduling.
RunResult run(const RunConfig& cfg);

std::string config_echo(const RunConfig& cfg);
std::string provenance_string(const RunConfig& cfg);

void write_table(const TimeSeries& ts, const RunConfig& cfg, const std::string& path);
void write_report_json(const RunReport& report, const std::string& path);
void write_gnuplot(const RunConfig& cfg, const std::string& table_path,
                   const std::string& path);

// Reads back a table written by write_table.
TimeSeries read_table(const std::string& path);

struct CompareOptions {
    double sigma = 5.0; // pass threshold in combined-stderr units
    long smooth = 1;    // centered boxcar width (odd); 1 = off
    std::vector<std::string> observables; // empty = N1,N2,N3,xi13
};

struct CompareRow {
    std::string observable;
    double max_sigmas = 0.0;
    double max_abs = 0.0;
    double t_at_max = 0.0;
    bool pass = false;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    bool pass = true;
};

// Per-observable maximum discrepancy between two runs on the same grid, in
// units of the combined stderr. An optional boxcar smooth filters out
// high-frequency sampling artefacts before comparing.
CompareReport compare_runs(const TimeSeries& a, const TimeSeries& b,
                           const CompareOptions& opts);

} // namespace ctap
