#include "ctap/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ctap/dynamics.hpp"
#include "ctap/rng.hpp"
#include "ctap/sampling.hpp"

namespace ctap {
namespace {

constexpr int kDivergenceHistogramBins = 20;

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

struct WorkerTally {
    long divergence_count = 0;
    std::vector<long> histogram = std::vector<long>(kDivergenceHistogramBins, 0);
};

// Per-observable dt-halving deltas; pass rules depend on the representation
// (deterministic gpe runs get an absolute bound, stochastic runs their own
// error bar with a tiny floor for exactly-deterministic points).
std::vector<DtCheckResult> evaluate_dt_check(const RunConfig& cfg, const TimeSeries& coarse,
                                             const TimeSeries& fine) {
    const double n_scale = std::max(cfg.model.n_total, 1.0);
    struct Obs {
        std::string name;
        const std::vector<double>* value_c;
        const std::vector<double>* err_c;
        const std::vector<double>* value_f;
        double floor;
    };
    const double pop_floor = cfg.rep == Representation::GPE ? 1.0e-6 * n_scale
                                                            : 1.0e-9 * n_scale;
    const double xi_floor = cfg.rep == Representation::GPE ? 1.0e-6 * n_scale * n_scale
                                                           : 1.0e-9 * n_scale * n_scale;
    std::vector<Obs> obs = {
        {"N1", &coarse.n[0], &coarse.n_err[0], &fine.n[0], pop_floor},
        {"N2", &coarse.n[1], &coarse.n_err[1], &fine.n[1], pop_floor},
        {"N3", &coarse.n[2], &coarse.n_err[2], &fine.n[2], pop_floor},
        {"xi13", &coarse.xi, &coarse.xi_err, &fine.xi, xi_floor},
    };
    std::vector<DtCheckResult> results;
    for (const Obs& o : obs) {
        DtCheckResult r;
        r.observable = o.name;
        r.pass = true;
        for (std::size_t s = 0; s < o.value_c->size(); ++s) {
            const double d = std::abs((*o.value_c)[s] - (*o.value_f)[s]);
            const double err = (*o.err_c)[s];
            const double bound = cfg.rep == Representation::GPE ? o.floor
                                                                : std::max(err, o.floor);
            const double sigmas = err > 0.0 ? d / err : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            if (d > r.max_abs_change) {
                r.max_abs_change = d;
                r.t_at_max = coarse.t[s];
            }
            r.max_sigma_change = std::max(r.max_sigma_change, sigmas);
            if (d > bound) r.pass = false;
        }
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace

std::string config_echo(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[model]\n";
    out << "omega = " << format_g(cfg.model.omega) << "\n";
    out << "t_p = " << format_g(cfg.model.t_p) << "\n";
    out << "e1 = " << format_g(cfg.model.e[0]) << "\n";
    out << "e2 = " << format_g(cfg.model.e[1]) << "\n";
    out << "e3 = " << format_g(cfg.model.e[2]) << "\n";
    out << "chi = " << format_g(cfg.model.chi) << "\n";
    out << "n_total = " << format_g(cfg.model.n_total) << "\n";
    out << "[state]\n";
    for (int j = 0; j < 3; ++j)
        out << "well" << (j + 1) << " = " << to_string(cfg.state[static_cast<std::size_t>(j)])
            << "\n";
    out << "[integration]\n";
    out << "dt = " << format_g(cfg.dt_effective()) << "\n";
    out << "samples = " << cfg.integration.n_samples << "\n";
    out << "divergence_threshold = " << format_g(cfg.divergence_threshold_effective()) << "\n";
    out << "[run]\n";
    out << "representation = " << to_string(cfg.rep) << "\n";
    out << "trajectories = " << cfg.trajectories_effective() << "\n";
    out << "seed = " << cfg.master_seed << "\n";
    out << "batches = " << cfg.batches_effective() << "\n";
    if (cfg.dt_check) out << "dt_check = true\n";
    return out.str();
}

std::string provenance_string(const RunConfig& cfg) {
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_echo(cfg))));
    std::string s = "ctap-";
    s += kVersion;
    s += "+cfg.";
    s += hash;
    return s;
}

RunResult run(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();

    RunReport report;
    report.warnings = validate_config(cfg);
    report.config_echo = config_echo(cfg);
    report.provenance = provenance_string(cfg);

    const long n_traj = cfg.trajectories_effective();
    const int n_batches = cfg.batches_effective();
    report.trajectories = n_traj;

    const StepPlan plan = make_step_plan(cfg.model, cfg.dt_effective(),
                                         cfg.integration.n_samples,
                                         cfg.divergence_threshold_effective());
    report.n_steps = plan.n_steps;
    report.dt = plan.dt;
    const StepPlan fine_plan =
        cfg.dt_check ? halve_step_plan(cfg.model, plan) : StepPlan{};

    const std::vector<double> times = plan.sample_times();

    int n_workers = cfg.n_threads > 0
                        ? cfg.n_threads
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n_workers = static_cast<int>(std::min<long>(n_workers, n_batches));
    report.threads_used = n_workers;

    std::vector<MomentAccumulator> worker_acc;
    std::vector<MomentAccumulator> worker_acc_fine;
    std::vector<WorkerTally> tallies(static_cast<std::size_t>(n_workers));
    worker_acc.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        worker_acc.emplace_back(cfg.rep, times, n_batches);
        if (cfg.dt_check) worker_acc_fine.emplace_back(cfg.rep, times, n_batches);
    }

    std::atomic<int> next_batch{0};
    std::atomic<bool> failed{false};
    std::string failure_message;
    std::mutex failure_mutex;

    auto worker_main = [&](int w) {
        try {
            MomentAccumulator& acc = worker_acc[static_cast<std::size_t>(w)];
            WorkerTally& tally = tallies[static_cast<std::size_t>(w)];
            for (;;) {
                const int b = next_batch.fetch_add(1);
                if (b >= n_batches || failed.load()) break;
                const long lo = static_cast<long>(b) * n_traj / n_batches;
                const long hi = static_cast<long>(b + 1) * n_traj / n_batches;
                for (long i = lo; i < hi; ++i) {
                    RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(i));
                    TrajectoryState init;
                    init.rep = cfg.rep;
                    init.a = sample_initial(cfg.state, cfg.rep, rng);
                    TrajectorySummary summary;
                    auto observe = [&acc, b](long s, const TrajectoryState& st) {
                        acc.add(b, s, moments_from_state(st));
                    };
                    if (cfg.dt_check) {
                        MomentAccumulator& acc_f =
                            worker_acc_fine[static_cast<std::size_t>(w)];
                        auto observe_f = [&acc_f, b](long s, const TrajectoryState& st) {
                            acc_f.add(b, s, moments_from_state(st));
                        };
                        auto [sc, sf] = integrate_trajectory_pair(
                            init, cfg.model, plan, fine_plan, rng, observe, observe_f);
                        summary = sc;
                    } else {
                        TrajectoryState st = init;
                        summary = integrate_trajectory(st, cfg.model, plan, rng, observe);
                    }
                    if (summary.divergent) {
                        tally.divergence_count += 1;
                        long bin = summary.divergence_step * kDivergenceHistogramBins /
                                   plan.n_steps;
                        bin = std::clamp<long>(bin, 0, kDivergenceHistogramBins - 1);
                        tally.histogram[static_cast<std::size_t>(bin)] += 1;
                    }
                }
            }
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failed.store(true);
            if (failure_message.empty()) failure_message = e.what();
        }
    };

    if (n_workers == 1) {
        worker_main(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker_main, w);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("run failed: " + failure_message);

    for (int w = 1; w < n_workers; ++w) worker_acc[0].merge(worker_acc[static_cast<std::size_t>(w)]);
    if (cfg.dt_check)
        for (int w = 1; w < n_workers; ++w)
            worker_acc_fine[0].merge(worker_acc_fine[static_cast<std::size_t>(w)]);

    report.first_divergence_histogram.assign(kDivergenceHistogramBins, 0);
    for (const WorkerTally& tally : tallies) {
        report.divergence_count += tally.divergence_count;
        for (int k = 0; k < kDivergenceHistogramBins; ++k)
            report.first_divergence_histogram[static_cast<std::size_t>(k)] +=
                tally.histogram[static_cast<std::size_t>(k)];
    }
    report.divergence_fraction =
        static_cast<double>(report.divergence_count) / static_cast<double>(n_traj);
    report.converged = report.divergence_count == 0;
    if (report.divergence_count == n_traj)
        throw AllDivergedError("all " + std::to_string(n_traj) +
                               " trajectories diverged; the run produced no statistics "
                               "(chi is far outside the positive-P window)");

    RunResult result;
    result.series = worker_acc[0].finalize(n_traj);
    if (cfg.dt_check) {
        result.series_half_dt = worker_acc_fine[0].finalize(n_traj);
        report.dt_check = evaluate_dt_check(cfg, result.series, *result.series_half_dt);
        for (const DtCheckResult& r : report.dt_check)
            report.dt_check_pass = report.dt_check_pass && r.pass;
    }

    // positive-P estimators are real only on ensemble average; how far the
    // imaginary parts stray, in stderr units, is a convergence diagnostic
    const TimeSeries& ts = result.series;
    for (long s = 0; s < ts.n_points(); ++s) {
        const auto idx = static_cast<std::size_t>(s);
        for (int j = 0; j < 3; ++j) {
            const auto ji = static_cast<std::size_t>(j);
            if (ts.n_err[ji][idx] > 0.0)
                report.max_population_imag_ratio =
                    std::max(report.max_population_imag_ratio,
                             std::abs(ts.n_imag[ji][idx]) / ts.n_err[ji][idx]);
        }
        if (ts.xi_err[idx] > 0.0)
            report.max_xi_imag_ratio = std::max(
                report.max_xi_imag_ratio, std::abs(ts.xi_imag[idx]) / ts.xi_err[idx]);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    if (!cfg.output.table_path.empty()) write_table(result.series, cfg, cfg.output.table_path);
    result.report = report;
    if (!cfg.output.report_path.empty()) write_report_json(report, cfg.output.report_path);
    if (!cfg.output.gnuplot_path.empty() && !cfg.output.table_path.empty())
        write_gnuplot(cfg, cfg.output.table_path, cfg.output.gnuplot_path);
    return result;
}

void write_table(const TimeSeries& ts, const RunConfig& cfg, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write table '" + path + "'");
    out << "# three-well CTAP phase-space run\n";
    out << "# provenance: " << provenance_string(cfg) << "\n";
    std::istringstream echo(config_echo(cfg));
    std::string line;
    while (std::getline(echo, line)) out << "# " << line << "\n";
    out << "t N1 sigma_N1 N2 sigma_N2 N3 sigma_N3 xi13 sigma_xi13 divergence_fraction\n";
    for (long s = 0; s < ts.n_points(); ++s) {
        const auto i = static_cast<std::size_t>(s);
        out << format_g(ts.t[i]);
        for (int j = 0; j < 3; ++j) {
            const auto ji = static_cast<std::size_t>(j);
            out << ' ' << format_g(ts.n[ji][i]) << ' ' << format_g(ts.n_err[ji][i]);
        }
        out << ' ' << format_g(ts.xi[i]) << ' ' << format_g(ts.xi_err[i]) << ' '
            << format_g(ts.div_frac[i]) << "\n";
    }
    if (!out) throw std::runtime_error("short write on table '" + path + "'");
}

TimeSeries read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open table '" + path + "'");
    TimeSeries ts;
    std::string line;
    bool saw_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "t N1 sigma_N1 N2 sigma_N2 N3 sigma_N3 xi13 sigma_xi13 "
                        "divergence_fraction")
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unexpected table header");
            saw_header = true;
            for (int j = 0; j < 3; ++j) {
                ts.n[static_cast<std::size_t>(j)].clear();
                ts.n_err[static_cast<std::size_t>(j)].clear();
            }
            continue;
        }
        std::istringstream row(line);
        double v[10];
        for (double& x : v)
            if (!(row >> x))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 10 numeric columns");
        ts.t.push_back(v[0]);
        for (int j = 0; j < 3; ++j) {
            ts.n[static_cast<std::size_t>(j)].push_back(v[1 + 2 * j]);
            ts.n_err[static_cast<std::size_t>(j)].push_back(v[2 + 2 * j]);
        }
        ts.xi.push_back(v[7]);
        ts.xi_err.push_back(v[8]);
        ts.div_frac.push_back(v[9]);
    }
    if (!saw_header || ts.t.empty())
        throw std::runtime_error(path + ": no table data found");
    return ts;
}

void write_report_json(const RunReport& report, const std::string& path) {
    ensure_parent_dir(path);
    nlohmann::json j;
    j["provenance"] = report.provenance;
    j["config"] = report.config_echo;
    j["warnings"] = report.warnings;
    j["wall_seconds"] = report.wall_seconds;
    j["trajectories"] = report.trajectories;
    j["threads_used"] = report.threads_used;
    j["n_steps"] = report.n_steps;
    j["dt"] = report.dt;
    j["divergence"] = {
        {"count", report.divergence_count},
        {"fraction", report.divergence_fraction},
        {"first_divergence_histogram", report.first_divergence_histogram},
    };
    j["diagnostics"] = {
        {"max_population_imag_ratio", report.max_population_imag_ratio},
        {"max_xi_imag_ratio", report.max_xi_imag_ratio},
    };
    j["converged"] = report.converged;
    if (!report.dt_check.empty()) {
        nlohmann::json checks = nlohmann::json::array();
        for (const DtCheckResult& r : report.dt_check)
            checks.push_back({{"observable", r.observable},
                              {"max_abs_change", r.max_abs_change},
                              {"max_sigma_change", r.max_sigma_change},
                              {"t_at_max", r.t_at_max},
                              {"pass", r.pass}});
        j["dt_check"] = checks;
        j["dt_check_pass"] = report.dt_check_pass;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report '" + path + "'");
    out << j.dump(2) << "\n";
}

void write_gnuplot(const RunConfig& cfg, const std::string& table_path,
                   const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write gnuplot script '" + path + "'");
    const std::string stem = std::filesystem::path(path).stem().string();
    out << "# gnuplot script generated by ctap " << kVersion << "\n";
    out << "set terminal pngcairo size 1000,700\n";
    out << "set key top right\n";
    out << "set xlabel 't'\n";
    out << "set output '" << stem << "_populations.png'\n";
    out << "set ylabel 'N_j'\n";
    out << "plot '" << table_path << "' skip 1 using 1:2 with lines title 'N1', \\\n";
    out << "     '' skip 1 using 1:4 with lines title 'N2', \\\n";
    out << "     '' skip 1 using 1:6 with lines title 'N3'\n";
    out << "set output '" << stem << "_xi13.png'\n";
    out << "set ylabel 'xi_{13}'\n";
    out << "plot '" << table_path << "' skip 1 using 1:8 with lines title 'xi13 ("
        << to_string(cfg.rep) << ")', \\\n";
    out << "     '' skip 1 using 1:8:9 with yerrorbars notitle, 0 with lines notitle\n";
}

namespace {

std::vector<double> boxcar(const std::vector<double>& v, long w) {
    if (w <= 1) return v;
    const long n = static_cast<long>(v.size());
    std::vector<double> out(v.size());
    const long half = w / 2;
    for (long i = 0; i < n; ++i) {
        const long lo = std::max<long>(0, i - half);
        const long hi = std::min<long>(n - 1, i + half);
        double acc = 0.0;
        for (long k = lo; k <= hi; ++k) acc += v[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

} // namespace

CompareReport compare_runs(const TimeSeries& a, const TimeSeries& b,
                           const CompareOptions& opts) {
    if (a.t.size() != b.t.size())
        throw std::invalid_argument("compare_runs: sample grids have different sizes");
    for (std::size_t s = 0; s < a.t.size(); ++s)
        if (std::abs(a.t[s] - b.t[s]) > 1.0e-9 * (1.0 + std::abs(a.t[s])))
            throw std::invalid_argument("compare_runs: sample grids differ at index " +
                                        std::to_string(s));
    if (opts.smooth < 1 || opts.smooth % 2 == 0)
        throw std::invalid_argument("compare_runs: smooth width must be odd and >= 1");

    auto select = [](const TimeSeries& ts, const std::string& name)
        -> std::pair<const std::vector<double>*, const std::vector<double>*> {
        if (name == "N1") return {&ts.n[0], &ts.n_err[0]};
        if (name == "N2") return {&ts.n[1], &ts.n_err[1]};
        if (name == "N3") return {&ts.n[2], &ts.n_err[2]};
        if (name == "xi13") return {&ts.xi, &ts.xi_err};
        throw std::invalid_argument("compare_runs: unknown observable '" + name +
                                    "' (N1 | N2 | N3 | xi13)");
    };

    std::vector<std::string> names = opts.observables;
    if (names.empty()) names = {"N1", "N2", "N3", "xi13"};

    CompareReport report;
    for (const std::string& name : names) {
        const auto [va_raw, ea_raw] = select(a, name);
        const auto [vb_raw, eb_raw] = select(b, name);
        const std::vector<double> va = boxcar(*va_raw, opts.smooth);
        const std::vector<double> vb = boxcar(*vb_raw, opts.smooth);
        // smoothed error bars: window mean, i.e. no independence credit
        const std::vector<double> ea = boxcar(*ea_raw, opts.smooth);
        const std::vector<double> eb = boxcar(*eb_raw, opts.smooth);

        CompareRow row;
        row.observable = name;
        for (std::size_t s = 0; s < va.size(); ++s) {
            const double d = std::abs(va[s] - vb[s]);
            const double sig = std::hypot(ea[s], eb[s]);
            const double sigmas =
                sig > 0.0 ? d / sig
                          : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            if (sigmas > row.max_sigmas) {
                row.max_sigmas = sigmas;
                row.max_abs = d;
                row.t_at_max = a.t[s];
            }
        }
        row.pass = row.max_sigmas <= opts.sigma;
        report.pass = report.pass && row.pass;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace ctap
