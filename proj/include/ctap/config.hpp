#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctap/model.hpp"
#include "ctap/sampling.hpp"

namespace ctap {

struct IntegrationSettings {
    double dt_request = 0.0;           // 0 -> default t_p / 16384
    long n_samples = 400;              // sample intervals across [0, t_p]
    double divergence_threshold = 0.0; // 0 -> default 1e6 * n_total
};

struct OutputSettings {
    std::string table_path;   // empty -> not written
    std::string report_path;  // empty -> not written
    std::string gnuplot_path; // empty -> not written
};

struct RunConfig {
    ModelParams model;
    Representation rep = Representation::Wigner;
    InitialStateSpec state{};
    IntegrationSettings integration;
    long n_trajectories = 1;
    std::uint64_t master_seed = 0;
    int n_batches = 100;
    int n_threads = 0; // 0 -> hardware concurrency
    bool dt_check = false;
    OutputSettings output;

    double dt_effective() const;
    double divergence_threshold_effective() const;
    // gpe is deterministic: one trajectory, one batch
    long trajectories_effective() const;
    int batches_effective() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("config line " + std::to_string(line) + ": " + msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Parses the sectioned key-value run configuration (grammar in README.md).
// Unknown sections and keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Model validation plus run-level invariants (batch counts, Fock-Wigner
// occupation limits, ...). Throws std::invalid_argument on hard errors,
// returns warnings otherwise.
std::vector<std::string> validate_config(const RunConfig& cfg);

// One-line textual form of a well state, as accepted by the parser.
std::string to_string(const WellState& w);

} // namespace ctap
