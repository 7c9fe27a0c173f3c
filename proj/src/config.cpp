#include "ctap/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ctap {

double RunConfig::dt_effective() const {
    return integration.dt_request > 0.0 ? integration.dt_request : model.t_p / 16384.0;
}

double RunConfig::divergence_threshold_effective() const {
    if (integration.divergence_threshold > 0.0) return integration.divergence_threshold;
    return 1.0e6 * std::max(model.n_total, 1.0);
}

long RunConfig::trajectories_effective() const {
    return rep == Representation::GPE ? 1 : n_trajectories;
}

int RunConfig::batches_effective() const {
    return rep == Representation::GPE ? 1 : n_batches;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& s, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(line, "key '" + key + "': cannot parse '" + s + "' as a number");
    }
}

long parse_long(const std::string& s, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(line, "key '" + key + "': cannot parse '" + s + "' as an integer");
    }
}

std::uint64_t parse_u64(const std::string& s, int line, const std::string& key) {
    std::uint64_t v = 0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError(line, "key '" + key + "': cannot parse '" + s +
                                    "' as an unsigned integer");
    return v;
}

bool parse_bool(const std::string& s, int line, const std::string& key) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ConfigError(line, "key '" + key + "': cannot parse '" + s + "' as a boolean");
}

WellState parse_well(const std::string& value, int line, const std::string& key) {
    const auto toks = split_ws(value);
    if (toks.empty()) throw ConfigError(line, "key '" + key + "': empty state");
    const std::string& kind = toks[0];
    if (kind == "vacuum") {
        if (toks.size() != 1)
            throw ConfigError(line, "key '" + key + "': vacuum takes no arguments");
        return WellState::vacuum();
    }
    if (kind == "coherent") {
        if (toks.size() != 2 && toks.size() != 3)
            throw ConfigError(line, "key '" + key + "': expected 'coherent RE [IM]'");
        const double re = parse_double(toks[1], line, key);
        const double im = toks.size() == 3 ? parse_double(toks[2], line, key) : 0.0;
        return WellState::coherent(cplx(re, im));
    }
    if (kind == "coherent_n") {
        if (toks.size() != 2)
            throw ConfigError(line, "key '" + key + "': expected 'coherent_n N'");
        const double n = parse_double(toks[1], line, key);
        if (!(n >= 0.0))
            throw ConfigError(line, "key '" + key + "': coherent_n needs a nonnegative mean");
        return WellState::coherent(cplx(std::sqrt(n), 0.0));
    }
    if (kind == "fock") {
        if (toks.size() != 2) throw ConfigError(line, "key '" + key + "': expected 'fock N'");
        const long n = parse_long(toks[1], line, key);
        if (n < 0) throw ConfigError(line, "key '" + key + "': fock occupation must be >= 0");
        return WellState::fock(n);
    }
    throw ConfigError(line, "key '" + key + "': unknown state kind '" + kind +
                                "' (vacuum | coherent | coherent_n | fock)");
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    bool saw_omega = false, saw_tp = false, saw_chi = false, saw_ntotal = false;
    bool saw_e2 = false, saw_rep = false;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, "unterminated section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "state" && section != "integration" &&
                section != "run" && section != "output")
                throw ConfigError(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "missing key before '='");
        if (value.empty()) throw ConfigError(line_no, "key '" + key + "' has no value");
        if (section.empty())
            throw ConfigError(line_no, "key '" + key + "' appears before any section");

        if (section == "model") {
            if (key == "omega") { cfg.model.omega = parse_double(value, line_no, key); saw_omega = true; }
            else if (key == "t_p") { cfg.model.t_p = parse_double(value, line_no, key); saw_tp = true; }
            else if (key == "e1") cfg.model.e[0] = parse_double(value, line_no, key);
            else if (key == "e2") { cfg.model.e[1] = parse_double(value, line_no, key); saw_e2 = true; }
            else if (key == "e3") cfg.model.e[2] = parse_double(value, line_no, key);
            else if (key == "chi") { cfg.model.chi = parse_double(value, line_no, key); saw_chi = true; }
            else if (key == "n_total") { cfg.model.n_total = parse_double(value, line_no, key); saw_ntotal = true; }
            else throw ConfigError(line_no, "unknown key '" + key + "' in [model]");
        } else if (section == "state") {
            if (key == "well1") cfg.state[0] = parse_well(value, line_no, key);
            else if (key == "well2") cfg.state[1] = parse_well(value, line_no, key);
            else if (key == "well3") cfg.state[2] = parse_well(value, line_no, key);
            else throw ConfigError(line_no, "unknown key '" + key + "' in [state]");
        } else if (section == "integration") {
            if (key == "dt") cfg.integration.dt_request = parse_double(value, line_no, key);
            else if (key == "samples") cfg.integration.n_samples = parse_long(value, line_no, key);
            else if (key == "divergence_threshold")
                cfg.integration.divergence_threshold = parse_double(value, line_no, key);
            else throw ConfigError(line_no, "unknown key '" + key + "' in [integration]");
        } else if (section == "run") {
            if (key == "representation") {
                try {
                    cfg.rep = representation_from_string(value);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(line_no, e.what());
                }
                saw_rep = true;
            }
            else if (key == "trajectories") cfg.n_trajectories = parse_long(value, line_no, key);
            else if (key == "seed") cfg.master_seed = parse_u64(value, line_no, key);
            else if (key == "batches") cfg.n_batches = static_cast<int>(parse_long(value, line_no, key));
            else if (key == "threads") cfg.n_threads = static_cast<int>(parse_long(value, line_no, key));
            else if (key == "dt_check") cfg.dt_check = parse_bool(value, line_no, key);
            else throw ConfigError(line_no, "unknown key '" + key + "' in [run]");
        } else { // output
            if (key == "table") cfg.output.table_path = value;
            else if (key == "report") cfg.output.report_path = value;
            else if (key == "gnuplot") cfg.output.gnuplot_path = value;
            else throw ConfigError(line_no, "unknown key '" + key + "' in [output]");
        }
    }

    if (!saw_omega || !saw_tp || !saw_chi || !saw_ntotal)
        throw ConfigError(line_no, "[model] must set omega, t_p, chi and n_total");
    if (!saw_rep) throw ConfigError(line_no, "[run] must set representation");
    if (!saw_e2) cfg.model.e[1] = 0.1 * cfg.model.omega;
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
    std::vector<std::string> warnings = validate(cfg.model, cfg.rep);

    if (cfg.n_trajectories < 1)
        throw std::invalid_argument("trajectories must be >= 1");
    if (cfg.rep != Representation::GPE) {
        if (cfg.n_batches < 2)
            throw std::invalid_argument("batches must be >= 2 for stochastic runs");
        if (cfg.n_trajectories < cfg.n_batches)
            throw std::invalid_argument("trajectories (" + std::to_string(cfg.n_trajectories) +
                                        ") must be >= batches (" + std::to_string(cfg.n_batches) +
                                        ")");
    }
    if (cfg.n_threads < 0) throw std::invalid_argument("threads must be >= 0");
    if (cfg.integration.n_samples < 1)
        throw std::invalid_argument("samples must be >= 1");
    if (cfg.integration.dt_request < 0.0)
        throw std::invalid_argument("dt must be positive");
    if (cfg.integration.divergence_threshold < 0.0)
        throw std::invalid_argument("divergence_threshold must be positive");

    int idx = 0;
    for (const WellState& w : cfg.state) {
        ++idx;
        if (w.kind == WellState::Kind::Fock && cfg.rep == Representation::Wigner) {
            if (w.fock_n == 0)
                throw std::invalid_argument(
                    "well" + std::to_string(idx) +
                    ": wigner cannot sample fock 0; use vacuum (or coherent 0)");
            if (w.fock_n < 10)
                warnings.push_back("well" + std::to_string(idx) + ": fock " +
                                   std::to_string(w.fock_n) +
                                   " is small; the wigner Fock sampler assumes n >> 1");
        }
    }

    if (cfg.rep == Representation::GPE && cfg.n_trajectories > 1)
        warnings.push_back("gpe is deterministic; trajectories forced to 1");
    return warnings;
}

std::string to_string(const WellState& w) {
    std::ostringstream out;
    switch (w.kind) {
        case WellState::Kind::Vacuum: out << "vacuum"; break;
        case WellState::Kind::Coherent:
            out << "coherent " << w.alpha.real();
            if (w.alpha.imag() != 0.0) out << ' ' << w.alpha.imag();
            break;
        case WellState::Kind::Fock: out << "fock " << w.fock_n; break;
    }
    return out.str();
}

} // namespace ctap
