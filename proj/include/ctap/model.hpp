#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace ctap {

using cplx = std::complex<double>;

// Phase-space method used for a run.
enum class Representation { GPE, Wigner, PositiveP };

std::string_view to_string(Representation rep);
Representation representation_from_string(std::string_view name);

// Physical constants of the three-well system. All rates are in units with
// hbar = 1; t_p sets the pulse duration.
struct ModelParams {
    double omega = 10.0;                     // tunnelling amplitude
    double t_p = 40.0;                       // pulse duration
    std::array<double, 3> e{0.0, 1.0, 0.0};  // well ground-state energies E1,E2,E3
    double chi = 0.0;                        // on-site collisional interaction
    double n_total = 200.0;                  // target total atom number N_A
};

struct Couplings {
    double k12;
    double k23;
};

// Counter-intuitive pulse pair: K12 rises as sin^2, K23 falls as cos^2, so
// K12 + K23 = omega at every instant and K23 leads.
Couplings coupling_at(const ModelParams& params, double t);

// |chi| beyond which the requested method is not trusted to stay accurate
// (gpe/wigner) or to converge at all (positive-P).
double chi_stability_limit(Representation rep);

// Throws std::invalid_argument for unusable parameters (non-finite values,
// t_p <= 0, n_total < 0). Returns warnings for parameters that are usable
// but outside the stability window of the requested representation.
std::vector<std::string> validate(const ModelParams& params, Representation rep);

} // namespace ctap
