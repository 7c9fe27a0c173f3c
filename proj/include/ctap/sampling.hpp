#pragma once

#include <array>
#include <utility>

#include "ctap/model.hpp"
#include "ctap/rng.hpp"

namespace ctap {

// Quantum state of one well at t = 0.
struct WellState {
    enum class Kind { Vacuum, Coherent, Fock };

    Kind kind = Kind::Vacuum;
    cplx alpha{};    // coherent amplitude
    long fock_n = 0; // Fock occupation

    static WellState vacuum() { return {}; }
    static WellState coherent(cplx a) { return {Kind::Coherent, a, 0}; }
    static WellState fock(long n) { return {Kind::Fock, {}, n}; }

    double mean_number() const;
};

using InitialStateSpec = std::array<WellState, 3>;

// Wigner coherent state: alpha plus half a quantum of Gaussian noise, so
// the ensemble mean of |a|^2 is |alpha|^2 + 1/2.
cplx sample_coherent_wigner(cplx alpha, RngStream& rng);

// positive-P coherent state: the deterministic classical point.
std::pair<cplx, cplx> sample_coherent_pp(cplx alpha);

// Radial parameters of the approximate Wigner Fock sampler; they satisfy
// p^2 + q^2 = n + 1/2 exactly.
struct FockWignerRadius {
    double p;
    double q;
};
FockWignerRadius fock_wigner_radius(long n);

// Approximate Wigner sampling of |n><n|: a thin Gaussian ring of radius p
// with a uniform phase. Valid for n >> 1; n = 0 is rejected, model an empty
// well as vacuum (or coherent 0) instead.
cplx sample_fock_wigner(long n, RngStream& rng);

// Exact positive-P sampling of |n><n| via a Gamma-distributed radius plus a
// complex Gaussian offset applied antisymmetrically to the two variables.
std::pair<cplx, cplx> sample_fock_pp(long n, RngStream& rng);

// Initial amplitudes for one trajectory. Layout [a1,a2,a3,a1+,a2+,a3+];
// the upper half is only populated for positive-P. The gpe path takes the
// mean-field amplitude of each well and draws nothing from the stream.
std::array<cplx, 6> sample_initial(const InitialStateSpec& spec, Representation rep,
                                   RngStream& rng);

} // namespace ctap
