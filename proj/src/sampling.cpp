#include "ctap/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctap {

double WellState::mean_number() const {
    switch (kind) {
        case Kind::Vacuum: return 0.0;
        case Kind::Coherent: return std::norm(alpha);
        case Kind::Fock: return static_cast<double>(fock_n);
    }
    return 0.0;
}

cplx sample_coherent_wigner(cplx alpha, RngStream& rng) {
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    return alpha + 0.5 * cplx(e1, e2);
}

std::pair<cplx, cplx> sample_coherent_pp(cplx alpha) {
    return {alpha, std::conj(alpha)};
}

FockWignerRadius fock_wigner_radius(long n) {
    if (n < 1) throw std::invalid_argument("fock_wigner_radius: need n >= 1");
    const double nd = static_cast<double>(n);
    const double p = 0.5 * std::sqrt(2.0 * nd + 1.0 + 2.0 * std::sqrt(nd * nd + nd));
    return {p, 1.0 / (4.0 * p)};
}

cplx sample_fock_wigner(long n, RngStream& rng) {
    if (n == 0)
        throw std::invalid_argument(
            "sample_fock_wigner: the large-n approximation breaks down at n=0; "
            "model an empty well as vacuum or coherent(0)");
    const auto [p, q] = fock_wigner_radius(n);
    const double radius = p + q * rng.normal();
    return std::polar(radius, 2.0 * std::numbers::pi * rng.uniform01());
}

std::pair<cplx, cplx> sample_fock_pp(long n, RngStream& rng) {
    if (n < 0) throw std::invalid_argument("sample_fock_pp: need n >= 0");
    const double z = rng.gamma(static_cast<double>(n) + 1.0);
    const double theta = 2.0 * std::numbers::pi * rng.uniform01();
    const cplx mu = std::polar(std::sqrt(z), theta);
    const cplx gam = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return {mu + gam, std::conj(mu) - std::conj(gam)};
}

std::array<cplx, 6> sample_initial(const InitialStateSpec& spec, Representation rep,
                                   RngStream& rng) {
    std::array<cplx, 6> a{};
    for (int j = 0; j < 3; ++j) {
        const WellState& w = spec[j];
        switch (rep) {
            case Representation::GPE:
                if (w.kind == WellState::Kind::Coherent)
                    a[j] = w.alpha;
                else if (w.kind == WellState::Kind::Fock)
                    a[j] = cplx(std::sqrt(static_cast<double>(w.fock_n)), 0.0);
                break;
            case Representation::Wigner:
                if (w.kind == WellState::Kind::Fock)
                    a[j] = sample_fock_wigner(w.fock_n, rng);
                else
                    a[j] = sample_coherent_wigner(
                        w.kind == WellState::Kind::Coherent ? w.alpha : cplx{}, rng);
                break;
            case Representation::PositiveP: {
                std::pair<cplx, cplx> pair;
                if (w.kind == WellState::Kind::Fock)
                    pair = sample_fock_pp(w.fock_n, rng);
                else
                    pair = sample_coherent_pp(
                        w.kind == WellState::Kind::Coherent ? w.alpha : cplx{});
                a[j] = pair.first;
                a[j + 3] = pair.second;
                break;
            }
        }
    }
    return a;
}

} // namespace ctap
