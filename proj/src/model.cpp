#include "ctap/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ctap {

std::string_view to_string(Representation rep) {
    switch (rep) {
        case Representation::GPE: return "gpe";
        case Representation::Wigner: return "wigner";
        case Representation::PositiveP: return "positive-p";
    }
    return "?";
}

Representation representation_from_string(std::string_view name) {
    if (name == "gpe") return Representation::GPE;
    if (name == "wigner") return Representation::Wigner;
    if (name == "positive-p" || name == "positive_p") return Representation::PositiveP;
    throw std::invalid_argument("unknown representation '" + std::string(name) +
                                "' (expected gpe | wigner | positive-p)");
}

Couplings coupling_at(const ModelParams& params, double t) {
    if (!(t >= 0.0 && t <= params.t_p))
        throw std::domain_error("coupling_at: t=" + std::to_string(t) +
                                " outside pulse window [0, " + std::to_string(params.t_p) + "]");
    const double phase = std::numbers::pi * t / (2.0 * params.t_p);
    const double s = std::sin(phase);
    const double c = std::cos(phase);
    return {params.omega * s * s, params.omega * c * c};
}

double chi_stability_limit(Representation rep) {
    // Smooth transfer holds for |chi| <= 1e-3 in the mean-field and Wigner
    // methods; positive-P trajectories only converge up to |chi| = 5e-4.
    return rep == Representation::PositiveP ? 5.0e-4 : 1.0e-3;
}

std::vector<std::string> validate(const ModelParams& p, Representation rep) {
    std::ostringstream bad;
    auto check_finite = [&bad](double v, const char* name) {
        if (!std::isfinite(v)) bad << ' ' << name;
    };
    check_finite(p.omega, "omega");
    check_finite(p.t_p, "t_p");
    check_finite(p.e[0], "e1");
    check_finite(p.e[1], "e2");
    check_finite(p.e[2], "e3");
    check_finite(p.chi, "chi");
    check_finite(p.n_total, "n_total");
    if (!bad.str().empty())
        throw std::invalid_argument("non-finite model parameters:" + bad.str());
    if (p.t_p <= 0.0)
        throw std::invalid_argument("t_p must be positive, got " + std::to_string(p.t_p));
    if (p.n_total < 0.0)
        throw std::invalid_argument("n_total must be nonnegative, got " + std::to_string(p.n_total));

    std::vector<std::string> warnings;
    const double limit = chi_stability_limit(rep);
    if (std::abs(p.chi) > limit) {
        std::ostringstream w;
        w << "chi=" << p.chi << " is outside the " << to_string(rep)
          << " stability window |chi| <= " << limit;
        if (rep == Representation::PositiveP) w << "; expect divergent trajectories";
        warnings.push_back(w.str());
    }
    return warnings;
}

} // namespace ctap
