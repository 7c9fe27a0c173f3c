#include "ctap/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace ctap {
namespace {

inline cplx mul_i(cplx z) { return {-z.imag(), z.real()}; }   // i*z
inline cplx mul_mi(cplx z) { return {z.imag(), -z.real()}; }  // -i*z

// d a_j/dt = i [ K-couplings into j  -  (E_j + 2 chi |a_j|^2) a_j ]
inline std::array<cplx, 3> gpe_kernel(const std::array<cplx, 3>& a, const ModelParams& p,
                                      double k12, double k23) {
    const double chi2 = 2.0 * p.chi;
    return {
        mul_i(k12 * a[1] - (p.e[0] + chi2 * std::norm(a[0])) * a[0]),
        mul_i(k12 * a[0] + k23 * a[2] - (p.e[1] + chi2 * std::norm(a[1])) * a[1]),
        mul_i(k23 * a[1] - (p.e[2] + chi2 * std::norm(a[2])) * a[2]),
    };
}

// Doubled-space drift: the plus variables obey the formal conjugate
// equations with a_j+ a_j in place of |a_j|^2.
inline std::array<cplx, 6> pp_kernel(const std::array<cplx, 6>& a, const ModelParams& p,
                                     double k12, double k23) {
    const double chi2 = 2.0 * p.chi;
    const cplx m1 = a[3] * a[0];
    const cplx m2 = a[4] * a[1];
    const cplx m3 = a[5] * a[2];
    return {
        mul_i(k12 * a[1] - (p.e[0] + chi2 * m1) * a[0]),
        mul_i(k12 * a[0] + k23 * a[2] - (p.e[1] + chi2 * m2) * a[1]),
        mul_i(k23 * a[1] - (p.e[2] + chi2 * m3) * a[2]),
        mul_mi(k12 * a[4] - (p.e[0] + chi2 * m1) * a[3]),
        mul_mi(k12 * a[3] + k23 * a[5] - (p.e[1] + chi2 * m2) * a[4]),
        mul_mi(k23 * a[4] - (p.e[2] + chi2 * m3) * a[5]),
    };
}

inline std::array<cplx, 6> pp_noise_kernel(const std::array<cplx, 6>& a, double chi,
                                           const std::array<double, 6>& dw) {
    // dw order (eta_1..eta_6): a1, a1+, a2, a2+, a3, a3+
    const cplx m2i_chi(0.0, -2.0 * chi);
    const cplx p2i_chi(0.0, 2.0 * chi);
    std::array<cplx, 6> g;
    for (int j = 0; j < 3; ++j) {
        g[j] = std::sqrt(m2i_chi * a[j] * a[j]) * dw[2 * j];
        g[j + 3] = std::sqrt(p2i_chi * a[j + 3] * a[j + 3]) * dw[2 * j + 1];
    }
    return g;
}

inline bool state_ok(const cplx* a, int n, double threshold) {
    for (int j = 0; j < n; ++j) {
        const double mag2 = std::norm(a[j]);
        if (!(mag2 <= threshold)) return false; // catches NaN too
    }
    return true;
}

// One classical RK4 step using tabulated couplings at half-grid index 2k.
void rk4_step(std::array<cplx, 6>& a, const ModelParams& p, const StepPlan& plan, long k) {
    const double dt = plan.dt;
    const double k12_0 = plan.k12_half[2 * k], k23_0 = plan.k23_half[2 * k];
    const double k12_m = plan.k12_half[2 * k + 1], k23_m = plan.k23_half[2 * k + 1];
    const double k12_1 = plan.k12_half[2 * k + 2], k23_1 = plan.k23_half[2 * k + 2];

    const std::array<cplx, 3> y{a[0], a[1], a[2]};
    const auto f1 = gpe_kernel(y, p, k12_0, k23_0);
    std::array<cplx, 3> u;
    for (int j = 0; j < 3; ++j) u[j] = y[j] + 0.5 * dt * f1[j];
    const auto f2 = gpe_kernel(u, p, k12_m, k23_m);
    for (int j = 0; j < 3; ++j) u[j] = y[j] + 0.5 * dt * f2[j];
    const auto f3 = gpe_kernel(u, p, k12_m, k23_m);
    for (int j = 0; j < 3; ++j) u[j] = y[j] + dt * f3[j];
    const auto f4 = gpe_kernel(u, p, k12_1, k23_1);
    for (int j = 0; j < 3; ++j)
        a[j] = y[j] + (dt / 6.0) * (f1[j] + 2.0 * (f2[j] + f3[j]) + f4[j]);
}

// One semi-implicit midpoint step: the drift is evaluated at a fixed-point
// iterated midpoint, the noise coefficient at the step start (Ito).
void pp_step(std::array<cplx, 6>& a, const ModelParams& p, const StepPlan& plan, long k,
             const std::array<double, 6>* dw) {
    const double dt = plan.dt;
    const double k12_m = plan.k12_half[2 * k + 1], k23_m = plan.k23_half[2 * k + 1];

    std::array<cplx, 6> mid = a;
    for (int iter = 0; iter < 3; ++iter) {
        const auto f = pp_kernel(mid, p, k12_m, k23_m);
        for (int j = 0; j < 6; ++j) mid[j] = a[j] + 0.5 * dt * f[j];
    }
    const auto f = pp_kernel(mid, p, k12_m, k23_m);

    if (dw != nullptr && p.chi != 0.0) {
        const auto g = pp_noise_kernel(a, p.chi, *dw);
        for (int j = 0; j < 6; ++j) a[j] += dt * f[j] + g[j];
    } else {
        for (int j = 0; j < 6; ++j) a[j] += dt * f[j];
    }
}

void step_with_noise(TrajectoryState& state, const ModelParams& params, const StepPlan& plan,
                     long step_index, const std::array<double, 6>* dw) {
    if (state.rep == Representation::PositiveP) {
        pp_step(state.a, params, plan, step_index, dw);
        state.t = plan.dt * static_cast<double>(step_index + 1);
        if (!state_ok(state.a.data(), 6, plan.divergence_threshold)) {
            state.divergent = true;
            state.divergence_step = step_index;
        }
    } else {
        rk4_step(state.a, params, plan, step_index);
        state.t = plan.dt * static_cast<double>(step_index + 1);
        if (!state_ok(state.a.data(), 3, plan.divergence_threshold))
            throw std::runtime_error("gpe/wigner trajectory blew up at t=" +
                                     std::to_string(state.t) +
                                     "; dt is too large or the drift is wrong");
    }
}

std::array<double, 6> draw_noise(RngStream& rng, double sqrt_dt) {
    std::array<double, 6> dw;
    for (double& w : dw) w = rng.normal() * sqrt_dt;
    return dw;
}

} // namespace

double StepPlan::sample_time(long s) const {
    return t_total() * static_cast<double>(s) / static_cast<double>(n_samples);
}

std::vector<double> StepPlan::sample_times() const {
    std::vector<double> t(static_cast<std::size_t>(n_samples) + 1);
    for (long s = 0; s <= n_samples; ++s) t[static_cast<std::size_t>(s)] = sample_time(s);
    return t;
}

namespace {

void fill_coupling_tables(StepPlan& plan, const ModelParams& params) {
    plan.dt = params.t_p / static_cast<double>(plan.n_steps);
    const long half_points = 2 * plan.n_steps + 1;
    plan.k12_half.resize(static_cast<std::size_t>(half_points));
    plan.k23_half.resize(static_cast<std::size_t>(half_points));
    for (long m = 0; m < half_points; ++m) {
        const double frac = static_cast<double>(m) / static_cast<double>(2 * plan.n_steps);
        const Couplings k = coupling_at(params, params.t_p * frac);
        plan.k12_half[static_cast<std::size_t>(m)] = k.k12;
        plan.k23_half[static_cast<std::size_t>(m)] = k.k23;
    }
}

} // namespace

StepPlan make_step_plan(const ModelParams& params, double dt_request, long n_samples,
                        double divergence_threshold) {
    if (!(dt_request > 0.0))
        throw std::invalid_argument("make_step_plan: dt_request must be positive");
    if (n_samples < 1) throw std::invalid_argument("make_step_plan: n_samples must be >= 1");
    if (!(divergence_threshold > 0.0))
        throw std::invalid_argument("make_step_plan: divergence_threshold must be positive");

    StepPlan plan;
    plan.n_samples = n_samples;
    plan.divergence_threshold = divergence_threshold;
    const long rough = static_cast<long>(std::ceil(params.t_p / dt_request));
    plan.sample_stride = (rough + n_samples - 1) / n_samples;
    if (plan.sample_stride < 1) plan.sample_stride = 1;
    plan.n_steps = plan.sample_stride * n_samples;
    fill_coupling_tables(plan, params);
    return plan;
}

StepPlan halve_step_plan(const ModelParams& params, const StepPlan& src) {
    StepPlan plan;
    plan.n_samples = src.n_samples;
    plan.divergence_threshold = src.divergence_threshold;
    plan.sample_stride = 2 * src.sample_stride;
    plan.n_steps = 2 * src.n_steps;
    fill_coupling_tables(plan, params);
    return plan;
}

std::array<cplx, 3> drift_gpe(const std::array<cplx, 3>& a, const ModelParams& params,
                              double t) {
    const Couplings k = coupling_at(params, t);
    return gpe_kernel(a, params, k.k12, k.k23);
}

std::array<cplx, 6> drift_pp(const std::array<cplx, 6>& a, const ModelParams& params,
                             double t) {
    const Couplings k = coupling_at(params, t);
    return pp_kernel(a, params, k.k12, k.k23);
}

std::array<cplx, 6> noise_pp(const std::array<cplx, 6>& a, const ModelParams& params,
                             const std::array<double, 6>& dw) {
    return pp_noise_kernel(a, params.chi, dw);
}

void step(TrajectoryState& state, const ModelParams& params, const StepPlan& plan,
          long step_index, RngStream& rng) {
    if (state.rep == Representation::PositiveP && params.chi != 0.0) {
        const auto dw = draw_noise(rng, std::sqrt(plan.dt));
        step_with_noise(state, params, plan, step_index, &dw);
    } else {
        step_with_noise(state, params, plan, step_index, nullptr);
    }
}

TrajectorySummary integrate_trajectory(TrajectoryState& state, const ModelParams& params,
                                       const StepPlan& plan, RngStream& rng,
                                       const SampleObserver& observe) {
    observe(0, state);
    for (long k = 0; k < plan.n_steps; ++k) {
        step(state, params, plan, k, rng);
        if (state.divergent) return {true, state.divergence_step};
        if ((k + 1) % plan.sample_stride == 0) observe((k + 1) / plan.sample_stride, state);
    }
    return {false, -1};
}

std::pair<TrajectorySummary, TrajectorySummary> integrate_trajectory_pair(
    const TrajectoryState& initial, const ModelParams& params, const StepPlan& coarse,
    const StepPlan& fine, RngStream& rng, const SampleObserver& observe_coarse,
    const SampleObserver& observe_fine) {
    if (fine.n_steps != 2 * coarse.n_steps || fine.n_samples != coarse.n_samples)
        throw std::invalid_argument("integrate_trajectory_pair: fine plan must halve dt");

    TrajectoryState sc = initial;
    TrajectoryState sf = initial;
    observe_coarse(0, sc);
    observe_fine(0, sf);

    const bool noisy = initial.rep == Representation::PositiveP && params.chi != 0.0;
    const double sqrt_dt_fine = std::sqrt(fine.dt);

    for (long k = 0; k < coarse.n_steps; ++k) {
        std::array<double, 6> dwa{}, dwb{}, dwc{};
        if (noisy) {
            dwa = draw_noise(rng, sqrt_dt_fine);
            dwb = draw_noise(rng, sqrt_dt_fine);
            for (int j = 0; j < 6; ++j) dwc[j] = dwa[j] + dwb[j];
        }
        if (!sf.divergent) {
            step_with_noise(sf, params, fine, 2 * k, noisy ? &dwa : nullptr);
            if (!sf.divergent) {
                step_with_noise(sf, params, fine, 2 * k + 1, noisy ? &dwb : nullptr);
                if (!sf.divergent && (2 * k + 2) % fine.sample_stride == 0)
                    observe_fine((2 * k + 2) / fine.sample_stride, sf);
            }
        }
        if (!sc.divergent) {
            step_with_noise(sc, params, coarse, k, noisy ? &dwc : nullptr);
            if (!sc.divergent && (k + 1) % coarse.sample_stride == 0)
                observe_coarse((k + 1) / coarse.sample_stride, sc);
        }
    }
    return {{sc.divergent, sc.divergence_step}, {sf.divergent, sf.divergence_step}};
}

} // namespace ctap
