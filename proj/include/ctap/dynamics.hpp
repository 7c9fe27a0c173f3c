#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "ctap/model.hpp"
#include "ctap/rng.hpp"

namespace ctap {

struct TrajectoryState {
    Representation rep = Representation::GPE;
    std::array<cplx, 6> a{}; // [a1,a2,a3,a1+,a2+,a3+]; upper half unused for gpe/wigner
    double t = 0.0;
    bool divergent = false;
    long divergence_step = -1;
};

// Fixed-step integration plan. The couplings are tabulated once on the
// half-step grid t_m = t_p * m / (2 n_steps) so the steppers never evaluate
// trig in the inner loop. n_steps is a multiple of n_samples, which puts
// every sample time exactly on the step grid.
struct StepPlan {
    long n_steps = 0;
    double dt = 0.0;
    long sample_stride = 0;
    long n_samples = 0;                // sample intervals; the grid has n_samples+1 points
    double divergence_threshold = 0.0; // cutoff on any |a|^2
    std::vector<double> k12_half;
    std::vector<double> k23_half;

    double t_total() const { return dt * static_cast<double>(n_steps); }
    double sample_time(long s) const;
    std::vector<double> sample_times() const;
};

// Rounds the step count up so n_steps is a multiple of n_samples and
// dt = t_p / n_steps <= dt_request.
StepPlan make_step_plan(const ModelParams& params, double dt_request, long n_samples,
                        double divergence_threshold);

// The same grid with every step cut in two (for dt-convergence checks).
StepPlan halve_step_plan(const ModelParams& params, const StepPlan& plan);

// Mean-field / truncated Wigner drift (same functional form for both).
std::array<cplx, 3> drift_gpe(const std::array<cplx, 3>& a, const ModelParams& params,
                              double t);

// Deterministic part of the doubled-phase-space equations, with the E1, E3
// terms carried alongside E2 for generality.
std::array<cplx, 6> drift_pp(const std::array<cplx, 6>& a, const ModelParams& params,
                             double t);

// Multiplicative noise increments of the positive-P equations for Wiener
// increments dw ~ N(0, dt), one independent component per phase-space
// variable, ordered (a1, a1+, a2, a2+, a3, a3+). Principal square root.
std::array<cplx, 6> noise_pp(const std::array<cplx, 6>& a, const ModelParams& params,
                             const std::array<double, 6>& dw);

// One fixed step: classical RK4 for gpe/wigner, semi-implicit midpoint with
// start-of-step noise for positive-P. step_index selects the tabulated
// couplings. A non-finite gpe/wigner state throws (the step size is wrong or
// there is a bug); a non-finite or over-threshold positive-P state flags the
// trajectory divergent.
void step(TrajectoryState& state, const ModelParams& params, const StepPlan& plan,
          long step_index, RngStream& rng);

struct TrajectorySummary {
    bool divergent = false;
    long divergence_step = -1;
};

using SampleObserver = std::function<void(long sample_index, const TrajectoryState&)>;

// Advances from t=0 to t=t_p, invoking the observer on the sample grid
// (t=0 included; later samples only while the trajectory is alive).
// Divergence is recorded, not thrown.
TrajectorySummary integrate_trajectory(TrajectoryState& state, const ModelParams& params,
                                       const StepPlan& plan, RngStream& rng,
                                       const SampleObserver& observe);

// Integrates the same trajectory at dt and dt/2 with a shared Wiener path
// (each coarse increment is the sum of two fine ones), so the difference
// between the two results is pure time-discretization error. `fine` must be
// the plan for the halved step. Both observers see the same sample grid.
std::pair<TrajectorySummary, TrajectorySummary> integrate_trajectory_pair(
    const TrajectoryState& initial, const ModelParams& params, const StepPlan& coarse,
    const StepPlan& fine, RngStream& rng, const SampleObserver& observe_coarse,
    const SampleObserver& observe_fine);

} // namespace ctap
