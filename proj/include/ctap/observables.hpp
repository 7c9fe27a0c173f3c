#pragma once

#include <array>
#include <vector>

#include "ctap/dynamics.hpp"
#include "ctap/model.hpp"

namespace ctap {

// Raw per-trajectory moments feeding the population and xi13 estimators.
// In gpe/wigner all six are built from the three amplitudes (n_j real, c31
// the exact conjugate of c13); in positive-P the plus variables are
// independent and every moment may carry a stochastic imaginary part.
struct MomentRecord {
    cplx n1, n2, n3; // a_j+ a_j   (|a_j|^2 in gpe/wigner)
    cplx c13, c31;   // a1+ a3, a3+ a1
    cplx q13;        // a1+ a1 a3+ a3
};

MomentRecord moments_from_state(const TrajectoryState& state);

// Finalized observables on the sample grid.
struct TimeSeries {
    Representation rep = Representation::GPE;
    std::vector<double> t;
    std::array<std::vector<double>, 3> n;
    std::array<std::vector<double>, 3> n_err;
    std::vector<double> xi;
    std::vector<double> xi_err;
    std::vector<double> total;
    std::vector<double> total_err;
    std::vector<double> div_frac;
    // positive-P sanity: imaginary parts that should vanish on average
    std::array<std::vector<double>, 3> n_imag;
    std::vector<double> xi_imag;

    long n_points() const { return static_cast<long>(t.size()); }
};

struct Estimate {
    double value = 0.0;
    double err = 0.0;
    double imag = 0.0;
};

// Streaming ensemble sums bucketed by batch. Jackknife over the batches
// gives the error bars, which handles the product of means inside xi13.
// Merging adds matching batches, so any partition of the trajectory set
// across workers pools to the same result.
class MomentAccumulator {
public:
    struct Sums {
        cplx n1{}, n2{}, n3{}, c13{}, c31{}, q13{};
        long count = 0;
    };

    MomentAccumulator(Representation rep, std::vector<double> sample_times, int n_batches);

    void add(int batch, long sample_index, const MomentRecord& m);
    void merge(const MomentAccumulator& other);

    Representation representation() const { return rep_; }
    int n_batches() const { return n_batches_; }
    long n_points() const { return static_cast<long>(times_.size()); }
    const std::vector<double>& sample_times() const { return times_; }
    long count_at(long sample_index) const;

    std::array<Estimate, 3> populations_at(long sample_index) const;
    Estimate xi13_at(long sample_index) const;
    Estimate total_at(long sample_index) const;

    // n_trajectories: intended ensemble size, for the divergence fraction.
    // Throws if any sample time ends up with zero contributors.
    TimeSeries finalize(long n_trajectories) const;

private:
    const Sums& cell(int batch, long s) const;
    Sums pooled(long s) const;
    template <typename F>
    Estimate jackknife(long s, F&& statistic) const;

    Representation rep_;
    std::vector<double> times_;
    int n_batches_;
    std::vector<Sums> cells_; // [batch][sample]
};

enum class MidpointState { Coherent, Fock };

// Benchmark value of xi13 at t = t_p/2 when both end wells are assumed to
// keep their initial state family with n_total/2 atoms each: 0 for coherent
// states, -n_total^2/4 for Fock states.
double xi13_analytic_midpoint(MidpointState kind, double n_total);

} // namespace ctap
