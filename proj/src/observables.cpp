#include "ctap/observables.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace ctap {

MomentRecord moments_from_state(const TrajectoryState& st) {
    const auto& a = st.a;
    MomentRecord m;
    if (st.rep == Representation::PositiveP) {
        m.n1 = a[3] * a[0];
        m.n2 = a[4] * a[1];
        m.n3 = a[5] * a[2];
        m.c13 = a[3] * a[2];
        m.c31 = a[5] * a[0];
        m.q13 = m.n1 * m.n3;
    } else {
        m.n1 = cplx(std::norm(a[0]), 0.0);
        m.n2 = cplx(std::norm(a[1]), 0.0);
        m.n3 = cplx(std::norm(a[2]), 0.0);
        m.c13 = std::conj(a[0]) * a[2];
        m.c31 = std::conj(a[2]) * a[0];
        m.q13 = cplx(m.n1.real() * m.n3.real(), 0.0);
    }
    return m;
}

MomentAccumulator::MomentAccumulator(Representation rep, std::vector<double> sample_times,
                                     int n_batches)
    : rep_(rep), times_(std::move(sample_times)), n_batches_(n_batches) {
    if (n_batches_ < 1) throw std::invalid_argument("MomentAccumulator: need n_batches >= 1");
    if (times_.empty()) throw std::invalid_argument("MomentAccumulator: empty sample grid");
    cells_.resize(static_cast<std::size_t>(n_batches_) * times_.size());
}

const MomentAccumulator::Sums& MomentAccumulator::cell(int batch, long s) const {
    return cells_[static_cast<std::size_t>(batch) * times_.size() + static_cast<std::size_t>(s)];
}

void MomentAccumulator::add(int batch, long sample_index, const MomentRecord& m) {
    if (batch < 0 || batch >= n_batches_)
        throw std::out_of_range("MomentAccumulator::add: bad batch index");
    if (sample_index < 0 || sample_index >= n_points())
        throw std::out_of_range("MomentAccumulator::add: bad sample index");
    Sums& s = cells_[static_cast<std::size_t>(batch) * times_.size() +
                     static_cast<std::size_t>(sample_index)];
    s.n1 += m.n1;
    s.n2 += m.n2;
    s.n3 += m.n3;
    s.c13 += m.c13;
    s.c31 += m.c31;
    s.q13 += m.q13;
    s.count += 1;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.rep_ != rep_ || other.n_batches_ != n_batches_ || other.times_ != times_)
        throw std::invalid_argument(
            "MomentAccumulator::merge: representation or sample grid mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        Sums& d = cells_[i];
        const Sums& s = other.cells_[i];
        d.n1 += s.n1;
        d.n2 += s.n2;
        d.n3 += s.n3;
        d.c13 += s.c13;
        d.c31 += s.c31;
        d.q13 += s.q13;
        d.count += s.count;
    }
}

long MomentAccumulator::count_at(long s) const {
    long c = 0;
    for (int b = 0; b < n_batches_; ++b) c += cell(b, s).count;
    return c;
}

MomentAccumulator::Sums MomentAccumulator::pooled(long s) const {
    Sums all{};
    for (int b = 0; b < n_batches_; ++b) {
        const Sums& sb = cell(b, s);
        all.n1 += sb.n1;
        all.n2 += sb.n2;
        all.n3 += sb.n3;
        all.c13 += sb.c13;
        all.c31 += sb.c31;
        all.q13 += sb.q13;
        all.count += sb.count;
    }
    return all;
}

namespace {

MomentAccumulator::Sums subtract(const MomentAccumulator::Sums& a,
                                 const MomentAccumulator::Sums& b);

} // namespace

// Jackknife over batches: value from the pooled means, error bar from the
// spread of the leave-one-batch-out values. The statistic returns a complex
// number whose imaginary part is kept as a positive-P diagnostic.
template <typename F>
Estimate MomentAccumulator::jackknife(long s, F&& statistic) const {
    const Sums all = pooled(s);
    if (all.count == 0)
        throw std::runtime_error("no contributing trajectories at sample " + std::to_string(s));
    const cplx full = statistic(all);
    Estimate est{full.real(), 0.0, full.imag()};

    // accumulate deviations from the full value to dodge cancellation
    double sum_d = 0.0, sum_d2 = 0.0;
    long used = 0;
    for (int b = 0; b < n_batches_; ++b) {
        const Sums& sb = cell(b, s);
        if (sb.count == 0 || sb.count == all.count) continue;
        const double d = statistic(subtract(all, sb)).real() - full.real();
        sum_d += d;
        sum_d2 += d * d;
        ++used;
    }
    if (used >= 2) {
        const double mean_d = sum_d / static_cast<double>(used);
        double ss = sum_d2 - static_cast<double>(used) * mean_d * mean_d;
        if (ss < 0.0) ss = 0.0;
        est.err = std::sqrt(ss * static_cast<double>(used - 1) / static_cast<double>(used));
    }
    return est;
}

namespace {

MomentAccumulator::Sums subtract(const MomentAccumulator::Sums& a,
                                 const MomentAccumulator::Sums& b) {
    MomentAccumulator::Sums r;
    r.n1 = a.n1 - b.n1;
    r.n2 = a.n2 - b.n2;
    r.n3 = a.n3 - b.n3;
    r.c13 = a.c13 - b.c13;
    r.c31 = a.c31 - b.c31;
    r.q13 = a.q13 - b.q13;
    r.count = a.count - b.count;
    return r;
}

cplx mean_n(const MomentAccumulator::Sums& s, int well) {
    const double c = static_cast<double>(s.count);
    return (well == 0 ? s.n1 : well == 1 ? s.n2 : s.n3) / c;
}

// Raw Wigner means estimate symmetrically ordered moments; subtracting the
// half quantum recovers the occupation.
cplx population(Representation rep, const MomentAccumulator::Sums& s, int well) {
    cplx v = mean_n(s, well);
    if (rep == Representation::Wigner) v -= 0.5;
    return v;
}

cplx xi13_value(Representation rep, const MomentAccumulator::Sums& s) {
    const double c = static_cast<double>(s.count);
    const cplx g13 = s.c13 / c;
    const cplx g31 = s.c31 / c;
    cplx q = s.q13 / c;
    if (rep == Representation::Wigner) {
        // Symmetric-to-normal ordering of the same-mode pairs inside
        // <a1+ a1 a3+ a3>; the cross-mode moments need no correction.
        q -= 0.5 * (s.n1 / c + s.n3 / c);
        q += 0.25;
    }
    return g13 * g31 - q;
}

} // namespace

std::array<Estimate, 3> MomentAccumulator::populations_at(long s) const {
    std::array<Estimate, 3> out;
    for (int well = 0; well < 3; ++well)
        out[static_cast<std::size_t>(well)] = jackknife(
            s, [this, well](const Sums& sums) { return population(rep_, sums, well); });
    return out;
}

Estimate MomentAccumulator::xi13_at(long s) const {
    return jackknife(s, [this](const Sums& sums) { return xi13_value(rep_, sums); });
}

Estimate MomentAccumulator::total_at(long s) const {
    return jackknife(s, [this](const Sums& sums) {
        return population(rep_, sums, 0) + population(rep_, sums, 1) +
               population(rep_, sums, 2);
    });
}

TimeSeries MomentAccumulator::finalize(long n_trajectories) const {
    if (n_trajectories < 1)
        throw std::invalid_argument("MomentAccumulator::finalize: need n_trajectories >= 1");
    TimeSeries ts;
    ts.rep = rep_;
    ts.t = times_;
    const long np = n_points();
    for (int j = 0; j < 3; ++j) {
        ts.n[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(np));
        ts.n_err[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(np));
        ts.n_imag[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(np));
    }
    ts.xi.resize(static_cast<std::size_t>(np));
    ts.xi_err.resize(static_cast<std::size_t>(np));
    ts.xi_imag.resize(static_cast<std::size_t>(np));
    ts.total.resize(static_cast<std::size_t>(np));
    ts.total_err.resize(static_cast<std::size_t>(np));
    ts.div_frac.resize(static_cast<std::size_t>(np));

    for (long s = 0; s < np; ++s) {
        const auto idx = static_cast<std::size_t>(s);
        const auto pops = populations_at(s);
        for (int j = 0; j < 3; ++j) {
            const auto ji = static_cast<std::size_t>(j);
            ts.n[ji][idx] = pops[ji].value;
            ts.n_err[ji][idx] = pops[ji].err;
            ts.n_imag[ji][idx] = pops[ji].imag;
        }
        const Estimate xi = xi13_at(s);
        ts.xi[idx] = xi.value;
        ts.xi_err[idx] = xi.err;
        ts.xi_imag[idx] = xi.imag;
        const Estimate tot = total_at(s);
        ts.total[idx] = tot.value;
        ts.total_err[idx] = tot.err;
        ts.div_frac[idx] =
            1.0 - static_cast<double>(count_at(s)) / static_cast<double>(n_trajectories);
    }
    return ts;
}

double xi13_analytic_midpoint(MidpointState kind, double n_total) {
    switch (kind) {
        case MidpointState::Coherent: return 0.0;
        case MidpointState::Fock: return -0.25 * n_total * n_total;
    }
    return 0.0;
}

} // namespace ctap
