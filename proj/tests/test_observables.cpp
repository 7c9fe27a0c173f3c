#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "ctap/observables.hpp"
#include "ctap/rng.hpp"
#include "ctap/sampling.hpp"
#include "test_util.hpp"

using ctap::cplx;
using ctap::Estimate;
using ctap::MomentAccumulator;
using ctap::MomentRecord;
using ctap::Representation;
using ctap::RngStream;
using ctap::TrajectoryState;

namespace {

TrajectoryState wigner_state(cplx a1, cplx a2, cplx a3) {
    TrajectoryState st;
    st.rep = Representation::Wigner;
    st.a = {a1, a2, a3, {}, {}, {}};
    return st;
}

TrajectoryState pp_state(const std::array<cplx, 6>& a) {
    TrajectoryState st;
    st.rep = Representation::PositiveP;
    st.a = a;
    return st;
}

} // namespace

TEST_CASE("analytic midpoint benchmarks") {
    CHECK(ctap::xi13_analytic_midpoint(ctap::MidpointState::Coherent, 200.0) == 0.0);
    CHECK(ctap::xi13_analytic_midpoint(ctap::MidpointState::Fock, 200.0) == -10000.0);
    CHECK(ctap::xi13_analytic_midpoint(ctap::MidpointState::Fock, 2.0) == -1.0);
}

TEST_CASE("wigner moments keep c31 the exact conjugate of c13") {
    RngStream rng(1, 0);
    for (int i = 0; i < 50; ++i) {
        const auto st = wigner_state(cplx(rng.normal(), rng.normal()),
                                     cplx(rng.normal(), rng.normal()),
                                     cplx(rng.normal(), rng.normal()));
        const MomentRecord m = ctap::moments_from_state(st);
        CHECK(m.c31 == std::conj(m.c13)); // bit-exact
        CHECK(m.n1.imag() == 0.0);
        CHECK(m.q13.imag() == 0.0);
    }
}

TEST_CASE("wigner sampled vacuum: population and fourth moment vanish") {
    const std::vector<double> times{0.0};
    MomentAccumulator acc(Representation::Wigner, times, 50);
    RngStream rng(2, 0);
    const long n = 200000;
    for (long i = 0; i < n; ++i) {
        const cplx a1 = ctap::sample_coherent_wigner({}, rng);
        const cplx a3 = ctap::sample_coherent_wigner({}, rng);
        acc.add(static_cast<int>(i * 50 / n), 0, ctap::moments_from_state(wigner_state(a1, {}, a3)));
    }
    const auto pops = acc.populations_at(0);
    CHECK(std::abs(pops[0].value) < 5.0 * pops[0].err);
    CHECK(std::abs(pops[2].value) < 5.0 * pops[2].err);
    // xi13 of a two-mode vacuum product is zero: the +1/4 ordering constant
    // must cancel the mean(|a1|^2 |a3|^2) = 1/4 term
    const Estimate xi = acc.xi13_at(0);
    CHECK(xi.err > 0.0);
    CHECK(std::abs(xi.value) < 5.0 * xi.err);
}

TEST_CASE("wigner coherent-coherent product state: xi13 consistent with zero") {
    const std::vector<double> times{0.0};
    MomentAccumulator acc(Representation::Wigner, times, 100);
    RngStream rng(3, 0);
    const long n = 400000;
    const cplx alpha1(7.0, 1.0), alpha3(3.0, -2.0);
    for (long i = 0; i < n; ++i) {
        const cplx a1 = ctap::sample_coherent_wigner(alpha1, rng);
        const cplx a3 = ctap::sample_coherent_wigner(alpha3, rng);
        acc.add(static_cast<int>(i * 100 / n), 0,
                ctap::moments_from_state(wigner_state(a1, {}, a3)));
    }
    const Estimate xi = acc.xi13_at(0);
    CHECK(std::abs(xi.value) < 5.0 * xi.err);
    // populations recover |alpha|^2 after the half-quantum subtraction
    const auto pops = acc.populations_at(0);
    CHECK(std::abs(pops[0].value - std::norm(alpha1)) < 5.0 * pops[0].err);
    CHECK(std::abs(pops[2].value - std::norm(alpha3)) < 5.0 * pops[2].err);
}

TEST_CASE("positive-P fock-fock product state: xi13 approaches -n1*n3") {
    // with uncorrelated wells <a1+ a3> = 0 while <n1 n3> = n1*n3, so
    // xi13 -> -(100 * 100) for two 100-atom Fock wells
    const std::vector<double> times{0.0};
    MomentAccumulator acc(Representation::PositiveP, times, 100);
    RngStream rng(4, 0);
    const long n = 400000;
    for (long i = 0; i < n; ++i) {
        const auto [a1, a1p] = ctap::sample_fock_pp(100, rng);
        const auto [a3, a3p] = ctap::sample_fock_pp(100, rng);
        acc.add(static_cast<int>(i * 100 / n), 0,
                ctap::moments_from_state(pp_state({a1, {}, a3, a1p, {}, a3p})));
    }
    const Estimate xi = acc.xi13_at(0);
    CHECK(std::abs(xi.value - ctap::xi13_analytic_midpoint(ctap::MidpointState::Fock, 200.0)) <
          5.0 * xi.err);
    const auto pops = acc.populations_at(0);
    CHECK(std::abs(pops[0].value - 100.0) < 5.0 * pops[0].err);
}

TEST_CASE("positive-P coherent product state gives exactly zero estimators") {
    const std::vector<double> times{0.0};
    MomentAccumulator acc(Representation::PositiveP, times, 2);
    const auto [a1, a1p] = ctap::sample_coherent_pp(cplx(10.0, 0.0));
    acc.add(0, 0, ctap::moments_from_state(pp_state({a1, {}, {}, a1p, {}, {}})));
    acc.add(1, 0, ctap::moments_from_state(pp_state({a1, {}, {}, a1p, {}, {}})));
    const Estimate xi = acc.xi13_at(0);
    CHECK(xi.value == 0.0); // well 3 empty: every factor carries a zero
    const auto pops = acc.populations_at(0);
    CHECK(pops[0].value == doctest::Approx(100.0));
    CHECK(pops[2].value == 0.0);
}

TEST_CASE("estimator formulas against a hand-computed two-trajectory ensemble") {
    const std::vector<double> times{0.0};
    MomentAccumulator acc(Representation::Wigner, times, 2);
    const cplx a1(1.0, 0.0), a3(0.0, 1.0);
    const cplx b1(2.0, 1.0), b3(1.0, -1.0);
    acc.add(0, 0, ctap::moments_from_state(wigner_state(a1, {}, a3)));
    acc.add(1, 0, ctap::moments_from_state(wigner_state(b1, {}, b3)));

    const cplx g13 = (std::conj(a1) * a3 + std::conj(b1) * b3) / 2.0;
    const cplx g31 = (std::conj(a3) * a1 + std::conj(b3) * b1) / 2.0;
    const double mn1 = (std::norm(a1) + std::norm(b1)) / 2.0;
    const double mn3 = (std::norm(a3) + std::norm(b3)) / 2.0;
    const double mq = (std::norm(a1) * std::norm(a3) + std::norm(b1) * std::norm(b3)) / 2.0;
    const double q_normal = mq - 0.5 * (mn1 + mn3) + 0.25;
    const double expect = (g13 * g31).real() - q_normal;

    const Estimate xi = acc.xi13_at(0);
    CHECK(xi.value == doctest::Approx(expect).epsilon(1e-14));

    const auto pops = acc.populations_at(0);
    CHECK(pops[0].value == doctest::Approx(mn1 - 0.5).epsilon(1e-14));
    CHECK(pops[2].value == doctest::Approx(mn3 - 0.5).epsilon(1e-14));
}

TEST_CASE("positive-P cross moments are conjugate on ensemble average only") {
    // correlate the wells so the cross moments are nonzero: well 3 carries a
    // rotated copy of well 1's doubled-space amplitudes
    RngStream rng(9, 0);
    const long n = 100000;
    cplx sum13{}, sum31{};
    double dev13 = 0.0;
    bool per_sample_conjugate = true;
    for (long i = 0; i < n; ++i) {
        const auto [a, ap] = ctap::sample_fock_pp(200, rng);
        const cplx i_unit(0.0, 1.0);
        const auto st = pp_state({a, {}, i_unit * a, ap, {}, -i_unit * ap});
        const MomentRecord m = ctap::moments_from_state(st);
        per_sample_conjugate = per_sample_conjugate && m.c31 == std::conj(m.c13);
        sum13 += m.c13;
        sum31 += m.c31;
        dev13 += std::norm(m.c13);
    }
    CHECK_FALSE(per_sample_conjugate); // a+ is not the conjugate of a
    const cplx mean13 = sum13 / static_cast<double>(n);
    const cplx mean31 = sum31 / static_cast<double>(n);
    const double spread = std::sqrt(dev13 / static_cast<double>(n) - std::norm(mean13));
    const double err = spread / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean31 - std::conj(mean13)) < 10.0 * err);
    CHECK(std::abs(mean13 - cplx(0.0, 200.0)) < 10.0 * err); // <a1+ a3> = i n
}

TEST_CASE("merge: identity, commutativity, pooled equivalence") {
    const std::vector<double> times{0.0, 1.0, 2.0};
    auto fill = [&times](MomentAccumulator& acc, long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            RngStream rng(7, static_cast<std::uint64_t>(i));
            for (long s = 0; s < static_cast<long>(times.size()); ++s) {
                const auto st = wigner_state(cplx(rng.normal(), rng.normal()),
                                             cplx(rng.normal(), rng.normal()),
                                             cplx(rng.normal(), rng.normal()));
                acc.add(static_cast<int>(i * 4 / 100), s, ctap::moments_from_state(st));
            }
        }
    };

    MomentAccumulator pooled(Representation::Wigner, times, 4);
    fill(pooled, 0, 100);

    // identity element
    MomentAccumulator copy = pooled;
    const MomentAccumulator empty(Representation::Wigner, times, 4);
    copy.merge(empty);
    for (long s = 0; s < 3; ++s) {
        CHECK(copy.xi13_at(s).value == pooled.xi13_at(s).value);
        CHECK(copy.count_at(s) == pooled.count_at(s));
    }

    // split 4 x 25 trajectories, merge in two different orders
    std::vector<MomentAccumulator> parts;
    for (int k = 0; k < 4; ++k) {
        parts.emplace_back(Representation::Wigner, times, 4);
        fill(parts.back(), k * 25, (k + 1) * 25);
    }
    MomentAccumulator fwd = parts[0];
    fwd.merge(parts[1]);
    fwd.merge(parts[2]);
    fwd.merge(parts[3]);
    MomentAccumulator rev = parts[3];
    rev.merge(parts[2]);
    rev.merge(parts[1]);
    rev.merge(parts[0]);

    for (long s = 0; s < 3; ++s) {
        const auto xp = pooled.xi13_at(s);
        const auto xf = fwd.xi13_at(s);
        const auto xr = rev.xi13_at(s);
        CHECK(std::abs(xf.value - xp.value) <= 1e-12 * (1.0 + std::abs(xp.value)));
        CHECK(std::abs(xr.value - xp.value) <= 1e-12 * (1.0 + std::abs(xp.value)));
        CHECK(std::abs(xf.err - xp.err) <= 1e-10 * (1.0 + xp.err));
        const auto pp = pooled.populations_at(s);
        const auto pf = fwd.populations_at(s);
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(pf[static_cast<std::size_t>(j)].value -
                           pp[static_cast<std::size_t>(j)].value) <=
                  1e-12 * (1.0 + std::abs(pp[static_cast<std::size_t>(j)].value)));
        CHECK(pf[0].err == doctest::Approx(pp[0].err).epsilon(1e-10));
    }
}

TEST_CASE("merge rejects mismatched accumulators") {
    MomentAccumulator a(Representation::Wigner, {0.0, 1.0}, 4);
    MomentAccumulator b(Representation::PositiveP, {0.0, 1.0}, 4);
    CHECK_THROWS_AS(a.merge(b), std::invalid_argument);
    MomentAccumulator c(Representation::Wigner, {0.0, 2.0}, 4);
    CHECK_THROWS_AS(a.merge(c), std::invalid_argument);
    MomentAccumulator d(Representation::Wigner, {0.0, 1.0}, 8);
    CHECK_THROWS_AS(a.merge(d), std::invalid_argument);
}

TEST_CASE("zero contributing trajectories is an error") {
    MomentAccumulator acc(Representation::Wigner, {0.0}, 4);
    CHECK_THROWS_AS((void)acc.populations_at(0), std::runtime_error);
    CHECK_THROWS_AS((void)acc.finalize(10), std::runtime_error);
}

TEST_CASE("jackknife stderr matches the analytic sampling error and scales as 1/sqrt(n)") {
    const std::vector<double> times{0.0};
    auto build = [&times](long n, std::uint64_t stream) {
        MomentAccumulator acc(Representation::Wigner, times, 100);
        RngStream rng(11, stream);
        for (long i = 0; i < n; ++i) {
            const auto st = wigner_state(ctap::sample_coherent_wigner(cplx(5.0, 0.0), rng), {},
                                         ctap::sample_coherent_wigner(cplx(2.0, 0.0), rng));
            acc.add(static_cast<int>(i * 100 / n), 0, ctap::moments_from_state(st));
        }
        return acc.populations_at(0)[0].err;
    };
    // Var(|a_W|^2) = |alpha|^2 + 1/4 for a coherent-state Wigner sample
    auto analytic = [](long n) { return std::sqrt((25.0 + 0.25) / static_cast<double>(n)); };
    const double err_small = build(4000, 1);
    const double err_big = build(16000, 2);
    CHECK(err_small == doctest::Approx(analytic(4000)).epsilon(0.25));
    CHECK(err_big == doctest::Approx(analytic(16000)).epsilon(0.25));
    const double ratio = err_small / err_big;
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.6);
}

TEST_CASE("finalize assembles the full series with divergence fractions") {
    const std::vector<double> times{0.0, 1.0};
    MomentAccumulator acc(Representation::PositiveP, times, 2);
    RngStream rng(12, 0);
    for (long i = 0; i < 10; ++i) {
        const auto [a1, a1p] = ctap::sample_fock_pp(50, rng);
        const int b = i < 5 ? 0 : 1;
        acc.add(b, 0, ctap::moments_from_state(pp_state({a1, {}, {}, a1p, {}, {}})));
        if (i % 2 == 0) // half the trajectories "diverged" before the second sample
            acc.add(b, 1, ctap::moments_from_state(pp_state({a1, {}, {}, a1p, {}, {}})));
    }
    const auto ts = acc.finalize(10);
    CHECK(ts.t == times);
    CHECK(ts.div_frac[0] == 0.0);
    CHECK(ts.div_frac[1] == doctest::Approx(0.5));
    CHECK(ts.n[0].size() == 2);
    CHECK(ts.xi.size() == 2);
}
