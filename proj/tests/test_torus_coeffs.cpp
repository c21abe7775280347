#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wienerlevy.hpp"

using namespace wienerlevy;

namespace {

constexpr cplx I(0.0, 1.0);
constexpr double two_pi_ = 2.0 * std::numbers::pi;

cplx e(double t) { return std::polar(1.0, two_pi_ * t); }

std::size_t flat_of(const TorusGrid& g, const std::vector<int>& k) {
    std::size_t f = 0;
    for (int kj : k) f = f * g.k_side() + static_cast<std::size_t>(kj + static_cast<int>(g.k_max));
    return f;
}

TorusGrid grid(std::size_t n, std::size_t m_theta, std::size_t m_tau, std::size_t p_max = 2) {
    TorusGrid g;
    g.n_theta = n;
    g.m_theta = m_theta;
    g.k_max = (m_theta - 1) / 2;
    g.m_tau = m_tau;
    g.p_max = p_max;
    return g;
}

// Two moving atoms over basis {1, sqrt 2} plus a constant.
PointMeasure two_atom_source(cplx c0, cplx a1, cplx a2) {
    auto b = make_basis(1, {{1.0}, {std::sqrt(2.0)}});
    PointMeasure s(b);
    s.add({0, 0}, c0);
    s.add({1, 0}, a1);
    s.add({0, 1}, a2);
    return s;
}

TorusSamples filled(const TorusGrid& g, const std::function<cplx(const std::vector<double>&, double, double)>& f) {
    TorusSamples s{g, std::vector<cplx>(g.theta_points() * g.tau_points())};
    std::vector<double> theta(g.n_theta);
    for (std::size_t t = 0; t < g.tau_points(); ++t) {
        const double t1 = static_cast<double>(t / g.m_tau) / static_cast<double>(g.m_tau);
        const double t2 = static_cast<double>(t % g.m_tau) / static_cast<double>(g.m_tau);
        for (std::size_t j = 0; j < g.theta_points(); ++j) {
            std::size_t rem = j;
            for (std::size_t d = g.n_theta; d-- > 0;) {
                theta[d] = static_cast<double>(rem % g.m_theta) / static_cast<double>(g.m_theta);
                rem /= g.m_theta;
            }
            s.values[t * g.theta_points() + j] = f(theta, t1, t2);
        }
    }
    return s;
}

}  // namespace

TEST(SampleT, NoMovingAtomsIdentity) {
    auto b = make_basis(1, {{1.0}});
    const double eps = 0.01;
    SmoothedExtension ext(builtin_function("identity"), CompactSet::disc(0.0, 1.0), eps, 1.0);
    const auto s = sample_T(torus_source(PointMeasure(b)), ext, grid(0, 4, 8, 1));
    ASSERT_EQ(s.values.size(), 64u);
    EXPECT_NEAR(std::abs(s.values[0] - cplx(3.0 * eps, 3.0 * eps)), 0.0, 1e-15);
    // tau = (1/4, 1/2): zeta1 = 3 eps i, zeta2 = -3 eps.
    EXPECT_NEAR(std::abs(s.values[2 * 8 + 4] - (3.0 * eps * e(0.25) + I * 3.0 * eps * e(0.5))), 0.0, 1e-15);
}

TEST(SampleT, SingleUnitAtom) {
    auto b = make_basis(1, {{1.0}});
    const double eps = 0.02;
    SmoothedExtension ext(builtin_function("identity"), CompactSet::disc(1.0, 0.5), eps, 1.0);
    const auto src = torus_source(PointMeasure::dirac(b, {1}));
    const auto s = sample_T(src, ext, grid(1, 8, 4, 1));
    // theta = 0, tau = 0: zeta1 = 1 + 3 eps, zeta2 = 3 eps.
    EXPECT_NEAR(std::abs(s.values[0] - cplx(1.0 + 3.0 * eps, 3.0 * eps)), 0.0, 1e-15);
    // theta = 1/2 is w = -1, at distance 1.5 from K: outside the support.
    EXPECT_EQ(s.values[4], cplx{});
}

TEST(ThetaFft, ConstantAndSingleMode) {
    const auto g = grid(2, 8, 4, 1);
    auto b = theta_fft(filled(g, [](const auto&, double, double) { return cplx(1.0); }));
    for (std::size_t kf = 0; kf < g.k_count(); ++kf)
        for (std::size_t t = 0; t < g.tau_points(); ++t)
            EXPECT_NEAR(std::abs(b.at(kf, t) - (kf == flat_of(g, {0, 0}) ? 1.0 : 0.0)), 0.0, 1e-12);
    b = theta_fft(filled(g, [](const auto& th, double, double) { return e(th[0]); }));
    for (std::size_t kf = 0; kf < g.k_count(); ++kf)
        for (std::size_t t = 0; t < g.tau_points(); ++t)
            EXPECT_NEAR(std::abs(b.at(kf, t) - (kf == flat_of(g, {1, 0}) ? 1.0 : 0.0)), 0.0, 1e-12);
}

TEST(ThetaFft, MatchesDirectQuadrature) {
    const auto s = two_atom_source(0.5, cplx(0.3, 0.1), cplx(-0.1, 0.15));
    const auto h = builtin_function("exp");
    const auto k = CompactSet::disc(0.5, 0.6);
    const double eps = choose_epsilon(1.0);
    SmoothedExtension ext(h, k, eps, 1.0);
    const auto g = grid(2, 32, 8, 2);
    const auto src = torus_source(s);
    const auto b = sample_and_theta_fft(src, ext, g);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> ki(-5, 5);
    std::uniform_int_distribution<std::size_t> ti(0, g.tau_points() - 1);
    const std::size_t q = 2 * g.m_theta;
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<int> kk = {ki(rng), ki(rng)};
        const std::size_t t = ti(rng);
        const cplx e1 = 3.0 * eps * e(static_cast<double>(t / g.m_tau) / g.m_tau);
        const cplx e2 = 3.0 * eps * e(static_cast<double>(t % g.m_tau) / g.m_tau);
        cplx acc{};
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) {
                const double th1 = static_cast<double>(i) / q, th2 = static_cast<double>(j) / q;
                const cplx w = src.constant + src.amplitudes[0] * e(th1) + src.amplitudes[1] * e(th2);
                acc += ext(w.real() + e1, w.imag() + e2) * e(-(kk[0] * th1 + kk[1] * th2));
            }
        acc /= static_cast<double>(q * q);
        EXPECT_NEAR(std::abs(b.at(flat_of(g, kk), t) - acc), 0.0, 1e-8);
    }
}

TEST(ThetaFft, ParsevalAndStableBound) {
    const auto s = two_atom_source(0.7, cplx(0.25, 0.05), cplx(0.0, -0.2));
    const auto h = builtin_function("reciprocal");
    const auto k = CompactSet::disc(0.7, 0.5);
    const double eps = choose_epsilon(h.domain_margin(k));
    SmoothedExtension ext(h, k, eps);
    const auto src = torus_source(s);
    const auto coarse = sample_and_theta_fft(src, ext, grid(2, 32, 8));
    const auto fine = sample_and_theta_fft(src, ext, grid(2, 64, 8));
    for (const auto* b : {&coarse, &fine})
        for (std::size_t t = 0; t < b->grid.tau_points(); ++t) EXPECT_LE(b->energy[t], b->mean_square[t] + 1e-8);
    EXPECT_GT(coarse.b_norm_bound(), 0.0);
    EXPECT_LT(std::abs(fine.b_norm_bound() - coarse.b_norm_bound()), 0.05 * coarse.b_norm_bound());
}

TEST(TauFft, SpecExamples) {
    auto g = grid(1, 4, 8, 2);
    auto b = detail::empty_btensor(g);
    const std::vector<cplx> row = {0.5, cplx(0.0, 1.0), -0.25};
    for (std::size_t kf = 0; kf < g.k_count(); ++kf)
        for (std::size_t t = 0; t < g.tau_points(); ++t) b.values[kf * g.tau_points() + t] = row[kf % 3];
    auto c = tau_fft(b);
    for (std::size_t kf = 0; kf < g.k_count(); ++kf)
        for (std::size_t p = 0; p <= g.p_max; ++p)
            for (std::size_t q = 0; q <= g.p_max; ++q)
                EXPECT_NEAR(std::abs(c.at(kf, p, q) - (p == 0 && q == 0 ? row[kf % 3] : cplx{})), 0.0, 1e-15);

    for (std::size_t t = 0; t < g.tau_points(); ++t)
        b.values[t] = e(static_cast<double>(t / g.m_tau) / static_cast<double>(g.m_tau));
    c = tau_fft(b);
    for (std::size_t p = 0; p <= g.p_max; ++p)
        for (std::size_t q = 0; q <= g.p_max; ++q)
            EXPECT_NEAR(std::abs(c.at(0, p, q) - (p == 1 && q == 0 ? 1.0 : 0.0)), 0.0, 1e-15);
}

TEST(TauFft, SquareWithoutMovingAtoms) {
    auto b = make_basis(1, {{1.0}});
    const double eps = 0.05;
    SmoothedExtension ext(builtin_function("square"), CompactSet::disc(0.0, 1.0), eps, 1.0);
    const auto c = torus_coefficients(PointMeasure(b), ext, grid(0, 4, 16, 3));
    const double e2 = eps * eps;
    EXPECT_NEAR(std::abs(c.at(0, 0, 0)), 0.0, 1e-16);
    EXPECT_NEAR(std::abs(c.at(0, 2, 0) - 9.0 * e2), 0.0, 1e-16);
    EXPECT_NEAR(std::abs(c.at(0, 0, 2) + 9.0 * e2), 0.0, 1e-16);
    EXPECT_NEAR(std::abs(c.at(0, 1, 1) - 18.0 * e2 * I), 0.0, 1e-16);
    for (std::size_t p = 0; p <= 3; ++p)
        for (std::size_t q = 0; q <= 3; ++q) {
            if ((p == 2 && q == 0) || (p == 0 && q == 2) || (p == 1 && q == 1)) continue;
            EXPECT_NEAR(std::abs(c.at(0, p, q)), 0.0, 1e-16);
        }
}

TEST(TauFft, CoefficientsBoundedBySupOverTau) {
    const auto s = two_atom_source(0.6, cplx(0.2, 0.1), cplx(0.1, -0.1));
    SmoothedExtension ext(builtin_function("exp"), CompactSet::disc(0.6, 0.5), 0.05, 1.0);
    const auto g = grid(2, 16, 16, 4);
    const auto b = sample_and_theta_fft(torus_source(s), ext, g);
    const auto c = tau_fft(b);
    double row_sum = 0.0;
    for (std::size_t kf = 0; kf < g.k_count(); ++kf) {
        double sup = 0.0;
        for (std::size_t t = 0; t < g.tau_points(); ++t) sup = std::max(sup, std::abs(b.at(kf, t)));
        row_sum += sup;
        for (std::size_t p = 0; p <= g.p_max; ++p)
            for (std::size_t q = 0; q <= g.p_max; ++q) EXPECT_LE(std::abs(c.at(kf, p, q)), sup * (1.0 + 1e-12) + 1e-18);
    }
    EXPECT_NEAR(c.row_bound, row_sum, 1e-12 * row_sum);
    EXPECT_EQ(c.coeffs.size(), g.k_count() * g.pq_count());
}

TEST(CoefficientMeasure, PlacesAtomsOnLattice) {
    const auto s = two_atom_source(0.5, 0.25, 0.2);
    SmoothedExtension ext(builtin_function("square"), CompactSet::disc(0.5, 0.5), 0.03, 1.0);
    const auto src = torus_source(s);
    const auto c = torus_coefficients(s, ext, grid(2, 8, 8, 2));
    // (3 eps terms vanish at p = q = 0): nu_00 = s * s.
    const auto nu = coefficient_measure(c, src, 0, 0, 1e-15);
    const auto sq = convolve(s, s);
    EXPECT_LE(total_variation(add(nu, sq, -1.0)), 1e-14);
    EXPECT_THROW(coefficient_measure(c, src, 3, 0), ValidationError);
}

TEST(DecayCheck, SpecExamples) {
    const auto g = grid(2, 8, 4, 1);
    auto rep = decay_check(theta_fft(filled(g, [](const auto&, double, double) { return cplx(0.0, 2.0); })));
    EXPECT_NEAR(rep.c_hat, 2.0, 1e-12);
    EXPECT_EQ(rep.violations, 0u);
    rep = decay_check(theta_fft(filled(g, [](const auto& th, double, double) { return 0.5 * e(2 * th[0] - 3 * th[1]); })));
    EXPECT_NEAR(rep.c_hat, 0.5 * 4.0 * 9.0, 1e-10);
}

TEST(DecayCheck, TailBoundCoversDoubledBlock) {
    const auto s = two_atom_source(1.5, cplx(0.25, 0.1), cplx(-0.1, 0.12));
    const auto h = builtin_function("reciprocal");
    const auto k = CompactSet::disc(1.5, 0.5);
    SmoothedExtension ext(h, k, choose_epsilon(h.domain_margin(k)));
    const auto src = torus_source(s);
    auto small = grid(2, 64, 8);
    small.k_max = 7;
    const auto rep = decay_check(sample_and_theta_fft(src, ext, small), std::size_t{2});
    EXPECT_EQ(rep.violations, 0u);
    auto big = grid(2, 64, 8);
    big.k_max = 15;
    const auto b = sample_and_theta_fft(src, ext, big);
    double tail = 0.0;
    for (std::size_t t = 0; t < big.tau_points(); ++t) {
        double sum = 0.0;
        for (std::size_t kf = 0; kf < big.k_count(); ++kf) {
            const auto kk = big.k_of(kf);
            if (std::abs(kk[0]) > 7 || std::abs(kk[1]) > 7) sum += std::abs(b.at(kf, t));
        }
        tail = std::max(tail, sum);
    }
    EXPECT_LE(tail, rep.tail_bound);
}

TEST(DecayTail, ClosedFormAgainstBruteForce) {
    for (std::size_t n : {1u, 2u}) {
        for (std::size_t kmax : {1u, 3u, 10u}) {
            double brute = 0.0;
            const int lim = 4000;
            if (n == 1) {
                for (int k = static_cast<int>(kmax) + 1; k <= lim; ++k) brute += 2.0 / (double(k) * k);
            } else {
                double inner = 1.0, outer = 0.0;
                for (int k = 1; k <= static_cast<int>(kmax); ++k) inner += 2.0 / (double(k) * k);
                for (int k = static_cast<int>(kmax) + 1; k <= lim; ++k) outer += 2.0 / (double(k) * k);
                brute = (inner + outer) * (inner + outer) - inner * inner;
            }
            EXPECT_GE(decay_tail_sum(n, kmax), brute) << n << " " << kmax;
        }
    }
    EXPECT_EQ(decay_tail_sum(0, 5), 0.0);
}

TEST(NeumannTail, ClosedForms) {
    double brute = 0.0;
    for (int p = 0; p < 200; ++p)
        for (int q = 0; q < 200; ++q)
            if (p + q > 10) brute += std::pow(0.5, p + q);
    EXPECT_NEAR(neumann_tail(0.5, 0.5, 10), brute, 1e-14);
    brute = 0.0;
    for (int p = 0; p < 300; ++p)
        for (int q = 0; q < 300; ++q)
            if (p + q > 6) brute += std::pow(0.3, p) * std::pow(0.6, q);
    EXPECT_NEAR(neumann_tail(0.3, 0.6, 6), brute, 1e-13);
    EXPECT_NEAR(neumann_tail(0.0, 0.4, 3), std::pow(0.4, 4) / 0.6, 1e-16);
    EXPECT_THROW(neumann_tail(1.0, 0.2, 3), ValidationError);
}

TEST(SelectTruncation, SpecExamples) {
    TruncationRequest req;
    req.n_theta = 2;
    req.delta = 1e6;
    auto g = select_truncation(req);
    EXPECT_EQ(g.k_max, 1u);
    EXPECT_EQ(g.p_max, 1u);
    EXPECT_EQ(g.m_theta, 64u);

    // N = 2, C = 1, delta = 1e-4: the 1/K tail puts K_max near 1.7e5, far
    // beyond any memory budget.
    req.delta = 1e-4;
    req.c_hat = 1.0;
    req.contraction = 0.5;
    std::size_t kmin = 1;
    while (decay_tail_sum(2, kmin) >= 1e-4) ++kmin;
    EXPECT_GT(kmin, 100000u);
    EXPECT_LT(kmin, 200000u);
    EXPECT_THROW(select_truncation(req), ConfigurationError);

    req.n_theta = 1;
    req.delta = 1e-3;
    req.min_m_theta = 4;
    req.min_m_tau = 4;
    g = select_truncation(req);
    EXPECT_LT(decay_tail_sum(1, g.k_max), 1e-3);
    EXPECT_GE(decay_tail_sum(1, g.k_max - 1), 1e-3);
    EXPECT_LT(neumann_tail(0.5, 0.5, g.p_max), 1e-3);
    EXPECT_GE(neumann_tail(0.5, 0.5, g.p_max - 1), 1e-3);
    EXPECT_GT(g.m_theta, 2 * g.k_max);
    EXPECT_GT(g.m_tau, 2 * g.p_max);

    req.memory_budget = 1024;
    EXPECT_THROW(select_truncation(req), ConfigurationError);
}

TEST(TorusGrid, Validation) {
    auto g = grid(2, 16, 8, 3);
    EXPECT_NO_THROW(g.validate());
    g.k_max = 8;
    EXPECT_THROW(g.validate(), ValidationError);
    g.k_max = 7;
    g.p_max = 4;
    EXPECT_THROW(g.validate(), ValidationError);
    g.p_max = 3;
    EXPECT_THROW(g.validate(1000), ConfigurationError);
}

TEST(Aliasing, HalfGridEstimateIsSmallForResolvedData) {
    const auto s = two_atom_source(0.6, cplx(0.2, 0.1), cplx(0.1, -0.1));
    SmoothedExtension ext(builtin_function("exp"), CompactSet::disc(0.6, 0.5), 0.05, 1.0);
    const auto c = torus_coefficients(s, ext, grid(2, 32, 32, 6));
    EXPECT_GE(c.aliasing_estimate(), 0.0);
    EXPECT_LT(c.aliasing_estimate(), 1e-8);
}
