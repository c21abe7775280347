#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wienerlevy.hpp"

using namespace wienerlevy;

namespace {

BasisPtr line_basis() { return make_basis(1, {{1.0}}); }
BasisPtr two_basis() { return make_basis(1, {{1.0}, {std::sqrt(2.0)}}); }

GridDensity triangle(std::size_t half = 200, double dx = 0.01) {
    auto g = GridDensity::symmetric(half, dx);
    std::vector<cplx> s(g.size());
    // Index-symmetric construction keeps the samples bit-identical under reflection.
    for (std::size_t j = 0; j < s.size(); ++j)
        s[j] = std::max(0.0, 1.0 - std::abs(static_cast<double>(j) - static_cast<double>(half)) * dx);
    return g.with_samples(s);
}

GridDensity gaussian_packet(std::mt19937_64& rng, std::size_t half = 400, double dx = 0.05) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c = 0.5 * u(rng), w = 0.8 + 0.3 * u(rng), f = 0.5 * u(rng);
    const cplx a(u(rng), u(rng));
    auto g = GridDensity::symmetric(half, dx);
    std::vector<cplx> s(g.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double x = g.x(j);
        s[j] = a * std::exp(-(x - c) * (x - c) / (w * w)) * unit_phase(-f * x);
    }
    return g.with_samples(s);
}

PointMeasure random_point(const BasisPtr& b, std::size_t count, std::mt19937_64& rng, int range = 2) {
    std::uniform_int_distribution<int> ki(-range, range);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointMeasure m(b);
    for (std::size_t i = 0; i < count; ++i) {
        LatticeIndex k(b->size());
        for (auto& v : k) v = ki(rng);
        m.add(k, cplx(u(rng), u(rng)) * 0.5);
    }
    return m;
}

std::vector<double> at(double y) { return {y}; }

}  // namespace

TEST(TotalVariation, SpecExamples) {
    auto b = line_basis();
    EXPECT_DOUBLE_EQ(total_variation(MixedMeasure(PointMeasure::unit(b))), 1.0);
    PointMeasure m(b);
    m.add({0}, 1.0);
    m.add({1}, 0.4);
    EXPECT_DOUBLE_EQ(total_variation(MixedMeasure(m)), 1.4);
    // Nodes at the kinks make the Riemann sum exact for the triangle.
    MixedMeasure tri(PointMeasure(b), triangle());
    EXPECT_NEAR(total_variation(tri), 1.0, 1e-12);
}

TEST(TotalVariation, SumsBothParts) {
    auto b = line_basis();
    PointMeasure m(b);
    m.add({2}, cplx(0.3, 0.4));
    MixedMeasure mm(m, triangle());
    EXPECT_NEAR(total_variation(mm), 0.5 + 1.0, 1e-12);
}

TEST(FourierAt, SpecExamples) {
    auto b = line_basis();
    const auto d0 = PointMeasure::unit(b);
    EXPECT_EQ(fourier_at(d0, at(0.37)), cplx(1.0, 0.0));
    const auto dg = PointMeasure::dirac(b, {1});
    const cplx half = fourier_at(dg, at(0.5));
    EXPECT_NEAR(half.real(), -1.0, 1e-15);
    EXPECT_NEAR(half.imag(), 0.0, 1e-15);
    PointMeasure m(b);
    m.add({0}, 1.0);
    m.add({1}, 0.4);
    const cplx q = fourier_at(m, at(0.25));
    EXPECT_NEAR(q.real(), 1.0, 1e-15);
    EXPECT_NEAR(q.imag(), -0.4, 1e-15);
}

TEST(FourierAt, MixedIsSumOfParts) {
    std::mt19937_64 rng(1);
    auto b = two_basis();
    const auto p = random_point(b, 4, rng);
    const auto d = gaussian_packet(rng);
    MixedMeasure m(p, d);
    for (double y : {-1.3, 0.0, 0.4, 2.2}) EXPECT_NEAR(std::abs(fourier_at(m, at(y)) - p.fourier_at(at(y)) - d.fourier_at(y)), 0.0, 1e-14);
}

TEST(FourierAt, EvaluatorMatchesDirectSum) {
    std::mt19937_64 rng(2);
    auto b = make_basis(2, {{1.0, 0.0}, {0.3, 1.7}, {-0.6, 0.2}});
    const auto m = random_point(b, 30, rng, 4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> y = {u(rng), u(rng)};
        cplx direct{};
        for (const auto& [k, c] : m.atoms()) {
            const auto rho = b->location(k);
            direct += c * std::exp(cplx(0.0, -2.0 * std::numbers::pi * (rho[0] * y[0] + rho[1] * y[1])));
        }
        EXPECT_NEAR(std::abs(m.fourier_at(y) - direct), 0.0, 1e-12);
    }
}

TEST(FourierAt, DimensionMismatchThrows) {
    auto b = line_basis();
    EXPECT_THROW(PointMeasure::unit(b).fourier_at(std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST(Convolve, BinomialExample) {
    auto b = line_basis();
    PointMeasure m(b);
    m.add({0}, 1.0);
    m.add({1}, 0.5);
    const auto sq = convolve(m, m);
    EXPECT_EQ(sq.size(), 3u);
    EXPECT_EQ(sq.coefficient({0}), cplx(1.0));
    EXPECT_EQ(sq.coefficient({1}), cplx(1.0));
    EXPECT_EQ(sq.coefficient({2}), cplx(0.25));
}

TEST(Convolve, UnitIsIdentity) {
    std::mt19937_64 rng(3);
    auto b = two_basis();
    const auto p = random_point(b, 6, rng);
    MixedMeasure m(p, gaussian_packet(rng));
    const auto out = convolve(MixedMeasure(PointMeasure::unit(b)), m);
    EXPECT_EQ(out.point(), m.point());
    ASSERT_TRUE(out.density());
    for (std::size_t j = 0; j < m.density()->size(); ++j)
        EXPECT_EQ(out.density()->samples()[j], m.density()->samples()[j]);
}

TEST(Convolve, AtomShiftsTriangle) {
    auto b = make_basis(1, {{0.25}});  // 25 grid steps
    const auto tri = triangle();
    const auto atom = PointMeasure::dirac(b, {1}, 0.3);
    const auto out = convolve(MixedMeasure(atom), MixedMeasure(PointMeasure(b), tri));
    ASSERT_TRUE(out.density());
    for (std::size_t j = 0; j < tri.size(); ++j) {
        const double expect = 0.3 * std::max(0.0, 1.0 - std::abs(tri.x(j) - 0.25));
        EXPECT_NEAR(std::abs(out.density()->samples()[j] - expect), 0.0, 1e-15);
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int t = 0; t < 50; ++t) {
        const double y = u(rng);
        const cplx lhs = out.density()->fourier_at(y);
        const cplx rhs = atom.fourier_at(at(y)) * tri.fourier_at(y);
        EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-8);
    }
}

TEST(Convolve, FractionalShiftOfSmoothDensity) {
    std::mt19937_64 rng(5);
    auto b = make_basis(1, {{0.123456}});
    const auto g = gaussian_packet(rng);
    const auto atom = PointMeasure::dirac(b, {1}, cplx(0.2, -0.1));
    MassLedger ledger;
    const auto out = convolve(atom, g, &ledger);
    EXPECT_LT(ledger.cropped, 1e-12);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 50; ++t) {
        const double y = u(rng);
        EXPECT_NEAR(std::abs(out.fourier_at(y) - atom.fourier_at(at(y)) * g.fourier_at(y)), 0.0, 1e-8);
    }
}

TEST(Convolve, FourierHomomorphism) {
    std::mt19937_64 rng(6);
    auto b = two_basis();
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        MixedMeasure a(random_point(b, 4, rng), gaussian_packet(rng));
        MixedMeasure c(random_point(b, 3, rng), gaussian_packet(rng));
        const auto prod = convolve(a, c);
        const double scale = 1.0 + total_variation(a) * total_variation(c);
        for (int t = 0; t < 100; ++t) {
            const double y = u(rng);
            const cplx err = fourier_at(prod, at(y)) - fourier_at(a, at(y)) * fourier_at(c, at(y));
            EXPECT_LE(std::abs(err), 1e-8 * scale);
        }
    }
}

TEST(Convolve, PointHomomorphismAndSubmultiplicativity) {
    std::mt19937_64 rng(7);
    auto b = two_basis();
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_point(b, 8, rng, 3);
        const auto c = random_point(b, 8, rng, 3);
        const auto prod = convolve(a, c);
        EXPECT_LE(prod.total_variation(), a.total_variation() * c.total_variation() + 1e-10);
        for (int t = 0; t < 100; ++t) {
            const double y = u(rng);
            EXPECT_LE(std::abs(prod.fourier_at(at(y)) - a.fourier_at(at(y)) * c.fourier_at(at(y))), 1e-12);
        }
    }
}

TEST(Convolve, DensityPairIsLinear) {
    std::mt19937_64 rng(8);
    const auto f = gaussian_packet(rng), g = gaussian_packet(rng);
    MassLedger ledger;
    const auto fg = convolve(f, g, &ledger);
    EXPECT_LT(ledger.cropped, 1e-12);
    // Direct linear convolution at a few nodes.
    const auto origin = *f.origin_index();
    for (std::size_t n : {origin - 30, origin, origin + 17}) {
        cplx direct{};
        for (std::size_t i = 0; i < f.size(); ++i) {
            const long long j = static_cast<long long>(n + origin) - static_cast<long long>(i);
            if (j >= 0 && j < static_cast<long long>(g.size()))
                direct += f.samples()[i] * g.samples()[static_cast<std::size_t>(j)];
        }
        EXPECT_NEAR(std::abs(fg.samples()[n] - f.dx() * direct), 0.0, 1e-12);
    }
}

TEST(Convolve, MismatchedGridsThrow) {
    std::mt19937_64 rng(9);
    const auto f = gaussian_packet(rng, 400, 0.05);
    const auto g = gaussian_packet(rng, 300, 0.05);
    EXPECT_THROW(convolve(f, g), ValidationError);
    EXPECT_THROW(convolve(PointMeasure::unit(line_basis()), PointMeasure::unit(two_basis())), ValidationError);
}

TEST(Convolve, PruneBooksLostMass) {
    auto b = line_basis();
    PointMeasure a(b);
    a.add({0}, 1.0);
    a.add({1}, 1e-9);
    MassLedger ledger;
    ledger.prune_relative = 1e-12;
    const auto sq = convolve(a, a, &ledger);
    EXPECT_EQ(sq.coefficient({2}), cplx{});
    EXPECT_NEAR(ledger.pruned, 1e-18, 1e-30);
}

TEST(ConjugateReflect, SpecExamples) {
    auto b = line_basis();
    const auto m = PointMeasure::dirac(b, {1}, cplx(0.0, 1.0));
    const auto r = conjugate_reflect(m);
    EXPECT_EQ(r.size(), 1u);
    EXPECT_EQ(r.coefficient({-1}), cplx(0.0, -1.0));
    const auto tri = triangle();
    EXPECT_EQ(conjugate_reflect(tri), tri);
}

TEST(ConjugateReflect, TransformIsConjugate) {
    std::mt19937_64 rng(10);
    auto b = make_basis(2, {{1.0, 0.2}, {0.0, 1.0}, {0.7, -0.4}, {std::sqrt(2.0), 0.0}, {0.1, 0.9}});
    PointMeasure m(b);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n = 0; n < 5; ++n) {
        LatticeIndex k(5, 0);
        k[n] = 1 + static_cast<int>(n % 2);
        m.add(k, cplx(u(rng), u(rng)));
    }
    const auto r = conjugate_reflect(m);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> y = {4.0 * u(rng), 4.0 * u(rng)};
        EXPECT_NEAR(std::abs(r.fourier_at(y) - std::conj(m.fourier_at(y))), 0.0, 1e-12);
    }
}

TEST(ConjugateReflect, Involution) {
    std::mt19937_64 rng(11);
    auto b = two_basis();
    MixedMeasure m(random_point(b, 7, rng), gaussian_packet(rng));
    EXPECT_EQ(conjugate_reflect(conjugate_reflect(m)), m);
}

TEST(TruncateAtoms, SpecExamples) {
    auto b = make_basis(1, {{1.0}, {std::sqrt(2.0)}, {std::sqrt(3.0)}});
    PointMeasure two(b);
    two.add({0, 0, 0}, 1.0);
    two.add({1, 0, 0}, 0.4);
    auto t = truncate_atoms(two, 0.05);
    EXPECT_EQ(t.kept, two);
    EXPECT_EQ(t.tail_norm, 0.0);

    PointMeasure four = two;
    four.add({0, 1, 0}, 0.03);
    four.add({0, 0, 1}, 0.01);
    t = truncate_atoms(four, 0.05);
    EXPECT_EQ(t.kept, two);
    EXPECT_NEAR(t.tail_norm, 0.04, 1e-16);

    t = truncate_atoms(PointMeasure(b), 0.05);
    EXPECT_TRUE(t.kept.empty());
    EXPECT_EQ(t.tail_norm, 0.0);
}

TEST(TruncateAtoms, NormsAddUp) {
    std::mt19937_64 rng(12);
    auto b = two_basis();
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_point(b, 12, rng, 4);
        for (double budget : {1e-3, 0.1, 0.5}) {
            const auto t = truncate_atoms(m, budget);
            EXPECT_NEAR(t.kept.total_variation() + t.tail_norm, m.total_variation(), 1e-14);
            EXPECT_LT(t.tail_norm, budget);
        }
    }
}

TEST(TruncateAtoms, MovingCapKeepsOrigin) {
    auto b = two_basis();
    PointMeasure m(b);
    m.add({0, 0}, 0.1);
    m.add({1, 0}, 0.5);
    m.add({0, 1}, 0.4);
    const auto t = truncate_atoms(m, 1e-6, std::size_t{1});
    EXPECT_EQ(t.kept.size(), 2u);
    EXPECT_EQ(t.kept.coefficient({0, 0}), cplx(0.1));
    EXPECT_EQ(t.kept.coefficient({1, 0}), cplx(0.5));
    EXPECT_NEAR(t.tail_norm, 0.4, 1e-16);
}

TEST(ResidualSplit, ZeroWhenExact) {
    std::mt19937_64 rng(13);
    auto b = two_basis();
    const auto s = random_point(b, 5, rng);
    const auto split = residual_split(MixedMeasure(s), std::nullopt, s);
    EXPECT_TRUE(split.real_part.point().empty());
    EXPECT_TRUE(split.imag_part.point().empty());
}

TEST(ResidualSplit, HandExample) {
    auto b = line_basis();
    PointMeasure mu(b);
    mu.add({0}, 1.0);
    mu.add({1}, 0.04);
    const auto split = residual_split(MixedMeasure(mu), std::nullopt, PointMeasure::unit(b));
    EXPECT_EQ(split.real_part.point().size(), 2u);
    EXPECT_NEAR(std::abs(split.real_part.point().coefficient({1}) - 0.02), 0.0, 1e-17);
    EXPECT_NEAR(std::abs(split.real_part.point().coefficient({-1}) - 0.02), 0.0, 1e-17);
}

TEST(ResidualSplit, TransformIdentitiesAndReconstruction) {
    std::mt19937_64 rng(14);
    auto b = two_basis();
    const auto pt = random_point(b, 6, rng);
    const auto dens = gaussian_packet(rng);
    MixedMeasure mu(pt, dens);
    const auto s = truncate_atoms(pt, 0.3).kept;
    const auto v = scaled(dens, 0.9);
    const auto split = residual_split(mu, v, s);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        const double y = u(rng);
        const cplx r = fourier_at(mu, at(y)) - v.fourier_at(y) - s.fourier_at(at(y));
        const cplx lr = fourier_at(split.real_part, at(y));
        const cplx li = fourier_at(split.imag_part, at(y));
        EXPECT_NEAR(std::abs(lr - r.real()), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(li - r.imag()), 0.0, 1e-10);
    }
    // lambda_R + i lambda_I = mu - v - s.
    const auto recon = add(split.real_part, split.imag_part, cplx(0.0, 1.0));
    const auto direct = MixedMeasure(add(pt, s, -1.0), add(dens, v, -1.0));
    const auto diff = add(recon, direct, -1.0);
    EXPECT_LE(total_variation(diff.point()), 1e-12);
    for (const auto& x : diff.density()->samples()) EXPECT_LE(std::abs(x), 1e-12);
}

TEST(ResidualSplit, GridMismatchThrows) {
    std::mt19937_64 rng(15);
    auto b = line_basis();
    MixedMeasure mu(PointMeasure(b), gaussian_packet(rng, 400, 0.05));
    EXPECT_THROW(residual_split(mu, gaussian_packet(rng, 400, 0.04), PointMeasure(b)), ValidationError);
}

TEST(ConvolutionPower, SpecExamples) {
    auto b = line_basis();
    const auto m = MixedMeasure(PointMeasure::dirac(b, {1}, 0.5));
    EXPECT_EQ(convolution_power(m, 0).point(), PointMeasure::unit(b));
    const auto cube = convolution_power(m, 3);
    EXPECT_EQ(cube.point().size(), 1u);
    EXPECT_EQ(cube.point().coefficient({3}), cplx(0.125));
    EXPECT_THROW(convolution_power(m, -1), ValidationError);
}

TEST(ConvolutionPower, NormBoundAndRepeatedProduct) {
    std::mt19937_64 rng(16);
    auto b = two_basis();
    for (int trial = 0; trial < 5; ++trial) {
        MixedMeasure m(random_point(b, 4, rng), gaussian_packet(rng));
        MixedMeasure rep(PointMeasure::unit(b));
        for (int p = 1; p <= 5; ++p) {
            rep = convolve(rep, m);
            const auto pw = convolution_power(m, p);
            EXPECT_LE(total_variation(pw), std::pow(total_variation(m), p) * (1.0 + 1e-10));
            EXPECT_LE(total_variation(add(pw, rep, -1.0)), 1e-10 * std::pow(total_variation(m), p));
        }
    }
}

TEST(GridDensity, SpectrumRoundTrip) {
    std::mt19937_64 rng(17);
    const auto g = gaussian_packet(rng, 100, 0.1);
    const auto back = GridDensity::from_spectrum(g.x0(), g.dx(), g.spectrum());
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(std::abs(back.samples()[j] - g.samples()[j]), 0.0, 1e-14);
    const auto spec = g.spectrum();
    for (std::size_t i : {0ul, 37ul, 100ul, 200ul}) EXPECT_NEAR(std::abs(spec[i] - g.fourier_at(g.spectrum_frequency(i))), 0.0, 1e-12);
}

TEST(GridDensity, RejectsBadInput) {
    EXPECT_THROW(GridDensity(0.0, 0.0, {1.0}), ValidationError);
    EXPECT_THROW(GridDensity(0.0, 0.1, {}), ValidationError);
    EXPECT_THROW(GridDensity(0.0, 0.1, {cplx(NAN, 0.0)}), ValidationError);
    EXPECT_THROW(MixedMeasure(PointMeasure(make_basis(2, {{1.0, 0.0}})), triangle()), ValidationError);
}

TEST(PointMeasure, ExactZerosAreNotStored) {
    auto b = line_basis();
    PointMeasure m(b);
    m.add({3}, 0.5);
    m.add({3}, -0.5);
    EXPECT_TRUE(m.empty());
    EXPECT_THROW(m.add({1, 2}, 1.0), ValidationError);
    m.append_sorted({5}, 1.0);
    m.append_sorted({7}, 2.0);
    EXPECT_THROW(m.append_sorted({6}, 1.0), ValidationError);
    EXPECT_EQ(m.size(), 2u);
}
