#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "wienerlevy.hpp"

using namespace wienerlevy;

namespace {

MixedMeasure sample_measure() {
    auto b = make_basis(1, {{1.0}, {std::sqrt(2.0)}});
    PointMeasure p(b);
    p.add({0, 0}, cplx(1.0, 0.0));
    p.add({1, -2}, cplx(0.1234567890123456789, -3.5e-17));
    p.add({-3, 1}, cplx(-0.25, 0.75));
    auto d = GridDensity::symmetric(3, 0.1, {1.0, cplx(0.5, 0.5), 0.0, 2.0, cplx(0.0, -1.0), 1e-300, 3.0});
    return MixedMeasure(p, d);
}

}  // namespace

TEST(MeasuresIo, RoundTripIsBitExact) {
    const auto m = sample_measure();
    const auto text = to_jsonl(m);
    const auto back = from_jsonl(text, m.basis());
    EXPECT_EQ(back, m);
    EXPECT_EQ(to_jsonl(back), text);
}

TEST(MeasuresIo, RecordsCarryLocations) {
    const auto m = sample_measure();
    std::istringstream is(to_jsonl(m));
    std::string line;
    std::size_t atoms = 0, densities = 0;
    while (std::getline(is, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("k")) {
            ++atoms;
            const auto k = j["k"].get<LatticeIndex>();
            EXPECT_NEAR(j["freq"][0].get<double>(), k[0] + k[1] * std::sqrt(2.0), 1e-15);
        } else {
            ++densities;
            EXPECT_EQ(j["samples_re"].size(), 7u);
        }
    }
    EXPECT_EQ(atoms, 3u);
    EXPECT_EQ(densities, 1u);
}

TEST(MeasuresIo, FreqIsOptionalOnInput) {
    auto b = make_basis(1, {{0.5}});
    const auto m = from_jsonl("{\"k\":[2],\"re\":0.5,\"im\":-1}\n\n", b);
    EXPECT_EQ(m.point().coefficient({2}), cplx(0.5, -1.0));
    EXPECT_FALSE(m.density());
}

TEST(MeasuresIo, RejectsBadRecords) {
    auto b = make_basis(1, {{0.5}});
    EXPECT_THROW(from_jsonl("{\"k\":[2],\"re\":0.5}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"k\":[2,1],\"re\":0.5,\"im\":0}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"k\":[2],\"freq\":[1.1],\"re\":0.5,\"im\":0}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"k\":[2],\"re\":0.5,\"im\":0,\"extra\":1}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"k\":[2],\"re\":0.5,\"im\":0}\n{\"k\":[2],\"re\":0.5,\"im\":0}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("not json\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"x0\":0,\"dx\":0.1,\"samples_re\":[1,2],\"samples_im\":[0]}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("{\"x0\":0,\"dx\":-0.1,\"samples_re\":[1],\"samples_im\":[0]}\n", b), ValidationError);
    EXPECT_THROW(from_jsonl("[1,2]\n", b), ValidationError);
}

TEST(MeasuresIo, ErrorNamesLine) {
    auto b = make_basis(1, {{0.5}});
    try {
        from_jsonl("{\"k\":[1],\"re\":1,\"im\":0}\n{\"bogus\":1}\n", b);
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(MeasuresIo, RandomRoundTrips) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> ki(-50, 50);
    auto b = make_basis(2, {{1.0, 0.0}, {0.3, 0.7}, {-1.1, 2.0}});
    for (int trial = 0; trial < 10; ++trial) {
        PointMeasure p(b);
        for (int i = 0; i < 40; ++i) p.add({ki(rng), ki(rng), ki(rng)}, cplx(u(rng), u(rng)) * std::pow(10.0, 20 * u(rng)));
        MixedMeasure m(p);
        EXPECT_EQ(from_jsonl(to_jsonl(m), b), m);
    }
}
