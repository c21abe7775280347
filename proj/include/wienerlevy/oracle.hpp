// oracle.hpp
//
// Checks that do not go through the synthesized measure: the polydisk
// Cauchy integral F(y) evaluated by the periodic trapezoid rule, the
// truncated geometric inverse of delta_0 + a delta_gamma, and the residual
// table comparing nu^(y), F(y) and h(mu^(y)).

#ifndef WIENERLEVY_ORACLE_HPP
#define WIENERLEVY_ORACLE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wienerlevy/analytic.hpp"
#include "wienerlevy/errors.hpp"
#include "wienerlevy/measures.hpp"

namespace wienerlevy {

/// y -> v^(y) + s^(y), the transform of the truncated approximant.
using SpectrumEvaluator = std::function<cplx(std::span<const double>)>;

/// Trapezoid rule on quad_n x quad_n nodes for
///   F = int int H(a + 3e e(t1), b + 3e e(t2)) 9e^2 e(t1 + t2)
///         / ((a + 3e e(t1) - Re m)(b + 3e e(t2) - Im m)) dt1 dt2
/// with a + i b = approx and m = mu^(y).
inline cplx cauchy_F(cplx approx, cplx mu_value, const SmoothedExtension& ext, std::size_t quad_n) {
    if (quad_n < 64) throw ValidationError("cauchy_F: quad_n must be at least 64");
    const double eps = ext.eps();
    const double r = 3.0 * eps;
    const double alpha = approx.real(), beta = approx.imag();
    std::vector<cplx> ring(quad_n);
    for (std::size_t j = 0; j < quad_n; ++j)
        ring[j] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(quad_n));
    cplx acc{};
    for (std::size_t a = 0; a < quad_n; ++a) {
        const cplx z1 = alpha + r * ring[a];
        const cplx d1 = z1 - mu_value.real();
        if (std::abs(d1) < 1e-10)
            throw ConfigurationError("cauchy_F: contour passes through mu^(y); residual exceeds the 3 eps radius");
        cplx row{};
        for (std::size_t b = 0; b < quad_n; ++b) {
            const cplx z2 = beta + r * ring[b];
            const cplx d2 = z2 - mu_value.imag();
            if (std::abs(d2) < 1e-10)
                throw ConfigurationError("cauchy_F: contour passes through mu^(y); residual exceeds the 3 eps radius");
            const cplx hv = ext(z1, z2);
            if (hv == cplx{}) continue;
            row += hv * (r * ring[b]) / d2;
        }
        acc += row * (r * ring[a]) / d1;
    }
    return acc / (static_cast<double>(quad_n) * static_cast<double>(quad_n));
}

inline cplx cauchy_F(std::span<const double> y, const SmoothedExtension& ext, const SpectrumEvaluator& approx,
                     const MixedMeasure& mu, std::size_t quad_n) {
    return cauchy_F(approx(y), fourier_at(mu, y), ext, quad_n);
}

/// sum_{k=0}^{terms} (-a)^k delta_{k gamma}: the truncated inverse of
/// delta_0 + a delta_gamma, where gamma is the lattice point gamma_key.
inline PointMeasure geometric_inverse(cplx a, const BasisPtr& basis, const LatticeIndex& gamma_key, std::size_t terms) {
    if (!(std::abs(a) < 1.0)) throw ValidationError("geometric_inverse: need |a| < 1");
    basis->check_index(gamma_key);
    PointMeasure out(basis);
    cplx c = 1.0;
    LatticeIndex k(gamma_key.size(), 0);
    for (std::size_t n = 0; n <= terms; ++n) {
        out.add(k, c);
        c *= -a;
        for (std::size_t i = 0; i < k.size(); ++i) k[i] += gamma_key[i];
    }
    return out;
}

/// sup_y |oracle^(y) (1 + a e(-<gamma,y>)) - 1| <= |a|^{terms+1}.
inline double geometric_inverse_residual_bound(cplx a, std::size_t terms) {
    return std::pow(std::abs(a), static_cast<double>(terms) + 1.0) / (1.0 - std::abs(a));
}

// ---------------------------------------------------------------------------
// Verification points
// ---------------------------------------------------------------------------

/// Kronecker (R_d) sequence over the box prod_c [0, 1/g_c), g_c the
/// smallest nonzero |gamma_n[c]|; offset drawn from the seed.
inline std::vector<std::vector<double>> lattice_verification_set(const FrequencyBasis& basis, std::size_t count,
                                                                 std::uint64_t seed) {
    const int d = basis.dim();
    std::vector<double> period(static_cast<std::size_t>(d), 1.0);
    for (int c = 0; c < d; ++c) {
        double g = infinity;
        for (const auto& gamma : basis.gammas())
            if (gamma[c] != 0.0) g = std::min(g, std::abs(gamma[c]));
        if (std::isfinite(g)) period[c] = 1.0 / g;
    }
    // phi_d: the positive root of x^{d+1} = x + 1.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1.0));
    std::vector<double> alpha(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) alpha[c] = std::fmod(1.0 / std::pow(phi, c + 1.0), 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> offset(static_cast<std::size_t>(d));
    for (auto& o : offset) o = unit(rng);
    std::vector<std::vector<double>> out(count, std::vector<double>(static_cast<std::size_t>(d)));
    for (std::size_t i = 0; i < count; ++i)
        for (int c = 0; c < d; ++c) {
            const double u = std::fmod(offset[c] + static_cast<double>(i + 1) * alpha[c], 1.0);
            out[i][c] = u * period[c];
        }
    return out;
}

/// Uniform grid over [-1.25 bw, 1.25 bw] clipped to [-limit, limit].
inline std::vector<std::vector<double>> band_verification_set(double bandwidth, double limit, std::size_t count) {
    const double half = std::min(1.25 * bandwidth, limit);
    std::vector<std::vector<double>> out;
    if (count == 0) return out;
    if (count == 1 || half == 0.0) {
        out.push_back({0.0});
        return out;
    }
    for (std::size_t i = 0; i < count; ++i)
        out.push_back({-half + 2.0 * half * static_cast<double>(i) / static_cast<double>(count - 1)});
    return out;
}

// ---------------------------------------------------------------------------
// Residual table
// ---------------------------------------------------------------------------

struct ResidualRecord {
    std::vector<double> y;
    cplx mu_hat;
    bool in_k = false;
    double depth = 0.0;
    cplx nu_hat;
    cplx cauchy = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    cplx h_mu = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};

    double residual() const { return std::abs(nu_hat - h_mu); }
    bool has_cauchy() const { return !std::isnan(cauchy.real()); }
};

struct ResidualStats {
    std::vector<ResidualRecord> records;
    double sup_residual = 0.0;
    double mean_residual = 0.0;
    std::size_t in_k_count = 0;
    double sup_cauchy_vs_h = 0.0;   // max |F - h(mu^)| over in-K records with F
    double sup_nu_vs_cauchy = 0.0;  // max |nu^ - F| over in-K records with F

    void recompute() {
        sup_residual = mean_residual = sup_cauchy_vs_h = sup_nu_vs_cauchy = 0.0;
        in_k_count = 0;
        double sum = 0.0;
        for (const auto& r : records) {
            if (!r.in_k) continue;
            ++in_k_count;
            const double e = r.residual();
            sup_residual = std::max(sup_residual, e);
            sum += e;
            if (r.has_cauchy()) {
                sup_cauchy_vs_h = std::max(sup_cauchy_vs_h, std::abs(r.cauchy - r.h_mu));
                sup_nu_vs_cauchy = std::max(sup_nu_vs_cauchy, std::abs(r.nu_hat - r.cauchy));
            }
        }
        if (in_k_count > 0) mean_residual = sum / static_cast<double>(in_k_count);
    }
};

struct CauchyCheck {
    const SmoothedExtension* ext = nullptr;
    SpectrumEvaluator approx;
    std::size_t quad_n = 256;
};

/// Evaluates every column at every y. A point counts as in K when mu^(y)
/// lies in K at depth greater than margin. Nothing is asserted here.
inline ResidualStats residual_report(const MixedMeasure& nu, const MixedMeasure& mu, const AnalyticFunction& h,
                                     const CompactSet& k, const std::vector<std::vector<double>>& y_set, double margin,
                                     const CauchyCheck* cauchy = nullptr) {
    ResidualStats stats;
    stats.records.resize(y_set.size());
    const PointEvaluator nu_point(nu.point()), mu_point(mu.point());
    auto transform = [](const PointEvaluator& pt, const MixedMeasure& m, std::span<const double> y) {
        cplx v = pt(y);
        if (m.density()) v += m.density()->fourier_at(y[0]);
        return v;
    };
    parallel_for(y_set.size(), [&](std::size_t i) {
        ResidualRecord rec;
        rec.y = y_set[i];
        rec.mu_hat = transform(mu_point, mu, rec.y);
        rec.nu_hat = transform(nu_point, nu, rec.y);
        const cplx p = rec.mu_hat;
        rec.depth = k.depth(p);
        rec.in_k = k.contains(p) && rec.depth > margin;
        try {
            rec.h_mu = h(p);
        } catch (const DomainError&) {
        }
        if (cauchy && cauchy->ext && rec.in_k)
            rec.cauchy = cauchy_F(cauchy->approx(rec.y), rec.mu_hat, *cauchy->ext, cauchy->quad_n);
        stats.records[i] = std::move(rec);
    });
    stats.recompute();
    return stats;
}

namespace detail {
inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
}  // namespace detail

inline void write_residual_csv(const ResidualStats& stats, std::ostream& os, int dim = 1) {
    for (int c = 0; c < dim; ++c) os << "y" << c << ",";
    os << "mu_re,mu_im,in_K,nu_re,nu_im,F_re,F_im,h_re,h_im,abs_residual\n";
    for (const auto& r : stats.records) {
        for (double v : r.y) os << detail::fmt(v) << ",";
        os << detail::fmt(r.mu_hat.real()) << "," << detail::fmt(r.mu_hat.imag()) << "," << (r.in_k ? 1 : 0) << ","
           << detail::fmt(r.nu_hat.real()) << "," << detail::fmt(r.nu_hat.imag()) << "," << detail::fmt(r.cauchy.real())
           << "," << detail::fmt(r.cauchy.imag()) << "," << detail::fmt(r.h_mu.real()) << ","
           << detail::fmt(r.h_mu.imag()) << "," << detail::fmt(r.residual()) << "\n";
    }
}

/// Columns for external plotting: y, |mu^|, |nu^ - h(mu^)|, in_K.
inline void emit_plot_data(const ResidualStats& stats, std::ostream& os, int dim = 1) {
    for (int c = 0; c < dim; ++c) os << "y" << c << ",";
    os << "abs_mu,abs_residual,in_K\n";
    for (const auto& r : stats.records) {
        for (double v : r.y) os << detail::fmt(v) << ",";
        os << detail::fmt(std::abs(r.mu_hat)) << "," << detail::fmt(r.residual()) << "," << (r.in_k ? 1 : 0) << "\n";
    }
}

inline nlohmann::json residual_summary(const ResidualStats& stats) {
    nlohmann::json j;
    j["count"] = stats.records.size();
    j["in_k_count"] = stats.in_k_count;
    j["sup_residual"] = stats.sup_residual;
    j["mean_residual"] = stats.mean_residual;
    j["sup_cauchy_vs_h"] = stats.sup_cauchy_vs_h;
    j["sup_nu_vs_cauchy"] = stats.sup_nu_vs_cauchy;
    return j;
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_ORACLE_HPP
