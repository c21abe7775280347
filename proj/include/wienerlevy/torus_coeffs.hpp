// torus_coeffs.hpp
//
// Fourier coefficients of the periodic function
//
//   T(Theta, tau) = H(Re w(Theta) + 3 eps e(tau1), Im w(Theta) + 3 eps e(tau2)),
//   w(Theta) = c0 + sum_n a_n e(theta_n),   e(t) = exp(2 pi i t),
//
// first over Theta (giving b_k(tau)) and then over tau (giving c_k(p, q)).
// Substituting theta_n = -<gamma_n, y> turns w into the transform of the
// truncated atomic measure, so c_k(p, q) become atom weights at the lattice
// point sum_n k_n key_n. Atoms sitting at the origin are folded into the
// constant c0 because their torus coordinate is pinned to 0 by that
// substitution.

#ifndef WIENERLEVY_TORUS_COEFFS_HPP
#define WIENERLEVY_TORUS_COEFFS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wienerlevy/analytic.hpp"
#include "wienerlevy/errors.hpp"
#include "wienerlevy/fft.hpp"
#include "wienerlevy/measures.hpp"

namespace wienerlevy {

inline constexpr std::size_t default_memory_budget = std::size_t{1} << 30;  // bytes

struct TorusGrid {
    std::size_t n_theta = 0;  // torus dimensions (moving atoms of s)
    std::size_t m_theta = 64;
    std::size_t m_tau = 64;
    std::size_t k_max = 31;
    std::size_t p_max = 12;

    std::size_t theta_points() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < n_theta; ++i) n *= m_theta;
        return n;
    }
    std::size_t tau_points() const { return m_tau * m_tau; }
    std::size_t k_side() const { return 2 * k_max + 1; }
    std::size_t k_count() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < n_theta; ++i) n *= k_side();
        return n;
    }
    std::size_t pq_count() const { return (p_max + 1) * (p_max + 1); }

    /// Bytes the sample tensor M_theta^N * M_tau^2 would occupy.
    double tensor_bytes() const {
        return std::pow(static_cast<double>(m_theta), static_cast<double>(n_theta)) *
               static_cast<double>(tau_points()) * sizeof(cplx);
    }

    void validate(std::size_t memory_budget = default_memory_budget) const {
        if (m_theta < 2 || m_tau < 2) throw ValidationError("torus grid: need at least 2 samples per axis");
        if (!(m_theta > 2 * k_max))
            throw ValidationError("torus grid: M_theta = " + std::to_string(m_theta) +
                                  " must exceed 2 K_max = " + std::to_string(2 * k_max));
        if (!(m_tau > 2 * p_max))
            throw ValidationError("torus grid: M_tau = " + std::to_string(m_tau) + " must exceed 2 P_max = " +
                                  std::to_string(2 * p_max));
        if (tensor_bytes() > static_cast<double>(memory_budget))
            throw ConfigurationError("torus grid: M_theta^N * M_tau^2 = " + std::to_string(m_theta) + "^" +
                                     std::to_string(n_theta) + " * " + std::to_string(m_tau) + "^2 samples need " +
                                     std::to_string(tensor_bytes() / 1048576.0) + " MiB, budget is " +
                                     std::to_string(static_cast<double>(memory_budget) / 1048576.0) + " MiB");
    }

    /// Signed multi-index of flat k position (row-major, each entry in
    /// [-K_max, K_max]).
    std::vector<int> k_of(std::size_t flat) const {
        std::vector<int> k(n_theta);
        for (std::size_t d = n_theta; d-- > 0;) {
            k[d] = static_cast<int>(flat % k_side()) - static_cast<int>(k_max);
            flat /= k_side();
        }
        return k;
    }
};

/// The truncated atomic part, split into the constant and the moving atoms.
struct TorusSource {
    BasisPtr basis;
    cplx constant{};
    std::vector<cplx> amplitudes;
    std::vector<LatticeIndex> keys;

    std::size_t dims() const noexcept { return amplitudes.size(); }
};

inline TorusSource torus_source(const PointMeasure& s) {
    TorusSource src{s.basis(), {}, {}, {}};
    const auto zero = s.basis()->zero_index();
    for (const auto& [k, c] : s.atoms()) {
        if (k == zero) {
            src.constant += c;
        } else {
            src.amplitudes.push_back(c);
            src.keys.push_back(k);
        }
    }
    return src;
}

namespace detail {

inline cplx turn(double t) { return std::polar(1.0, 2.0 * std::numbers::pi * t); }

/// w(Theta) on the product grid, row-major.
inline std::vector<cplx> torus_w(const TorusSource& src, std::size_t m_theta) {
    const std::size_t n = src.dims();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= m_theta;
    std::vector<cplx> roots(m_theta);
    for (std::size_t j = 0; j < m_theta; ++j) roots[j] = turn(static_cast<double>(j) / static_cast<double>(m_theta));
    std::vector<cplx> w(total, src.constant);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (std::size_t d = n; d-- > 0;) {
            w[flat] += src.amplitudes[d] * roots[rem % m_theta];
            rem /= m_theta;
        }
    }
    return w;
}

inline long long signed_index(std::size_t i, std::size_t m) {
    return i <= m / 2 ? static_cast<long long>(i) : static_cast<long long>(i) - static_cast<long long>(m);
}

inline std::size_t wrap_index(long long k, std::size_t m) {
    const long long mm = static_cast<long long>(m);
    return static_cast<std::size_t>(((k % mm) + mm) % mm);
}

inline std::vector<int> fft_shape(std::size_t n, std::size_t m) { return std::vector<int>(n, static_cast<int>(m)); }

}  // namespace detail

/// T sampled on the product grid; values[tau_flat * M_theta^N + theta_flat]
/// with tau_flat = a * M_tau + b for tau = (a, b) / M_tau.
struct TorusSamples {
    TorusGrid grid;
    std::vector<cplx> values;
};

inline TorusSamples sample_T(const TorusSource& src, const SmoothedExtension& ext, TorusGrid grid,
                             std::size_t memory_budget = default_memory_budget) {
    grid.n_theta = src.dims();
    grid.validate(memory_budget);
    const auto w = detail::torus_w(src, grid.m_theta);
    const double r = 3.0 * ext.eps();
    TorusSamples out{grid, std::vector<cplx>(grid.tau_points() * w.size())};
    parallel_for(grid.tau_points(), [&](std::size_t t) {
        const cplx e1 = r * detail::turn(static_cast<double>(t / grid.m_tau) / static_cast<double>(grid.m_tau));
        const cplx e2 = r * detail::turn(static_cast<double>(t % grid.m_tau) / static_cast<double>(grid.m_tau));
        cplx* dst = out.values.data() + t * w.size();
        for (std::size_t j = 0; j < w.size(); ++j) dst[j] = ext(w[j].real() + e1, w[j].imag() + e2);
    });
    return out;
}

/// b_k(tau) for |k_j| <= K_max plus per-tau diagnostics.
/// values[k_flat * M_tau^2 + tau_flat].
struct BTensor {
    TorusGrid grid;
    std::vector<cplx> values;
    std::vector<double> retained_l1;    // sum_{retained k} |b_k(tau)|
    std::vector<double> discarded_l1;   // grid coefficients outside |k_j| <= K_max
    std::vector<double> upper_band_l1;  // grid coefficients with some |k_j| > M_theta / 4
    std::vector<double> half_diff_l1;   // sum over |k_j| < M_theta/4 of |b_k on the M/2 grid - b_k|
    std::vector<double> energy;         // sum over all grid k of |b_k|^2
    std::vector<double> mean_square;    // mean over Theta of |T|^2

    cplx at(std::size_t k_flat, std::size_t tau_flat) const { return values[k_flat * grid.tau_points() + tau_flat]; }

    double b_norm_bound() const { return retained_l1.empty() ? 0.0 : *std::max_element(retained_l1.begin(), retained_l1.end()); }
    double truncation_tail() const { return discarded_l1.empty() ? 0.0 : *std::max_element(discarded_l1.begin(), discarded_l1.end()); }
    double upper_band() const { return upper_band_l1.empty() ? 0.0 : *std::max_element(upper_band_l1.begin(), upper_band_l1.end()); }
    double half_grid_diff() const { return half_diff_l1.empty() ? 0.0 : *std::max_element(half_diff_l1.begin(), half_diff_l1.end()); }
};

namespace detail {

/// Theta-transform of one tau slice into the retained block of out.
struct ThetaPlans {
    std::optional<FftPlan> full;
    std::optional<FftPlan> half;
};

inline ThetaPlans make_theta_plans(const TorusGrid& grid) {
    ThetaPlans p;
    if (grid.n_theta > 0) {
        p.full.emplace(fft_shape(grid.n_theta, grid.m_theta), FftDirection::forward);
        p.half.emplace(fft_shape(grid.n_theta, grid.m_theta / 2), FftDirection::forward);
    }
    return p;
}

/// Sum over |k_j| < M/4 of |b_k from every other node - b_k|; the
/// difference is dominated by the aliases at k +- M/2, which overestimate
/// the aliases at k +- M that corrupt the full grid.
inline double theta_half_diff(const TorusGrid& grid, const FftPlan& half_plan, const std::vector<cplx>& slice,
                              const std::vector<cplx>& spec) {
    const std::size_t n = grid.n_theta, m = grid.m_theta, mh = m / 2;
    std::size_t total_h = 1;
    for (std::size_t d = 0; d < n; ++d) total_h *= mh;
    std::vector<cplx> dec(total_h), dspec(total_h);
    for (std::size_t h = 0; h < total_h; ++h) {
        std::size_t rem = h, pos = 0, stride = 1;
        for (std::size_t d = 0; d < n; ++d) {
            pos += 2 * (rem % mh) * stride;
            rem /= mh;
            stride *= m;
        }
        dec[h] = slice[pos];
    }
    half_plan.execute(dec, dspec);
    const double nh = 1.0 / static_cast<double>(total_h);
    const double nf = 1.0 / static_cast<double>(slice.size());
    double diff = 0.0;
    for (std::size_t h = 0; h < total_h; ++h) {
        std::size_t rem = h, pos = 0, stride = 1;
        bool inside = true;
        for (std::size_t d = 0; d < n; ++d) {
            const long long k = signed_index(rem % mh, mh);
            rem /= mh;
            if (4 * std::llabs(k) >= static_cast<long long>(m)) inside = false;
            pos += wrap_index(k, m) * stride;
            stride *= m;
        }
        if (inside) diff += std::abs(dspec[h] * nh - spec[pos] * nf);
    }
    return diff;
}

inline void theta_slice(const TorusGrid& grid, const ThetaPlans& plans, std::vector<cplx>& slice, std::size_t t,
                        BTensor& out) {
    const std::size_t total = slice.size();
    std::vector<cplx> spec(total);
    if (plans.full)
        plans.full->execute(slice, spec);
    else
        spec = slice;
    if (plans.half) out.half_diff_l1[t] = theta_half_diff(grid, *plans.half, slice, spec);
    const double norm = 1.0 / static_cast<double>(total);
    double all_l1 = 0.0, upper = 0.0, energy = 0.0, ms = 0.0;
    for (const auto& v : slice) ms += std::norm(v);
    for (std::size_t flat = 0; flat < total; ++flat) {
        const cplx b = spec[flat] * norm;
        const double a = std::abs(b);
        all_l1 += a;
        energy += a * a;
        std::size_t rem = flat;
        bool high = false;
        for (std::size_t d = 0; d < grid.n_theta; ++d) {
            const long long k = signed_index(rem % grid.m_theta, grid.m_theta);
            rem /= grid.m_theta;
            if (4 * std::llabs(k) > static_cast<long long>(grid.m_theta)) high = true;
        }
        if (high) upper += a;
    }
    double kept = 0.0;
    const std::size_t kc = grid.k_count();
    for (std::size_t kf = 0; kf < kc; ++kf) {
        std::size_t rem = kf, pos = 0, stride = 1;
        for (std::size_t d = grid.n_theta; d-- > 0;) {
            const long long k = static_cast<long long>(rem % grid.k_side()) - static_cast<long long>(grid.k_max);
            rem /= grid.k_side();
            pos += wrap_index(k, grid.m_theta) * stride;
            stride *= grid.m_theta;
        }
        const cplx b = spec[pos] * norm;
        out.values[kf * grid.tau_points() + t] = b;
        kept += std::abs(b);
    }
    out.retained_l1[t] = kept;
    out.discarded_l1[t] = std::max(0.0, all_l1 - kept);
    out.upper_band_l1[t] = upper;
    out.energy[t] = energy;
    out.mean_square[t] = ms / static_cast<double>(total);
}

inline BTensor empty_btensor(const TorusGrid& grid) {
    BTensor b{grid, std::vector<cplx>(grid.k_count() * grid.tau_points()), {}, {}, {}, {}, {}, {}};
    for (auto* v : {&b.retained_l1, &b.discarded_l1, &b.upper_band_l1, &b.half_diff_l1, &b.energy, &b.mean_square})
        v->assign(grid.tau_points(), 0.0);
    return b;
}

}  // namespace detail

inline BTensor theta_fft(const TorusSamples& samples) {
    const auto& grid = samples.grid;
    BTensor out = detail::empty_btensor(grid);
    const std::size_t tp = grid.theta_points();
    const auto plans = detail::make_theta_plans(grid);
    parallel_for(grid.tau_points(), [&](std::size_t t) {
        std::vector<cplx> slice(samples.values.begin() + static_cast<long long>(t * tp),
                                samples.values.begin() + static_cast<long long>((t + 1) * tp));
        detail::theta_slice(grid, plans, slice, t, out);
    });
    return out;
}

/// sample_T followed by theta_fft, one tau slice at a time so the full
/// sample tensor is never held in memory.
inline BTensor sample_and_theta_fft(const TorusSource& src, const SmoothedExtension& ext, TorusGrid grid,
                                    std::size_t memory_budget = default_memory_budget) {
    grid.n_theta = src.dims();
    grid.validate(memory_budget);
    const auto w = detail::torus_w(src, grid.m_theta);
    const double r = 3.0 * ext.eps();
    BTensor out = detail::empty_btensor(grid);
    const auto plans = detail::make_theta_plans(grid);
    parallel_for(grid.tau_points(), [&](std::size_t t) {
        const cplx e1 = r * detail::turn(static_cast<double>(t / grid.m_tau) / static_cast<double>(grid.m_tau));
        const cplx e2 = r * detail::turn(static_cast<double>(t % grid.m_tau) / static_cast<double>(grid.m_tau));
        std::vector<cplx> slice(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) slice[j] = ext(w[j].real() + e1, w[j].imag() + e2);
        detail::theta_slice(grid, plans, slice, t, out);
    });
    return out;
}

/// c_k(p, q) for |k_j| <= K_max and 0 <= p, q <= P_max.
struct CoefficientTensor {
    TorusGrid grid;
    std::vector<cplx> coeffs;       // [k_flat * (P+1)^2 + p * (P+1) + q]
    double b_norm_bound = 0.0;      // max_tau sum_k |b_k(tau)|
    double row_bound = 0.0;         // sum_k max_tau |b_k(tau)|, bounds every sum_k |c_k(p,q)|
    double truncation_tail = 0.0;   // max_tau of grid mass outside the retained k block
    double theta_upper_band = 0.0;  // max_tau of grid mass with |k_j| > M_theta/4
    double tau_upper_band = 0.0;    // sum_k mass of c_k(p,q) with max(|p|,|q|) > M_tau/4
    double theta_half_diff = 0.0;   // max_tau of BTensor::half_diff_l1
    double tau_half_diff = 0.0;     // sum_k max_{p,q} |c_k(p,q) on the M_tau/2 grid - c_k(p,q)|
    double negative_pq_mass = 0.0;  // sum_k mass of c_k(p,q) with p < 0 or q < 0 (not used)

    cplx at(std::size_t k_flat, std::size_t p, std::size_t q) const {
        return coeffs[k_flat * grid.pq_count() + p * (grid.p_max + 1) + q];
    }

    /// Aliasing of the grid coefficients, estimated by comparison with the
    /// half-resolution grids (an overestimate for decaying spectra).
    double aliasing_estimate() const { return theta_half_diff + tau_half_diff; }
};

namespace detail {

/// max over p, q <= min(P, M/4 - 1) of |c(p, q) from every other tau node -
/// c(p, q)| for one tau slice in and its full-grid spectrum.
inline double tau_half_diff(const std::vector<cplx>& in, const std::vector<cplx>& spec, std::size_t mt,
                            std::size_t p_max, const FftPlan& half_plan) {
    const std::size_t mh = mt / 2;
    std::vector<cplx> dec(mh * mh), dspec(mh * mh);
    for (std::size_t a = 0; a < mh; ++a)
        for (std::size_t b = 0; b < mh; ++b) dec[a * mh + b] = in[2 * a * mt + 2 * b];
    half_plan.execute(dec, dspec);
    const double nh = 1.0 / static_cast<double>(mh * mh), nf = 1.0 / static_cast<double>(mt * mt);
    const std::size_t lim = std::min(p_max + 1, std::max<std::size_t>(1, mt / 4));
    double d = 0.0;
    for (std::size_t p = 0; p < lim; ++p)
        for (std::size_t q = 0; q < lim; ++q) d = std::max(d, std::abs(dspec[p * mh + q] * nh - spec[p * mt + q] * nf));
    return d;
}

}  // namespace detail

inline CoefficientTensor tau_fft(const BTensor& b) {
    const auto& grid = b.grid;
    CoefficientTensor out;
    out.grid = grid;
    out.coeffs.assign(grid.k_count() * grid.pq_count(), cplx{});
    out.b_norm_bound = b.b_norm_bound();
    out.truncation_tail = b.truncation_tail();
    out.theta_upper_band = b.upper_band();
    out.theta_half_diff = b.half_grid_diff();
    const std::size_t mt = grid.m_tau;
    const std::size_t tp = grid.tau_points();
    FftPlan plan({static_cast<int>(mt), static_cast<int>(mt)}, FftDirection::forward);
    FftPlan half({static_cast<int>(mt / 2), static_cast<int>(mt / 2)}, FftDirection::forward);
    const std::size_t kc = grid.k_count();
    std::vector<double> row_max(kc, 0.0), neg(kc, 0.0), upper(kc, 0.0), hdiff(kc, 0.0);
    parallel_for(kc, [&](std::size_t kf) {
        std::vector<cplx> in(b.values.begin() + static_cast<long long>(kf * tp),
                             b.values.begin() + static_cast<long long>((kf + 1) * tp));
        double mx = 0.0;
        for (const auto& v : in) mx = std::max(mx, std::abs(v));
        row_max[kf] = mx;
        std::vector<cplx> spec(tp);
        plan.execute(in, spec);
        hdiff[kf] = detail::tau_half_diff(in, spec, mt, grid.p_max, half);
        const double norm = 1.0 / static_cast<double>(tp);
        for (std::size_t i = 0; i < tp; ++i) {
            const long long p = detail::signed_index(i / mt, mt);
            const long long q = detail::signed_index(i % mt, mt);
            const double a = std::abs(spec[i]) * norm;
            if (p < 0 || q < 0) neg[kf] += a;
            if (4 * std::max(std::llabs(p), std::llabs(q)) > static_cast<long long>(mt)) upper[kf] += a;
        }
        for (std::size_t p = 0; p <= grid.p_max; ++p)
            for (std::size_t q = 0; q <= grid.p_max; ++q)
                out.coeffs[kf * grid.pq_count() + p * (grid.p_max + 1) + q] = spec[p * mt + q] * norm;
    });
    for (std::size_t kf = 0; kf < kc; ++kf) {
        out.row_bound += row_max[kf];
        out.negative_pq_mass += neg[kf];
        out.tau_upper_band += upper[kf];
        out.tau_half_diff += hdiff[kf];
    }
    return out;
}

/// Full coefficient pipeline for the truncated atomic part s.
inline CoefficientTensor torus_coefficients(const PointMeasure& s, const SmoothedExtension& ext, const TorusGrid& grid,
                                            std::size_t memory_budget = default_memory_budget) {
    return tau_fft(sample_and_theta_fft(torus_source(s), ext, grid, memory_budget));
}

/// nu_{p,q} = sum_k c_k(p, q) delta at lattice point sum_n k_n key_n.
inline PointMeasure coefficient_measure(const CoefficientTensor& c, const TorusSource& src, std::size_t p, std::size_t q,
                                        double prune_relative = 0.0, double* pruned = nullptr) {
    const auto& grid = c.grid;
    if (grid.n_theta != src.dims()) throw ValidationError("coefficient_measure: tensor and source disagree on N");
    if (p > grid.p_max || q > grid.p_max) throw ValidationError("coefficient_measure: (p, q) beyond P_max");
    PointMeasure nu(src.basis);
    LatticeIndex key(src.basis->size());
    for (std::size_t kf = 0; kf < grid.k_count(); ++kf) {
        const cplx v = c.at(kf, p, q);
        if (v == cplx{}) continue;
        const auto k = grid.k_of(kf);
        std::fill(key.begin(), key.end(), 0);
        for (std::size_t n = 0; n < k.size(); ++n)
            for (std::size_t b = 0; b < key.size(); ++b) key[b] += k[n] * src.keys[n][b];
        nu.add(key, v);
    }
    const double lost = nu.prune(prune_relative);
    if (pruned) *pruned += lost;
    return nu;
}

// ---------------------------------------------------------------------------
// Decay diagnostics and truncation selection
// ---------------------------------------------------------------------------

/// sum over k in Z of min{1, k^-2}.
inline constexpr double decay_weight_sum = 1.0 + std::numbers::pi * std::numbers::pi / 3.0;

inline double decay_weight(const std::vector<int>& k) {
    double w = 1.0;
    for (int kj : k)
        if (kj != 0) w /= static_cast<double>(kj) * static_cast<double>(kj);
    return w;
}

/// Upper bound on sum over k in Z^N with some |k_j| > K of prod min{1, k_j^-2},
/// from sum_{k > K} k^-2 <= 1/K.
inline double decay_tail_sum(std::size_t n, std::size_t k_max) {
    if (n == 0) return 0.0;
    if (k_max == 0) return std::pow(decay_weight_sum, static_cast<double>(n)) - 1.0;
    const double inner = std::max(0.0, decay_weight_sum - 2.0 / static_cast<double>(k_max));
    return std::pow(decay_weight_sum, static_cast<double>(n)) - std::pow(inner, static_cast<double>(n));
}

struct DecayReport {
    double c_hat = 0.0;         // max |b_k(tau)| / prod min{1, k_j^-2} over the calibration block
    double tail_bound = 0.0;    // c_hat * decay_tail_sum(N, K_max)
    double max_ratio = 0.0;     // max over stored k of |b_k| / (c_hat prod min{1, k_j^-2})
    std::size_t violations = 0; // stored entries with ratio > slack
    std::size_t checked = 0;
};

/// calibration_radius limits the block used for c_hat (all stored k when
/// unset); every stored coefficient is then checked against slack * c_hat
/// * prod min{1, k_j^-2}.
inline DecayReport decay_check(const BTensor& b, std::optional<std::size_t> calibration_radius = std::nullopt,
                               double slack = 1.01) {
    const auto& grid = b.grid;
    DecayReport rep;
    const std::size_t tp = grid.tau_points();
    std::vector<std::vector<int>> ks(grid.k_count());
    for (std::size_t kf = 0; kf < ks.size(); ++kf) ks[kf] = grid.k_of(kf);
    for (std::size_t kf = 0; kf < ks.size(); ++kf) {
        if (calibration_radius) {
            bool inside = true;
            for (int kj : ks[kf])
                if (static_cast<std::size_t>(std::abs(kj)) > *calibration_radius) inside = false;
            if (!inside) continue;
        }
        const double w = decay_weight(ks[kf]);
        for (std::size_t t = 0; t < tp; ++t) rep.c_hat = std::max(rep.c_hat, std::abs(b.at(kf, t)) / w);
    }
    rep.tail_bound = rep.c_hat * decay_tail_sum(grid.n_theta, grid.k_max);
    for (std::size_t kf = 0; kf < ks.size(); ++kf) {
        const double w = decay_weight(ks[kf]);
        for (std::size_t t = 0; t < tp; ++t) {
            const double a = std::abs(b.at(kf, t));
            ++rep.checked;
            if (rep.c_hat == 0.0) {
                if (a > 0.0) ++rep.violations;
                continue;
            }
            const double ratio = a / (rep.c_hat * w);
            rep.max_ratio = std::max(rep.max_ratio, ratio);
            if (ratio > slack) ++rep.violations;
        }
    }
    return rep;
}

/// sum over p + q > P of a^p b^q (both ratios in [0, 1)).
inline double neumann_tail(double a, double b, std::size_t p_max) {
    if (!(a >= 0.0 && a < 1.0 && b >= 0.0 && b < 1.0))
        throw ValidationError("neumann_tail: ratios must lie in [0, 1)");
    const double m = static_cast<double>(p_max) + 1.0;
    if (std::abs(a - b) <= 1e-9 * std::max(a, b)) {
        const double r = 0.5 * (a + b);
        // sum_{n >= m} (n + 1) r^n
        return std::pow(r, m) * ((m + 1.0) / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
    }
    // sum_{n >= m} (a^{n+1} - b^{n+1}) / (a - b)
    return (std::pow(a, m + 1.0) / (1.0 - a) - std::pow(b, m + 1.0) / (1.0 - b)) / (a - b);
}

struct TruncationRequest {
    std::size_t n_theta = 0;
    double c_hat = 1.0;            // decay constant from decay_check
    double contraction = 2.0 / 3.0; // max(r_R, r_I)
    double term_norm = 1.0;         // sup_{p,q} ||kappa_pq|| + ||nu_pq||
    double delta = 1e-6;            // target for each tail
    std::size_t min_m_theta = 64;
    std::size_t min_m_tau = 64;
    std::size_t memory_budget = default_memory_budget;
};

inline std::size_t next_pow2_above(std::size_t n) {
    std::size_t p = 1;
    while (p <= n) p <<= 1;
    return p;
}

/// Smallest K_max, P_max meeting both tail budgets; grids only grow.
inline TorusGrid select_truncation(const TruncationRequest& req) {
    if (!(req.delta > 0.0)) throw ValidationError("select_truncation: tail budget must be positive");
    constexpr std::size_t k_limit = std::size_t{1} << 24;
    std::size_t k = 1;
    while (req.c_hat * decay_tail_sum(req.n_theta, k) >= req.delta) {
        if (k >= k_limit)
            throw ConfigurationError("select_truncation: coefficient tail budget " + std::to_string(req.delta) +
                                     " needs K_max beyond " + std::to_string(k_limit));
        k *= 2;
    }
    // Bisect down to the smallest feasible K.
    std::size_t lo = k / 2, hi = k;
    while (hi - lo > 1 && hi > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (req.c_hat * decay_tail_sum(req.n_theta, mid) < req.delta)
            hi = mid;
        else
            lo = mid;
    }
    k = std::max<std::size_t>(1, hi);
    std::size_t p = 1;
    while (req.term_norm * neumann_tail(req.contraction, req.contraction, p) >= req.delta) {
        if (p > 100000) throw ConfigurationError("select_truncation: Neumann tail does not reach the budget");
        ++p;
    }
    TorusGrid g;
    g.n_theta = req.n_theta;
    g.k_max = k;
    g.p_max = p;
    g.m_theta = std::max(req.min_m_theta, next_pow2_above(2 * k));
    g.m_tau = std::max(req.min_m_tau, next_pow2_above(2 * p));
    g.validate(req.memory_budget);
    return g;
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_TORUS_COEFFS_HPP
