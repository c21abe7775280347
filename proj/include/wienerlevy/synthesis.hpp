// synthesis.hpp
//
// Builds nu with nu^(y) ~ h(mu^(y)) wherever mu^(y) lies in K:
//
//   1. band-limit the density part (v) and truncate the atoms (s);
//   2. split the remainder mu - v - s into lambda_R, lambda_I;
//   3. torus coefficients of H along s give nu_pq, the A-transform along v
//      gives kappa_pq;
//   4. nu = sum_{p+q <= P} (lambda_R/3e)^p * (lambda_I/3e)^q * (kappa_pq + nu_pq).
//
// Every approximation made on the way is accounted for in SynthesisReport.

#ifndef WIENERLEVY_SYNTHESIS_HPP
#define WIENERLEVY_SYNTHESIS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wienerlevy/analytic.hpp"
#include "wienerlevy/errors.hpp"
#include "wienerlevy/fft.hpp"
#include "wienerlevy/measures.hpp"
#include "wienerlevy/oracle.hpp"
#include "wienerlevy/torus_coeffs.hpp"

namespace wienerlevy {

struct SynthesisParams {
    std::optional<double> eps;             // default: choose_epsilon(domain margin)
    std::optional<double> domain_margin;   // required in effect for entire h; 1 if unset
    std::optional<double> atom_budget;     // default: eps
    std::optional<double> lowpass_budget;  // default: eps
    std::size_t max_atoms = 6;             // cap on moving atoms kept in s
    std::optional<std::size_t> p_max;      // default: smallest P meeting neumann_tol
    std::optional<std::size_t> k_max;      // default: (M_theta - 1) / 2
    std::optional<std::size_t> m_theta;    // default depends on the number of moving atoms
    std::optional<std::size_t> m_tau;      // default: 64 for N <= 2, else 16; grown to exceed 4P
    double neumann_tol = 1e-8;
    double prune_threshold = 1e-15;
    std::size_t y_samples = 2048;
    std::uint64_t seed = 0;
    std::size_t memory_budget = default_memory_budget;
    std::size_t quad_n = 0;  // Cauchy column in the residual table; 0 skips it

    void validate() const {
        auto positive = [](const std::optional<double>& v, const char* name) {
            if (v && !(*v > 0.0 && std::isfinite(*v)))
                throw ValidationError(std::string("params.") + name + " must be positive and finite");
        };
        positive(eps, "eps");
        positive(domain_margin, "domain_margin");
        positive(atom_budget, "atom_budget");
        positive(lowpass_budget, "lowpass_budget");
        if (!(neumann_tol > 0.0)) throw ValidationError("params.neumann_tol must be positive");
        if (!(prune_threshold >= 0.0 && prune_threshold < 1e-3))
            throw ValidationError("params.prune_threshold must lie in [0, 1e-3)");
        if (m_theta && *m_theta < 4) throw ValidationError("params.M_theta must be at least 4");
        if (m_tau && *m_tau < 4) throw ValidationError("params.M_tau must be at least 4");
        if (quad_n != 0 && quad_n < 64) throw ValidationError("params.quad_n must be 0 or at least 64");
        if (memory_budget == 0) throw ValidationError("params.memory_budget must be positive");
    }
};

/// Default grids for N moving atoms, keeping M_theta^N * M_tau^2 modest.
inline std::size_t default_m_theta(std::size_t n) {
    if (n <= 2) return 64;
    if (n == 3) return 32;
    if (n == 4) return 16;
    return 8;
}

inline std::size_t default_m_tau(std::size_t n) { return n <= 2 ? 64 : 16; }

struct TermNorm {
    std::size_t p = 0, q = 0;
    double norm = 0.0;   // ||(lambda_R/3e)^p * (lambda_I/3e)^q * (kappa_pq + nu_pq)||
    double inner = 0.0;  // ||kappa_pq + nu_pq||
};

struct SynthesisReport {
    double eps = 0.0;
    double domain_margin = 0.0;
    std::size_t atoms_input = 0;
    std::size_t atoms_kept = 0;
    std::size_t moving_atoms = 0;
    double atom_tail = 0.0;      // ||mu_point - s||; carried by lambda, not an error
    double lowpass_error = 0.0;  // ||f - v||_1; carried by lambda, not an error
    double bandwidth = 0.0;
    double residual_norm = 0.0;  // ||mu - v - s||
    double lambda_r_norm = 0.0;
    double lambda_i_norm = 0.0;
    double ratio_r = 0.0;
    double ratio_i = 0.0;
    std::size_t p_max = 0;
    std::size_t k_max = 0;
    std::size_t m_theta = 0;
    std::size_t m_tau = 0;

    double coefficient_tail = 0.0;  // retained-block truncation of the torus coefficients
    double aliasing_estimate = 0.0;
    double neumann_tail = 0.0;
    double prune_loss = 0.0;
    double grid_loss = 0.0;         // crop loss plus density-grid edge mass
    double roundoff = 0.0;

    double decay_c_hat = 0.0;       // diagnostics only
    double decay_tail_bound = 0.0;
    double sup_term_norm = 0.0;
    double amplification = 0.0;     // sum_{p+q<=P} r_R^p r_I^q
    double nu_total_variation = 0.0;
    double tv_bound = 0.0;
    std::vector<TermNorm> terms;

    std::size_t verification_count = 0;
    std::size_t in_k_count = 0;
    double sup_residual = 0.0;
    double mean_residual = 0.0;
    double sup_cauchy_vs_h = 0.0;
    double sup_nu_vs_cauchy = 0.0;

    double total_budget() const {
        return coefficient_tail + aliasing_estimate + neumann_tail + prune_loss + grid_loss + roundoff;
    }

    void absorb(const ResidualStats& s) {
        verification_count = s.records.size();
        in_k_count = s.in_k_count;
        sup_residual = s.sup_residual;
        mean_residual = s.mean_residual;
        sup_cauchy_vs_h = s.sup_cauchy_vs_h;
        sup_nu_vs_cauchy = s.sup_nu_vs_cauchy;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["eps"] = eps;
        j["domain_margin"] = std::isfinite(domain_margin) ? nlohmann::json(domain_margin) : nlohmann::json("inf");
        j["atoms_input"] = atoms_input;
        j["atoms_kept"] = atoms_kept;
        j["moving_atoms"] = moving_atoms;
        j["atom_tail"] = atom_tail;
        j["lowpass_error"] = lowpass_error;
        j["bandwidth"] = bandwidth;
        j["residual_norm"] = residual_norm;
        j["lambda_r_norm"] = lambda_r_norm;
        j["lambda_i_norm"] = lambda_i_norm;
        j["ratio_r"] = ratio_r;
        j["ratio_i"] = ratio_i;
        j["P_max"] = p_max;
        j["K_max"] = k_max;
        j["M_theta"] = m_theta;
        j["M_tau"] = m_tau;
        j["coefficient_tail"] = coefficient_tail;
        j["aliasing_estimate"] = aliasing_estimate;
        j["neumann_tail"] = neumann_tail;
        j["prune_loss"] = prune_loss;
        j["grid_loss"] = grid_loss;
        j["roundoff"] = roundoff;
        j["total_budget"] = total_budget();
        j["decay_c_hat"] = decay_c_hat;
        j["decay_tail_bound"] = decay_tail_bound;
        j["sup_term_norm"] = sup_term_norm;
        j["amplification"] = amplification;
        j["nu_total_variation"] = nu_total_variation;
        j["tv_bound"] = tv_bound;
        j["verification_count"] = verification_count;
        j["in_k_count"] = in_k_count;
        j["sup_residual"] = sup_residual;
        j["mean_residual"] = mean_residual;
        j["sup_cauchy_vs_h"] = sup_cauchy_vs_h;
        j["sup_nu_vs_cauchy"] = sup_nu_vs_cauchy;
        auto t = nlohmann::json::array();
        for (const auto& term : terms) t.push_back({{"p", term.p}, {"q", term.q}, {"norm", term.norm}, {"inner", term.inner}});
        j["terms"] = std::move(t);
        return j;
    }
};

using PQ = std::pair<std::size_t, std::size_t>;

struct PipelineIntermediates {
    std::shared_ptr<const SmoothedExtension> ext;
    std::optional<GridDensity> v;
    std::vector<cplx> v_spectrum;       // DFT-frequency transform of v
    std::vector<std::size_t> band;      // spectrum indices where v^ may be nonzero
    PointMeasure s;
    MixedMeasure lambda_r;
    MixedMeasure lambda_i;
    TorusSource source;
    std::optional<CoefficientTensor> coefficients;
    std::vector<cplx> a_samples;        // A(xi_band[i], tau): [i * M_tau^2 + tau_flat]
    std::map<PQ, GridDensity> kappas;
    std::map<PQ, PointMeasure> nus;

    /// alpha(y) + i beta(y) = v^(y) + s^(y).
    cplx approx_at(std::span<const double> y) const {
        cplx a = s.fourier_at(y);
        if (v) a += v->fourier_at(y[0]);
        return a;
    }

    SpectrumEvaluator evaluator() const {
        return [this](std::span<const double> y) { return approx_at(y); };
    }
};

struct SynthesisResult {
    MixedMeasure nu;
    SynthesisReport report;
    PipelineIntermediates inter;
};

// ---------------------------------------------------------------------------
// Band-limiting and the L1 bound for band-limited densities
// ---------------------------------------------------------------------------

struct Lowpass {
    GridDensity v;
    double bandwidth = 0.0;  // v^ vanishes for |xi| >= bandwidth
    double error = 0.0;      // ||f - v||_1 on the grid
    std::vector<cplx> spectrum;
};

/// Multiplies f^ by a smooth cutoff equal to 1 on [0, R] and 0 beyond 2R,
/// doubling R until ||f - v||_1 < budget.
inline Lowpass lowpass_approximate(const GridDensity& f, double budget) {
    if (!(budget > 0.0)) throw ValidationError("lowpass_approximate: budget must be positive");
    const auto spec = f.spectrum();
    if (std::all_of(f.samples().begin(), f.samples().end(), [](cplx c) { return c == cplx{}; }))
        return {f, 0.0, 0.0, spec};
    const double nyq = f.nyquist();
    const double step = f.frequency_step();
    auto attempt = [&](double r) {
        std::vector<cplx> cut(spec.size());
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const double xi = std::abs(f.spectrum_frequency(i));
            cut[i] = spec[i] * smooth_transition((xi - r) / r);
        }
        GridDensity v = GridDensity::from_spectrum(f.x0(), f.dx(), cut);
        const double err = add(f, v, -1.0).l1_norm();
        return Lowpass{std::move(v), 2.0 * r, err, std::move(cut)};
    };
    double best = infinity;
    for (double r = 2.0 * step;; r *= 2.0) {
        const bool last = 2.0 * r >= nyq;
        if (last) r = 0.5 * nyq;
        auto out = attempt(r);
        if (out.error < budget) return out;
        best = std::min(best, out.error);
        if (last) break;
    }
    throw ConfigurationError("lowpass_approximate: budget " + std::to_string(budget) +
                             " unattainable on this grid; best ||f - v||_1 = " + std::to_string(best) +
                             " at the Nyquist band (refine dx)");
}

struct L1BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    double outside_mass = 0.0;
    bool holds = true;
};

/// ||v||_1 <= 2r (||v^||_inf + (2 pi)^-2 ||v^''||_inf) * pi, with
/// v^'' the transform of -4 pi^2 x^2 v. Sup norms are taken on a 4x
/// zero-padded frequency grid.
inline L1BoundReport l1_bound_check(const GridDensity& v, double r) {
    if (!(r >= 0.0)) throw ValidationError("l1_bound_check: support radius must be non-negative");
    if (!v.is_symmetric()) throw ValidationError("l1_bound_check: grid must be symmetric about the origin");
    L1BoundReport rep;
    const auto spec = v.spectrum();
    double total = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double a = std::abs(spec[i]) * v.frequency_step();
        total += a;
        if (std::abs(v.spectrum_frequency(i)) > r * (1.0 + 1e-12)) rep.outside_mass += a;
    }
    if (rep.outside_mass > 1e-12 * std::max(1.0, total))
        throw ValidationError("l1_bound_check: transform mass " + std::to_string(rep.outside_mass) +
                              " lies outside [-r, r]");
    const std::size_t half = (v.size() - 1) / 2;
    const std::size_t padded_half = 4 * half + 2;
    std::vector<cplx> a(2 * padded_half + 1), b(2 * padded_half + 1);
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double x = v.x(j);
        a[padded_half - half + j] = v.samples()[j];
        b[padded_half - half + j] = x * x * v.samples()[j];
    }
    auto sup = [](const std::vector<cplx>& s) {
        double m = 0.0;
        for (const auto& c : s) m = std::max(m, std::abs(c));
        return m;
    };
    const double sup_v = sup(GridDensity::symmetric(padded_half, v.dx(), a).spectrum());
    const double sup_x2 = sup(GridDensity::symmetric(padded_half, v.dx(), b).spectrum());
    const double pi = std::numbers::pi;
    rep.lhs = v.l1_norm();
    // (2 pi)^-2 ||v^''|| = (2 pi)^-2 * 4 pi^2 ||(x^2 v)^|| = ||(x^2 v)^||.
    rep.rhs = 2.0 * r * (sup_v + sup_x2) * pi;
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-6);
    return rep;
}

// ---------------------------------------------------------------------------
// Neumann assembly
// ---------------------------------------------------------------------------

inline bool is_zero(const MixedMeasure& m) {
    if (!m.point().empty()) return false;
    if (!m.density()) return true;
    return std::all_of(m.density()->samples().begin(), m.density()->samples().end(),
                       [](cplx c) { return c == cplx{}; });
}

struct NeumannResult {
    MixedMeasure sum;
    double tail = 0.0;
    double sup_norm = 0.0;
    double ratio_r = 0.0;
    double ratio_i = 0.0;
    std::vector<TermNorm> terms;
};

/// sum over p + q <= P of (lambda_r/3e)^p * (lambda_i/3e)^q * inner[(p, q)] in
/// increasing p + q, with the closed-form tail sum_{p+q>P} r_R^p r_I^q * sup.
/// sup_bound must dominate ||inner(p, q)|| for all (p, q), including those
/// beyond P; the measured maximum over the supplied terms is used if absent.
inline NeumannResult neumann_assemble(const std::map<PQ, MixedMeasure>& inner, const MixedMeasure& lambda_r,
                                      const MixedMeasure& lambda_i, double eps, std::size_t p_max,
                                      std::optional<double> sup_bound = std::nullopt, MassLedger* ledger = nullptr) {
    if (!(eps > 0.0)) throw ValidationError("neumann_assemble: eps must be positive");
    const auto zero_it = inner.find({0, 0});
    if (zero_it == inner.end()) throw ValidationError("neumann_assemble: term (0, 0) missing");
    const BasisPtr basis = zero_it->second.basis();
    NeumannResult out{MixedMeasure(PointMeasure(basis)), 0.0, 0.0, 0.0, 0.0, {}};
    out.ratio_r = total_variation(lambda_r) / (3.0 * eps);
    out.ratio_i = total_variation(lambda_i) / (3.0 * eps);
    if (!(out.ratio_r < 1.0 && out.ratio_i < 1.0)) {
        const double need = 3.0 * eps * std::max(out.ratio_r, out.ratio_i);
        throw ContractionError("neumann_assemble: contraction ratios r_R = " + std::to_string(out.ratio_r) +
                                   ", r_I = " + std::to_string(out.ratio_i) + " are not below 1",
                               need);
    }
    const bool r_zero = is_zero(lambda_r), i_zero = is_zero(lambda_i);
    const std::size_t pr = r_zero ? 0 : p_max, qi = i_zero ? 0 : p_max;

    double measured_sup = 0.0;
    for (const auto& [pq, m] : inner) measured_sup = std::max(measured_sup, total_variation(m));
    out.sup_norm = sup_bound ? std::max(*sup_bound, measured_sup) : measured_sup;

    const MixedMeasure unit(PointMeasure::unit(basis));
    std::vector<MixedMeasure> rp{unit}, iq{unit};
    const MixedMeasure lr = scaled(lambda_r, 1.0 / (3.0 * eps));
    const MixedMeasure li = scaled(lambda_i, 1.0 / (3.0 * eps));
    for (std::size_t p = 1; p <= pr; ++p) rp.push_back(convolve(rp.back(), lr, ledger));
    for (std::size_t q = 1; q <= qi; ++q) iq.push_back(convolve(iq.back(), li, ledger));

    std::vector<PQ> order;
    for (std::size_t n = 0; n <= p_max; ++n)
        for (std::size_t p = 0; p <= n; ++p)
            if (p <= pr && n - p <= qi) order.emplace_back(p, n - p);

    std::vector<std::optional<MixedMeasure>> terms(order.size());
    std::vector<MassLedger> ledgers(order.size());
    for (auto& l : ledgers) l.prune_relative = ledger ? ledger->prune_relative : MassLedger{}.prune_relative;
    parallel_for(order.size(), [&](std::size_t i) {
        const auto [p, q] = order[i];
        const auto it = inner.find({p, q});
        if (it == inner.end() || is_zero(it->second)) return;
        MixedMeasure t = it->second;
        if (p > 0) t = convolve(rp[p], t, &ledgers[i]);
        if (q > 0) t = convolve(iq[q], t, &ledgers[i]);
        terms[i] = std::move(t);
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
        TermNorm tn{order[i].first, order[i].second, 0.0, 0.0};
        const auto it = inner.find(order[i]);
        if (it != inner.end()) tn.inner = total_variation(it->second);
        if (terms[i]) {
            tn.norm = total_variation(*terms[i]);
            out.sum = (out.sum.point().empty() && !out.sum.density()) ? *terms[i] : add(out.sum, *terms[i]);
        }
        if (ledger) {
            ledger->pruned += ledgers[i].pruned;
            ledger->cropped += ledgers[i].cropped;
        }
        out.terms.push_back(tn);
    }
    out.tail = (r_zero && i_zero) ? 0.0
               : r_zero           ? neumann_tail(0.0, out.ratio_i, p_max) * out.sup_norm
               : i_zero           ? neumann_tail(out.ratio_r, 0.0, p_max) * out.sup_norm
                                  : neumann_tail(out.ratio_r, out.ratio_i, p_max) * out.sup_norm;
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace detail {

inline double edge_mass(const GridDensity& f) {
    const std::size_t m = f.size();
    const std::size_t edge = std::max<std::size_t>(1, m / 8);
    double s = 0.0;
    for (std::size_t j = 0; j < edge; ++j) s += std::abs(f.samples()[j]) + std::abs(f.samples()[m - 1 - j]);
    return s * f.dx();
}

struct DensityStage {
    std::vector<cplx> samples;  // A on band x tau grid
    std::vector<cplx> coeffs;   // [i * (P+1)^2 + p (P+1) + q]
    double tau_upper_band = 0.0;
    double tau_half_diff = 0.0;  // max over band of the half-grid difference
    double u_bound = 0.0;       // max_tau ||u_tau||_1, bounds every ||kappa_pq||_1
};

inline std::vector<cplx> sample_A(const PipelineIntermediates& in, const GridDensity& grid_shape, std::size_t m_tau) {
    const std::size_t tp = m_tau * m_tau;
    const auto& ext = *in.ext;
    const double r = 3.0 * ext.eps();
    std::vector<cplx> out(in.band.size() * tp);
    parallel_for(in.band.size(), [&](std::size_t i) {
        const double xi = grid_shape.spectrum_frequency(in.band[i]);
        const cplx sh = in.s.fourier_at(std::span<const double>(&xi, 1));
        const cplx full = sh + in.v_spectrum[in.band[i]];
        for (std::size_t t = 0; t < tp; ++t) {
            const cplx e1 = r * turn(static_cast<double>(t / m_tau) / static_cast<double>(m_tau));
            const cplx e2 = r * turn(static_cast<double>(t % m_tau) / static_cast<double>(m_tau));
            out[i * tp + t] = ext(full.real() + e1, full.imag() + e2) - ext(sh.real() + e1, sh.imag() + e2);
        }
    });
    return out;
}

inline DensityStage density_coefficients(std::vector<cplx> samples, const std::vector<std::size_t>& band,
                                         const GridDensity& grid_shape, std::size_t m_tau, std::size_t p_max) {
    DensityStage st;
    const std::size_t tp = m_tau * m_tau;
    const std::size_t pq = (p_max + 1) * (p_max + 1);
    st.coeffs.assign(band.size() * pq, cplx{});
    std::vector<double> upper(band.size(), 0.0), hdiff(band.size(), 0.0);
    FftPlan plan({static_cast<int>(m_tau), static_cast<int>(m_tau)}, FftDirection::forward);
    FftPlan half({static_cast<int>(m_tau / 2), static_cast<int>(m_tau / 2)}, FftDirection::forward);
    parallel_for(band.size(), [&](std::size_t i) {
        std::vector<cplx> in(samples.begin() + static_cast<long long>(i * tp),
                             samples.begin() + static_cast<long long>((i + 1) * tp));
        std::vector<cplx> spec(tp);
        plan.execute(in, spec);
        hdiff[i] = tau_half_diff(in, spec, m_tau, p_max, half);
        const double norm = 1.0 / static_cast<double>(tp);
        for (std::size_t k = 0; k < tp; ++k) {
            const long long p = signed_index(k / m_tau, m_tau);
            const long long q = signed_index(k % m_tau, m_tau);
            if (4 * std::max(std::llabs(p), std::llabs(q)) > static_cast<long long>(m_tau))
                upper[i] += std::abs(spec[k]) * norm;
        }
        for (std::size_t p = 0; p <= p_max; ++p)
            for (std::size_t q = 0; q <= p_max; ++q)
                st.coeffs[i * pq + p * (p_max + 1) + q] = spec[p * m_tau + q] * norm;
    });
    for (double u : upper) st.tau_upper_band = std::max(st.tau_upper_band, u);
    for (double u : hdiff) st.tau_half_diff = std::max(st.tau_half_diff, u);
    // max over tau nodes of ||u_tau||_1, u_tau the inverse transform of A(., tau).
    std::vector<double> u_l1(tp, 0.0);
    parallel_for(tp, [&](std::size_t t) {
        std::vector<cplx> spec(grid_shape.size(), cplx{});
        for (std::size_t i = 0; i < band.size(); ++i) spec[band[i]] = samples[i * tp + t];
        u_l1[t] = GridDensity::from_spectrum(grid_shape.x0(), grid_shape.dx(), spec).l1_norm();
    });
    for (double u : u_l1) st.u_bound = std::max(st.u_bound, u);
    st.samples = std::move(samples);
    return st;
}

/// Whether the polydisk of radius 3e around c0 keeps H on its plateau
/// (every point within 6 eps < 7 eps of K) or off its support entirely.
inline bool constant_in_plateau(cplx c0, const CompactSet& k) { return k.contains(c0); }
inline bool constant_outside_support(cplx c0, const CompactSet& k, double eps) {
    return k.dist2(c0) >= (9.0 + 3.0 * std::numbers::sqrt2) * eps;
}

}  // namespace detail

/// Residual table on the default verification set of the result.
inline ResidualStats verify_synthesis(const SynthesisResult& res, const MixedMeasure& mu, const AnalyticFunction& h,
                                      const CompactSet& k, const SynthesisParams& params,
                                      std::optional<std::vector<std::vector<double>>> y_set = std::nullopt) {
    std::vector<std::vector<double>> ys;
    if (y_set) {
        ys = std::move(*y_set);
    } else if (mu.density()) {
        ys = band_verification_set(res.report.bandwidth, mu.density()->nyquist(), params.y_samples);
    } else {
        ys = lattice_verification_set(*mu.basis(), params.y_samples, params.seed);
    }
    std::optional<CauchyCheck> cc;
    if (params.quad_n > 0) cc = CauchyCheck{res.inter.ext.get(), res.inter.evaluator(), params.quad_n};
    return residual_report(res.nu, mu, h, k, ys, 2.0 * res.report.eps, cc ? &*cc : nullptr);
}

/// The full pipeline for a point measure, optionally with a d = 1 density.
inline SynthesisResult synthesize_mixed(const MixedMeasure& mu, const AnalyticFunction& h, const CompactSet& k,
                                        const SynthesisParams& params) {
    params.validate();
    SynthesisReport rep;

    // Margin and eps.
    double margin = h.domain_margin(k);
    if (params.domain_margin) margin = std::min(margin, *params.domain_margin);
    if (!std::isfinite(margin)) margin = 1.0;
    const double eps = params.eps ? *params.eps : choose_epsilon(margin);
    auto ext = std::make_shared<const SmoothedExtension>(h, k, eps, params.domain_margin);
    rep.eps = eps;
    rep.domain_margin = ext->margin();

    // Band-limiting.
    std::optional<GridDensity> v;
    std::vector<cplx> v_spec;
    std::vector<std::size_t> band;
    if (mu.density()) {
        const auto& f = *mu.density();
        if (!f.is_symmetric()) throw ValidationError("synthesis: density grid must be odd-length and centred on 0");
        auto lp = lowpass_approximate(f, params.lowpass_budget.value_or(eps));
        rep.lowpass_error = lp.error;
        rep.bandwidth = lp.bandwidth;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (std::abs(f.spectrum_frequency(i)) < lp.bandwidth && lp.spectrum[i] != cplx{}) band.push_back(i);
        if (lp.bandwidth > f.nyquist() * (1.0 + 1e-12))
            throw ConfigurationError("synthesis: band of v^ exceeds the grid's Nyquist frequency");
        v = std::move(lp.v);
        v_spec = std::move(lp.spectrum);
    }

    // Atom truncation.
    rep.atoms_input = mu.point().size();
    auto trunc = truncate_atoms(mu.point(), params.atom_budget.value_or(eps), params.max_atoms);
    rep.atom_tail = trunc.tail_norm;
    rep.atoms_kept = trunc.kept.size();

    // Residual split and contraction.
    auto split = residual_split(mu, v, trunc.kept);
    MassLedger ledger;
    ledger.prune_relative = params.prune_threshold;
    auto prune_lambda = [&](MixedMeasure m, double& lost) {
        PointMeasure pt = m.point();
        lost += pt.prune(params.prune_threshold);
        return MixedMeasure(std::move(pt), m.density());
    };
    double lambda_pruned = 0.0;
    MixedMeasure lam_r = prune_lambda(split.real_part, lambda_pruned);
    MixedMeasure lam_i = prune_lambda(split.imag_part, lambda_pruned);
    {
        MixedMeasure r(add(mu.point(), trunc.kept, -1.0),
                       v ? std::optional<GridDensity>(add(*mu.density(), *v, -1.0)) : std::nullopt);
        rep.residual_norm = total_variation(r);
    }
    rep.lambda_r_norm = total_variation(lam_r);
    rep.lambda_i_norm = total_variation(lam_i);
    rep.ratio_r = rep.lambda_r_norm / (3.0 * eps);
    rep.ratio_i = rep.lambda_i_norm / (3.0 * eps);
    if (std::max(rep.lambda_r_norm, rep.lambda_i_norm) >= 2.0 * eps) {
        const double need = std::max(0.0, 2.0 * eps - rep.lowpass_error);
        throw ContractionError("synthesis: residual norms ||lambda_R|| = " + std::to_string(rep.lambda_r_norm) +
                                   ", ||lambda_I|| = " + std::to_string(rep.lambda_i_norm) + " reach 2 eps = " +
                                   std::to_string(2.0 * eps) + "; atom tail " + std::to_string(rep.atom_tail) +
                                   " must fall below " + std::to_string(need) +
                                   " (lower atom_budget or raise max_atoms)",
                               need);
    }
    const bool lambda_zero = is_zero(lam_r) && is_zero(lam_i);

    PipelineIntermediates in{ext,    v,     std::move(v_spec), std::move(band), trunc.kept, lam_r, lam_i,
                             torus_source(trunc.kept), std::nullopt, {},  {},   {}};
    const std::size_t n = in.source.dims();
    rep.moving_atoms = n;

    // Torus grid.
    TorusGrid grid;
    grid.n_theta = n;
    grid.m_theta = params.m_theta.value_or(default_m_theta(n));
    grid.k_max = params.k_max.value_or((grid.m_theta - 1) / 2);
    std::size_t m_tau = params.m_tau.value_or(default_m_tau(n));
    std::size_t p_max = lambda_zero ? 0 : params.p_max.value_or(0);
    if (params.p_max && !lambda_zero) m_tau = std::max(m_tau, next_pow2_above(4 * p_max));

    const cplx c0 = in.source.constant;
    const bool skip_torus = n == 0 && detail::constant_outside_support(c0, k, eps);
    const bool exact_constant = n == 0 && detail::constant_in_plateau(c0, k);

    std::optional<BTensor> bt;
    detail::DensityStage dstage;
    std::vector<cplx> a_samples;
    auto sample_stage = [&](std::size_t mt) {
        grid.m_tau = mt;
        grid.p_max = 0;
        if (!skip_torus) bt = sample_and_theta_fft(in.source, *ext, grid, params.memory_budget);
        if (v) a_samples = detail::sample_A(in, *v, mt);
    };
    auto sup_bound = [&]() {
        double b = 0.0;
        if (bt) {
            double row = 0.0;
            for (std::size_t kf = 0; kf < grid.k_count(); ++kf) {
                double mx = 0.0;
                for (std::size_t t = 0; t < grid.tau_points(); ++t) mx = std::max(mx, std::abs(bt->at(kf, t)));
                row += mx;
            }
            b += row;
        }
        if (v) b += detail::density_coefficients(a_samples, in.band, *v, grid.m_tau, 0).u_bound;
        return b;
    };

    sample_stage(m_tau);
    double sup = sup_bound();
    if (!lambda_zero && !params.p_max) {
        const double rr = rep.ratio_r, ri = rep.ratio_i;
        p_max = 1;
        while (neumann_tail(rr, ri, p_max) * sup > params.neumann_tol) {
            if (++p_max > 400) throw ConfigurationError("synthesis: Neumann tail does not reach neumann_tol");
        }
        const std::size_t need = std::max(m_tau, next_pow2_above(4 * p_max));
        if (need != m_tau) {
            m_tau = need;
            sample_stage(m_tau);
            sup = sup_bound();
        }
    }
    grid.p_max = p_max;
    grid.m_tau = m_tau;
    grid.validate(params.memory_budget);
    rep.p_max = p_max;
    rep.k_max = grid.k_max;
    rep.m_theta = grid.m_theta;
    rep.m_tau = grid.m_tau;

    // nu_pq.
    double coeff_pruned = 0.0;
    if (bt) {
        bt->grid.p_max = p_max;
        const auto dec = decay_check(*bt, std::size_t{2});
        rep.decay_c_hat = dec.c_hat;
        rep.decay_tail_bound = dec.tail_bound;
        in.coefficients = tau_fft(*bt);
        bt.reset();
        for (std::size_t p = 0; p <= p_max; ++p)
            for (std::size_t q = 0; q <= p_max; ++q)
                in.nus.emplace(PQ{p, q}, coefficient_measure(*in.coefficients, in.source, p, q, params.prune_threshold,
                                                             &coeff_pruned));
        if (exact_constant) {
            // Mean value over the torus: t(0, 0) = h(c0) exactly.
            in.nus.at({0, 0}) = PointMeasure::dirac(mu.basis(), mu.basis()->zero_index(), h(c0));
        }
    } else {
        for (std::size_t p = 0; p <= p_max; ++p)
            for (std::size_t q = 0; q <= p_max; ++q) in.nus.emplace(PQ{p, q}, PointMeasure(mu.basis()));
    }

    // kappa_pq.
    double kappa_edge = 0.0;
    if (v) {
        dstage = detail::density_coefficients(std::move(a_samples), in.band, *v, m_tau, p_max);
        const std::size_t pq = (p_max + 1) * (p_max + 1);
        for (std::size_t p = 0; p <= p_max; ++p)
            for (std::size_t q = 0; q <= p_max; ++q) {
                std::vector<cplx> spec(v->size(), cplx{});
                for (std::size_t i = 0; i < in.band.size(); ++i)
                    spec[in.band[i]] = dstage.coeffs[i * pq + p * (p_max + 1) + q];
                in.kappas.emplace(PQ{p, q}, GridDensity::from_spectrum(v->x0(), v->dx(), spec));
            }
        const auto& k00 = in.kappas.at({0, 0});
        const double e00 = detail::edge_mass(k00);
        if (e00 > 0.05 * k00.l1_norm() && e00 > 1e-6)
            throw ConfigurationError("synthesis: kappa_00 keeps " + std::to_string(e00) +
                                     " of its mass near the grid edge; pad the density grid to at least " +
                                     std::to_string(2 * v->size() - 1) + " samples");
        for (std::size_t p = 0; p <= p_max; ++p)
            for (std::size_t q = 0; q <= p_max; ++q)
                kappa_edge += std::pow(rep.ratio_r, static_cast<double>(p)) *
                              std::pow(rep.ratio_i, static_cast<double>(q)) * detail::edge_mass(in.kappas.at({p, q}));
        in.a_samples = std::move(dstage.samples);
    }

    // Assembly.
    std::map<PQ, MixedMeasure> inner;
    for (std::size_t p = 0; p <= p_max; ++p)
        for (std::size_t q = 0; q <= p_max; ++q) {
            std::optional<GridDensity> kap;
            if (v) kap = in.kappas.at({p, q});
            inner.emplace(PQ{p, q}, MixedMeasure(in.nus.at({p, q}), std::move(kap)));
        }
    auto nr = neumann_assemble(inner, lam_r, lam_i, eps, p_max, sup, &ledger);

    double amp = 0.0;
    for (std::size_t p = 0; p <= p_max; ++p)
        for (std::size_t q = 0; q + p <= p_max; ++q)
            amp += std::pow(rep.ratio_r, static_cast<double>(p)) * std::pow(rep.ratio_i, static_cast<double>(q));
    if (lambda_zero) amp = 1.0;
    rep.amplification = amp;
    rep.sup_term_norm = nr.sup_norm;
    rep.terms = nr.terms;
    if (in.coefficients && !exact_constant) {
        rep.coefficient_tail = amp * in.coefficients->truncation_tail;
        rep.aliasing_estimate = amp * in.coefficients->aliasing_estimate();
    }
    if (v) rep.aliasing_estimate += amp * dstage.tau_half_diff;
    rep.neumann_tail = nr.tail;
    const double rmax = std::max(rep.ratio_r, rep.ratio_i);
    rep.prune_loss = coeff_pruned + ledger.pruned +
                     lambda_pruned / (3.0 * eps) * nr.sup_norm * 2.0 / std::pow(1.0 - rmax, 3.0);
    rep.grid_loss = ledger.cropped * std::max(1.0, nr.sup_norm) + kappa_edge;

    MixedMeasure nu = std::move(nr.sum);
    rep.nu_total_variation = total_variation(nu);
    rep.tv_bound = nr.tail;
    for (const auto& t : nr.terms)
        rep.tv_bound += std::pow(rep.ratio_r, static_cast<double>(t.p)) * std::pow(rep.ratio_i, static_cast<double>(t.q)) *
                        t.inner;
    rep.tv_bound += rep.prune_loss + rep.grid_loss;
    rep.roundoff = 1e-12 * (1.0 + rep.nu_total_variation + total_variation(mu));

    SynthesisResult res{std::move(nu), std::move(rep), std::move(in)};
    if (params.y_samples > 0) res.report.absorb(verify_synthesis(res, mu, h, k, params));
    return res;
}

inline std::pair<PointMeasure, SynthesisReport> synthesize_point(const PointMeasure& mu, const AnalyticFunction& h,
                                                                 const CompactSet& k, const SynthesisParams& params) {
    auto res = synthesize_mixed(MixedMeasure(mu), h, k, params);
    return {res.nu.point(), std::move(res.report)};
}

struct DensitySynthesis {
    GridDensity g;
    cplx h0;
    SynthesisReport report;
};

/// Absolutely continuous part g and the atom h0 at the origin with
/// g^(y) + h0 ~ h(f^(y)) wherever f^(y) lies in K.
inline DensitySynthesis synthesize_density(const GridDensity& f, const AnalyticFunction& h, const CompactSet& k,
                                           const SynthesisParams& params) {
    const auto basis = make_basis(1, {});
    auto res = synthesize_mixed(MixedMeasure(PointMeasure(basis), f), h, k, params);
    GridDensity g = res.nu.density() ? *res.nu.density() : f.with_samples(std::vector<cplx>(f.size()));
    return {std::move(g), res.nu.point().coefficient({}), std::move(res.report)};
}

struct InverseSetup {
    AnalyticFunction h;
    CompactSet k;
};

/// h = 0 on |z| <= eps_inv/2 and 1/z on eps_inv <= |z| <= ||mu|| + eps_inv.
inline InverseSetup regularized_inverse_setup(double mu_norm, double eps_inv) {
    if (!(eps_inv > 0.0) || !std::isfinite(eps_inv)) throw ValidationError("regularized_inverse: eps_inv must be positive");
    const double outer = mu_norm + eps_inv;
    if (!(outer > eps_inv)) throw ValidationError("regularized_inverse: measure has zero norm");
    auto disc = CompactSet::disc(0.0, 0.5 * eps_inv);
    auto ring = CompactSet::annulus(0.0, eps_inv, outer);
    auto h = piecewise({{disc, builtin_function("zero")}, {ring, builtin_function("reciprocal")}});
    return {std::move(h), CompactSet::union_of({disc, ring})};
}

inline SynthesisResult regularized_inverse(const MixedMeasure& mu, double eps_inv, const SynthesisParams& params) {
    auto setup = regularized_inverse_setup(total_variation(mu), eps_inv);
    return synthesize_mixed(mu, setup.h, setup.k, params);
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_SYNTHESIS_HPP
