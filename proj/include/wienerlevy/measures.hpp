// measures.hpp
//
// Finite complex measures on R^d made of Dirac atoms on a frequency lattice
// plus (in d = 1) a uniformly sampled density. Atoms are keyed by their
// integer coordinates over a fixed basis {gamma_n}, so the location of the
// atom with key k is rho_k = sum_n k_n gamma_n and convolution of atoms is
// addition of keys. Two atoms never merge because their float locations
// happen to coincide.
//
// Transform convention: mu^(y) = integral exp(-2 pi i <x, y>) mu(dx).

#ifndef WIENERLEVY_MEASURES_HPP
#define WIENERLEVY_MEASURES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wienerlevy/errors.hpp"
#include "wienerlevy/fft.hpp"

namespace wienerlevy {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// exp(-2 pi i t), with t reduced mod 1 first so large phases keep their
/// fractional accuracy.
inline cplx unit_phase(double t) {
    const double frac = t - std::floor(t);
    return std::polar(1.0, -two_pi * frac);
}

// ---------------------------------------------------------------------------
// FrequencyBasis
// ---------------------------------------------------------------------------

using LatticeIndex = std::vector<int>;

class FrequencyBasis {
public:
    FrequencyBasis(int dim, std::vector<std::vector<double>> gammas)
        : dim_(dim), gammas_(std::move(gammas)) {
        if (dim_ <= 0) throw ValidationError("FrequencyBasis: dimension must be positive");
        for (const auto& g : gammas_) {
            if (static_cast<int>(g.size()) != dim_)
                throw ValidationError("FrequencyBasis: frequency vector of wrong dimension");
            for (double c : g)
                if (!std::isfinite(c)) throw ValidationError("FrequencyBasis: non-finite frequency");
        }
    }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return gammas_.size(); }
    const std::vector<std::vector<double>>& gammas() const noexcept { return gammas_; }

    std::vector<double> location(const LatticeIndex& k) const {
        check_index(k);
        std::vector<double> rho(static_cast<std::size_t>(dim_), 0.0);
        for (std::size_t n = 0; n < gammas_.size(); ++n)
            for (int c = 0; c < dim_; ++c) rho[c] += k[n] * gammas_[n][c];
        return rho;
    }

    /// <gamma_n, y> for every basis vector.
    std::vector<double> pairings(std::span<const double> y) const {
        if (static_cast<int>(y.size()) != dim_)
            throw ValidationError("evaluation point has dimension " + std::to_string(y.size()) +
                                  ", basis has dimension " + std::to_string(dim_));
        std::vector<double> out(gammas_.size(), 0.0);
        for (std::size_t n = 0; n < gammas_.size(); ++n)
            for (int c = 0; c < dim_; ++c) out[n] += gammas_[n][c] * y[c];
        return out;
    }

    void check_index(const LatticeIndex& k) const {
        if (k.size() != gammas_.size())
            throw ValidationError("lattice index has length " + std::to_string(k.size()) +
                                  ", basis has " + std::to_string(gammas_.size()) + " vectors");
    }

    LatticeIndex zero_index() const { return LatticeIndex(gammas_.size(), 0); }

    friend bool operator==(const FrequencyBasis& a, const FrequencyBasis& b) {
        return a.dim_ == b.dim_ && a.gammas_ == b.gammas_;
    }

private:
    int dim_;
    std::vector<std::vector<double>> gammas_;
};

using BasisPtr = std::shared_ptr<const FrequencyBasis>;

inline BasisPtr make_basis(int dim, std::vector<std::vector<double>> gammas) {
    return std::make_shared<const FrequencyBasis>(dim, std::move(gammas));
}

inline bool same_basis(const BasisPtr& a, const BasisPtr& b) {
    return a == b || (a && b && *a == *b);
}

/// Accumulates mass discarded by pruning and by grid cropping during
/// measure algebra, so the synthesis can put it in its error budget.
struct MassLedger {
    double prune_relative = 1e-15;
    double pruned = 0.0;
    double cropped = 0.0;
};

// ---------------------------------------------------------------------------
// PointMeasure
// ---------------------------------------------------------------------------

class PointMeasure {
public:
    using AtomMap = std::map<LatticeIndex, cplx>;

    explicit PointMeasure(BasisPtr basis) : basis_(std::move(basis)) {
        if (!basis_) throw ValidationError("PointMeasure: null basis");
    }

    PointMeasure(BasisPtr basis, AtomMap atoms) : PointMeasure(std::move(basis)) {
        for (auto& [k, c] : atoms) add(k, c);
    }

    static PointMeasure dirac(BasisPtr basis, LatticeIndex k, cplx coef = 1.0) {
        PointMeasure m(std::move(basis));
        m.add(k, coef);
        return m;
    }

    static PointMeasure unit(BasisPtr basis) {
        auto zero = basis->zero_index();
        return dirac(std::move(basis), std::move(zero));
    }

    const BasisPtr& basis() const noexcept { return basis_; }
    const AtomMap& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    bool empty() const noexcept { return atoms_.empty(); }

    cplx coefficient(const LatticeIndex& k) const {
        auto it = atoms_.find(k);
        return it == atoms_.end() ? cplx{} : it->second;
    }

    /// Adds coef to the atom at k; exact zeros are never stored.
    void add(const LatticeIndex& k, cplx coef) {
        basis_->check_index(k);
        if (!std::isfinite(coef.real()) || !std::isfinite(coef.imag()))
            throw ValidationError("PointMeasure: non-finite coefficient");
        if (coef == cplx{}) return;
        auto [it, inserted] = atoms_.try_emplace(k, coef);
        if (!inserted) {
            it->second += coef;
            if (it->second == cplx{}) atoms_.erase(it);
        }
    }

    /// Appends an atom whose key sorts after every stored key (bulk
    /// construction from sorted data).
    void append_sorted(LatticeIndex k, cplx coef) {
        if (coef == cplx{}) return;
        if (!atoms_.empty() && !(atoms_.rbegin()->first < k))
            throw ValidationError("PointMeasure::append_sorted: keys out of order");
        atoms_.emplace_hint(atoms_.end(), std::move(k), coef);
    }

    double total_variation() const {
        double s = 0.0;
        for (const auto& [k, c] : atoms_) s += std::abs(c);
        return s;
    }

    cplx fourier_at(std::span<const double> y) const;

    /// Drops atoms with |coef| < relative * total variation; returns the
    /// discarded mass.
    double prune(double relative) {
        if (relative <= 0.0 || atoms_.empty()) return 0.0;
        const double cut = relative * total_variation();
        double lost = 0.0;
        for (auto it = atoms_.begin(); it != atoms_.end();) {
            if (std::abs(it->second) < cut) {
                lost += std::abs(it->second);
                it = atoms_.erase(it);
            } else {
                ++it;
            }
        }
        return lost;
    }

    friend bool operator==(const PointMeasure& a, const PointMeasure& b) {
        return same_basis(a.basis_, b.basis_) && a.atoms_ == b.atoms_;
    }

private:
    BasisPtr basis_;
    AtomMap atoms_;
};

/// Flattened copy of a point measure for repeated transform evaluation:
/// sum_k c_k exp(-2 pi i <rho_k, y>) via per-axis phase tables
/// exp(-2 pi i j <gamma_n, y>) over the key range of each axis.
class PointEvaluator {
public:
    explicit PointEvaluator(const PointMeasure& m) : basis_(m.basis()) {
        const std::size_t d = basis_->size();
        lo_.assign(d, 0);
        hi_.assign(d, 0);
        keys_.reserve(m.size() * d);
        coefs_.reserve(m.size());
        for (const auto& [k, c] : m.atoms()) {
            for (std::size_t n = 0; n < d; ++n) {
                lo_[n] = std::min(lo_[n], k[n]);
                hi_[n] = std::max(hi_[n], k[n]);
                keys_.push_back(k[n]);
            }
            coefs_.push_back(c);
        }
        for (std::size_t i = 0; i < coefs_.size(); ++i)
            for (std::size_t n = 0; n < d; ++n) keys_[i * d + n] -= lo_[n];
    }

    cplx operator()(std::span<const double> y) const {
        const auto g = basis_->pairings(y);
        if (coefs_.empty()) return {};
        const std::size_t d = g.size();
        std::vector<std::vector<cplx>> table(d);
        for (std::size_t n = 0; n < d; ++n) {
            table[n].resize(static_cast<std::size_t>(hi_[n] - lo_[n]) + 1);
            for (int j = lo_[n]; j <= hi_[n]; ++j) table[n][j - lo_[n]] = unit_phase(j * g[n]);
        }
        cplx acc{};
        const int* key = keys_.data();
        for (const auto& c : coefs_) {
            cplx z = c;
            for (std::size_t n = 0; n < d; ++n) z *= table[n][key[n]];
            acc += z;
            key += d;
        }
        return acc;
    }

private:
    BasisPtr basis_;
    std::vector<int> lo_, hi_;
    std::vector<int> keys_;
    std::vector<cplx> coefs_;
};

inline cplx PointMeasure::fourier_at(std::span<const double> y) const { return PointEvaluator(*this)(y); }

// ---------------------------------------------------------------------------
// GridDensity (d = 1)
// ---------------------------------------------------------------------------

/// Samples f(x0 + j dx), j = 0..M-1, of a density treated as band-limited to
/// the grid's Nyquist band.
class GridDensity {
public:
    GridDensity(double x0, double dx, std::vector<cplx> samples)
        : x0_(x0), dx_(dx), samples_(std::move(samples)) {
        if (!(dx_ > 0.0) || !std::isfinite(dx_)) throw ValidationError("GridDensity: dx must be positive");
        if (!std::isfinite(x0_)) throw ValidationError("GridDensity: non-finite x0");
        if (samples_.empty()) throw ValidationError("GridDensity: no samples");
        for (const auto& s : samples_)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw ValidationError("GridDensity: non-finite sample");
    }

    /// Odd-length grid centred on the origin: x_j = (j - (M-1)/2) dx. Such a
    /// grid is closed under reflection and contains x = 0 as a node.
    static GridDensity symmetric(std::size_t half_width, double dx, std::vector<cplx> samples = {}) {
        const std::size_t m = 2 * half_width + 1;
        if (samples.empty()) samples.assign(m, cplx{});
        if (samples.size() != m) throw ValidationError("GridDensity::symmetric: sample count mismatch");
        return GridDensity(-static_cast<double>(half_width) * dx, dx, std::move(samples));
    }

    double x0() const noexcept { return x0_; }
    double dx() const noexcept { return dx_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double x(std::size_t j) const noexcept { return x0_ + static_cast<double>(j) * dx_; }
    const std::vector<cplx>& samples() const noexcept { return samples_; }
    double nyquist() const noexcept { return 0.5 / dx_; }
    double frequency_step() const noexcept { return 1.0 / (static_cast<double>(size()) * dx_); }

    bool same_grid(const GridDensity& o) const noexcept {
        const double tol = 1e-12 * std::max({1.0, std::abs(x0_), dx_});
        return size() == o.size() && std::abs(dx_ - o.dx_) <= 1e-12 * dx_ && std::abs(x0_ - o.x0_) <= tol;
    }

    /// Index of the x = 0 node, if the origin lies on the grid.
    std::optional<std::size_t> origin_index() const {
        const double r = -x0_ / dx_;
        const double n = std::round(r);
        if (std::abs(r - n) > 1e-9 || n < 0 || n >= static_cast<double>(size())) return std::nullopt;
        return static_cast<std::size_t>(n);
    }

    bool is_symmetric() const {
        const double expect = -0.5 * static_cast<double>(size() - 1) * dx_;
        return size() % 2 == 1 && std::abs(x0_ - expect) <= 1e-12 * std::max(1.0, std::abs(x0_));
    }

    double l1_norm() const {
        double s = 0.0;
        for (const auto& v : samples_) s += std::abs(v);
        return dx_ * s;
    }

    /// Riemann sum dx * sum_j f_j exp(-2 pi i x_j y).
    cplx fourier_at(double y) const {
        // Recurrence on the phase would drift over long grids; evaluate directly.
        cplx acc{};
        for (std::size_t j = 0; j < samples_.size(); ++j) acc += samples_[j] * unit_phase(x(j) * y);
        return dx_ * acc;
    }

    // Spectrum on the DFT frequencies xi_m = m / (M dx), m = m_min..m_min+M-1
    // with m_min = -floor(M/2); entry i holds m = m_min + i.
    long long spectrum_min_index() const noexcept { return -static_cast<long long>(size() / 2); }
    double spectrum_frequency(std::size_t i) const noexcept {
        return static_cast<double>(spectrum_min_index() + static_cast<long long>(i)) * frequency_step();
    }

    /// Exact Riemann-sum transform at the DFT frequencies.
    std::vector<cplx> spectrum() const {
        const std::size_t m = size();
        auto raw = fft(samples_, FftDirection::forward);
        std::vector<cplx> out(m);
        const long long mmin = spectrum_min_index();
        for (std::size_t i = 0; i < m; ++i) {
            const long long idx = mmin + static_cast<long long>(i);
            const std::size_t r = static_cast<std::size_t>((idx % static_cast<long long>(m) + static_cast<long long>(m)) %
                                                           static_cast<long long>(m));
            out[i] = dx_ * unit_phase(x0_ * spectrum_frequency(i)) * raw[r];
        }
        return out;
    }

    /// Inverse of spectrum(): the grid density whose DFT-frequency transform
    /// equals spec.
    static GridDensity from_spectrum(double x0, double dx, std::span<const cplx> spec) {
        const std::size_t m = spec.size();
        GridDensity shape(x0, dx, std::vector<cplx>(m));
        std::vector<cplx> raw(m);
        const long long mmin = shape.spectrum_min_index();
        for (std::size_t i = 0; i < m; ++i) {
            const long long idx = mmin + static_cast<long long>(i);
            const std::size_t r = static_cast<std::size_t>((idx % static_cast<long long>(m) + static_cast<long long>(m)) %
                                                           static_cast<long long>(m));
            raw[r] = spec[i] * std::conj(unit_phase(x0 * shape.spectrum_frequency(i)));
        }
        auto back = fft(raw, FftDirection::backward);
        const double scale = shape.frequency_step();
        for (auto& v : back) v *= scale;
        return GridDensity(x0, dx, std::move(back));
    }

    GridDensity with_samples(std::vector<cplx> s) const { return GridDensity(x0_, dx_, std::move(s)); }

    friend bool operator==(const GridDensity& a, const GridDensity& b) {
        return a.x0_ == b.x0_ && a.dx_ == b.dx_ && a.samples_ == b.samples_;
    }

private:
    double x0_;
    double dx_;
    std::vector<cplx> samples_;
};

// ---------------------------------------------------------------------------
// MixedMeasure
// ---------------------------------------------------------------------------

class MixedMeasure {
public:
    explicit MixedMeasure(PointMeasure point, std::optional<GridDensity> density = std::nullopt)
        : point_(std::move(point)), density_(std::move(density)) {
        if (density_ && point_.basis()->dim() != 1)
            throw ValidationError("MixedMeasure: densities are supported only in dimension 1");
    }

    const PointMeasure& point() const noexcept { return point_; }
    const std::optional<GridDensity>& density() const noexcept { return density_; }
    const BasisPtr& basis() const noexcept { return point_.basis(); }

    friend bool operator==(const MixedMeasure& a, const MixedMeasure& b) {
        return a.point_ == b.point_ && a.density_ == b.density_;
    }

private:
    PointMeasure point_;
    std::optional<GridDensity> density_;
};

// ---------------------------------------------------------------------------
// Linear structure
// ---------------------------------------------------------------------------

inline PointMeasure scaled(const PointMeasure& m, cplx factor) {
    PointMeasure out(m.basis());
    if (factor == cplx{}) return out;
    for (const auto& [k, c] : m.atoms()) out.add(k, c * factor);
    return out;
}

inline GridDensity scaled(const GridDensity& f, cplx factor) {
    auto s = f.samples();
    for (auto& v : s) v *= factor;
    return f.with_samples(std::move(s));
}

inline MixedMeasure scaled(const MixedMeasure& m, cplx factor) {
    std::optional<GridDensity> d;
    if (m.density()) d = scaled(*m.density(), factor);
    return MixedMeasure(scaled(m.point(), factor), std::move(d));
}

inline PointMeasure add(const PointMeasure& a, const PointMeasure& b, cplx b_factor = 1.0) {
    if (!same_basis(a.basis(), b.basis())) throw ValidationError("measure addition: bases differ");
    PointMeasure out = a;
    for (const auto& [k, c] : b.atoms()) out.add(k, b_factor * c);
    return out;
}

inline GridDensity add(const GridDensity& a, const GridDensity& b, cplx b_factor = 1.0) {
    if (!a.same_grid(b)) throw ValidationError("density addition: sample grids differ");
    auto s = a.samples();
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += b_factor * b.samples()[j];
    return a.with_samples(std::move(s));
}

inline std::optional<GridDensity> add(const std::optional<GridDensity>& a, const std::optional<GridDensity>& b,
                                      cplx b_factor = 1.0) {
    if (!b) return a;
    if (!a) return scaled(*b, b_factor);
    return add(*a, *b, b_factor);
}

inline MixedMeasure add(const MixedMeasure& a, const MixedMeasure& b, cplx b_factor = 1.0) {
    return MixedMeasure(add(a.point(), b.point(), b_factor), add(a.density(), b.density(), b_factor));
}

// ---------------------------------------------------------------------------
// Norms and transforms
// ---------------------------------------------------------------------------

inline double total_variation(const PointMeasure& m) { return m.total_variation(); }
inline double total_variation(const GridDensity& f) { return f.l1_norm(); }
inline double total_variation(const MixedMeasure& m) {
    return m.point().total_variation() + (m.density() ? m.density()->l1_norm() : 0.0);
}

inline cplx fourier_at(const PointMeasure& m, std::span<const double> y) { return m.fourier_at(y); }

inline cplx fourier_at(const MixedMeasure& m, std::span<const double> y) {
    cplx v = m.point().fourier_at(y);
    if (m.density()) v += m.density()->fourier_at(y[0]);
    return v;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

inline PointMeasure convolve(const PointMeasure& a, const PointMeasure& b, MassLedger* ledger = nullptr) {
    if (!same_basis(a.basis(), b.basis())) throw ValidationError("convolve: bases differ");
    PointMeasure out(a.basis());
    const std::size_t d = a.basis()->size();
    const std::size_t count = a.size() * b.size();
    if (count == 0) return out;
    // Sums and products go to flat arrays, are sorted by key and merged.
    std::vector<int> keys(count * d);
    std::vector<cplx> vals(count);
    std::size_t i = 0;
    for (const auto& [ka, ca] : a.atoms())
        for (const auto& [kb, cb] : b.atoms()) {
            for (std::size_t n = 0; n < d; ++n) keys[i * d + n] = ka[n] + kb[n];
            vals[i++] = ca * cb;
        }
    std::vector<std::size_t> order(count);
    for (std::size_t j = 0; j < count; ++j) order[j] = j;
    auto row_less = [&](std::size_t x, std::size_t y) {
        return std::lexicographical_compare(keys.begin() + static_cast<long long>(x * d),
                                            keys.begin() + static_cast<long long>((x + 1) * d),
                                            keys.begin() + static_cast<long long>(y * d),
                                            keys.begin() + static_cast<long long>((y + 1) * d));
    };
    std::sort(order.begin(), order.end(), row_less);
    for (std::size_t j = 0; j < count;) {
        std::size_t e = j + 1;
        cplx sum = vals[order[j]];
        while (e < count && !row_less(order[j], order[e])) sum += vals[order[e++]];
        const auto first = keys.begin() + static_cast<long long>(order[j] * d);
        out.append_sorted(LatticeIndex(first, first + static_cast<long long>(d)), sum);
        j = e;
    }
    if (ledger) ledger->pruned += out.prune(ledger->prune_relative);
    return out;
}

/// f(x - rho) on f's own grid. Whole-sample shifts move samples; fractional
/// shifts apply the phase ramp exp(-2 pi i rho xi) on a zero-padded grid.
/// Mass pushed past the grid ends is dropped and booked as cropped.
inline GridDensity shift(const GridDensity& f, double rho, MassLedger* ledger = nullptr) {
    const std::size_t m = f.size();
    const double steps = rho / f.dx();
    const double whole = std::round(steps);
    std::vector<cplx> out(m, cplx{});
    double lost = 0.0;
    if (std::abs(steps - whole) <= 1e-9) {
        const long long s = static_cast<long long>(whole);
        for (std::size_t j = 0; j < m; ++j) {
            const long long t = static_cast<long long>(j) + s;
            if (t >= 0 && t < static_cast<long long>(m))
                out[static_cast<std::size_t>(t)] = f.samples()[j];
            else
                lost += std::abs(f.samples()[j]);
        }
        if (ledger) ledger->cropped += lost * f.dx();
        return f.with_samples(std::move(out));
    }
    // Pad on both sides so shifts up to the grid length do not wrap.
    const std::size_t pad = 2 * m;
    const std::size_t p = m + 2 * pad;
    std::vector<cplx> buf(p, cplx{});
    std::copy(f.samples().begin(), f.samples().end(), buf.begin() + static_cast<long long>(pad));
    auto spec = fft(buf, FftDirection::forward);
    const double dxi = 1.0 / (static_cast<double>(p) * f.dx());
    for (std::size_t i = 0; i < p; ++i) {
        const long long sm = (i <= p / 2) ? static_cast<long long>(i) : static_cast<long long>(i) - static_cast<long long>(p);
        spec[i] *= unit_phase(rho * static_cast<double>(sm) * dxi);
    }
    auto back = fft(spec, FftDirection::backward);
    for (std::size_t i = 0; i < p; ++i) {
        const cplx v = back[i] / static_cast<double>(p);
        if (i >= pad && i < pad + m)
            out[i - pad] = v;
        else
            lost += std::abs(v);
    }
    if (ledger) ledger->cropped += lost * f.dx();
    return f.with_samples(std::move(out));
}

/// Linear (not circular) convolution of two densities on the same grid; the
/// grid must contain the origin as a node so the result lands back on it.
inline GridDensity convolve(const GridDensity& a, const GridDensity& b, MassLedger* ledger = nullptr) {
    if (!a.same_grid(b)) throw ValidationError("convolve: density grids differ");
    const auto origin = a.origin_index();
    if (!origin) throw ValidationError("convolve: density grid must contain the origin as a node");
    const std::size_t m = a.size();
    std::size_t p = 1;
    while (p < 2 * m - 1) p <<= 1;
    std::vector<cplx> fa(p, cplx{}), fb(p, cplx{});
    std::copy(a.samples().begin(), a.samples().end(), fa.begin());
    std::copy(b.samples().begin(), b.samples().end(), fb.begin());
    FftPlan fwd({static_cast<int>(p)}, FftDirection::forward);
    FftPlan bwd({static_cast<int>(p)}, FftDirection::backward);
    std::vector<cplx> sa(p), sb(p);
    fwd.execute(fa, sa);
    fwd.execute(fb, sb);
    for (std::size_t i = 0; i < p; ++i) sa[i] *= sb[i];
    std::vector<cplx> full(p);
    bwd.execute(sa, full);
    const double scale = a.dx() / static_cast<double>(p);
    std::vector<cplx> out(m);
    double lost = 0.0;
    for (std::size_t n = 0; n < 2 * m - 1; ++n) {
        const cplx v = full[n] * scale;
        if (n >= *origin && n < *origin + m)
            out[n - *origin] = v;
        else
            lost += std::abs(v);
    }
    if (ledger) ledger->cropped += lost * a.dx();
    return a.with_samples(std::move(out));
}

inline GridDensity convolve(const PointMeasure& atoms, const GridDensity& f, MassLedger* ledger = nullptr) {
    if (atoms.basis()->dim() != 1) throw ValidationError("convolve: atom-density convolution needs dimension 1");
    std::vector<cplx> acc(f.size(), cplx{});
    for (const auto& [k, c] : atoms.atoms()) {
        const double rho = atoms.basis()->location(k)[0];
        MassLedger local;
        const auto shifted = shift(f, rho, &local);
        if (ledger) ledger->cropped += std::abs(c) * local.cropped;
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += c * shifted.samples()[j];
    }
    return f.with_samples(std::move(acc));
}

inline MixedMeasure convolve(const MixedMeasure& a, const MixedMeasure& b, MassLedger* ledger = nullptr) {
    if (!same_basis(a.basis(), b.basis())) throw ValidationError("convolve: bases differ");
    PointMeasure point = convolve(a.point(), b.point(), ledger);
    std::optional<GridDensity> dens;
    auto accumulate = [&](GridDensity g) {
        dens = dens ? add(*dens, g) : std::move(g);
    };
    if (a.density() && b.density()) accumulate(convolve(*a.density(), *b.density(), ledger));
    if (b.density() && !a.point().empty()) accumulate(convolve(a.point(), *b.density(), ledger));
    if (a.density() && !b.point().empty()) accumulate(convolve(b.point(), *a.density(), ledger));
    if (!dens && (a.density() || b.density())) {
        const auto& grid = a.density() ? *a.density() : *b.density();
        dens = grid.with_samples(std::vector<cplx>(grid.size(), cplx{}));
    }
    return MixedMeasure(std::move(point), std::move(dens));
}

/// m^{*p}; p = 0 gives the unit mass at the origin.
inline MixedMeasure convolution_power(const MixedMeasure& m, int p, MassLedger* ledger = nullptr) {
    if (p < 0) throw ValidationError("convolution_power: negative exponent");
    MixedMeasure result(PointMeasure::unit(m.basis()));
    if (p == 0) return result;
    // Square-and-multiply keeps the number of density convolutions logarithmic.
    MixedMeasure base = m;
    bool first = true;
    while (p > 0) {
        if (p & 1) {
            result = first ? base : convolve(result, base, ledger);
            first = false;
        }
        p >>= 1;
        if (p > 0) base = convolve(base, base, ledger);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reflection-conjugation, truncation, residual split
// ---------------------------------------------------------------------------

/// m(x) -> conj(m(-x)); the transform becomes conj(m^(y)).
inline PointMeasure conjugate_reflect(const PointMeasure& m) {
    PointMeasure out(m.basis());
    for (const auto& [k, c] : m.atoms()) {
        LatticeIndex neg(k.size());
        for (std::size_t n = 0; n < k.size(); ++n) neg[n] = -k[n];
        out.add(neg, std::conj(c));
    }
    return out;
}

inline GridDensity conjugate_reflect(const GridDensity& f) {
    const std::size_t m = f.size();
    std::vector<cplx> s(m);
    for (std::size_t j = 0; j < m; ++j) s[j] = std::conj(f.samples()[m - 1 - j]);
    // Reflect the node set about 0; exact for symmetric grids.
    const double x0 = f.is_symmetric() ? f.x0() : -f.x(m - 1);
    return GridDensity(x0, f.dx(), std::move(s));
}

inline MixedMeasure conjugate_reflect(const MixedMeasure& m) {
    std::optional<GridDensity> d;
    if (m.density()) d = conjugate_reflect(*m.density());
    return MixedMeasure(conjugate_reflect(m.point()), std::move(d));
}

struct Truncation {
    PointMeasure kept;
    double tail_norm;
};

/// Keeps the largest atoms (descending modulus) until the dropped mass falls
/// below budget. With max_moving set, at most that many atoms away from the
/// origin are kept; the origin atom never counts against the cap.
inline Truncation truncate_atoms(const PointMeasure& m, double budget,
                                 std::optional<std::size_t> max_moving = std::nullopt) {
    if (!(budget > 0.0)) throw ValidationError("truncate_atoms: budget must be positive");
    std::vector<std::pair<LatticeIndex, cplx>> order(m.atoms().begin(), m.atoms().end());
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
    // Suffix sums of the moduli, accumulated from the smallest upwards.
    std::vector<double> rest(order.size() + 1, 0.0);
    for (std::size_t i = order.size(); i-- > 0;) rest[i] = rest[i + 1] + std::abs(order[i].second);

    const auto zero = m.basis()->zero_index();
    PointMeasure kept(m.basis());
    std::vector<std::size_t> dropped;
    std::size_t moving = 0;
    std::size_t i = 0;
    for (; i < order.size() && rest[i] >= budget; ++i) {
        const bool at_origin = order[i].first == zero;
        if (!at_origin && max_moving && moving >= *max_moving) {
            dropped.push_back(i);
            continue;
        }
        kept.add(order[i].first, order[i].second);
        if (!at_origin) ++moving;
    }
    for (; i < order.size(); ++i) dropped.push_back(i);
    double tail = 0.0;
    for (auto it = dropped.rbegin(); it != dropped.rend(); ++it) tail += std::abs(order[*it].second);
    return {std::move(kept), tail};
}

struct ResidualPair {
    MixedMeasure real_part;  // transform Re(mu^ - v^ - s^)
    MixedMeasure imag_part;  // transform Im(mu^ - v^ - s^)
};

/// Splits r = mu - v dx - s into its conjugate-symmetric halves.
inline ResidualPair residual_split(const MixedMeasure& mu, const std::optional<GridDensity>& v,
                                   const PointMeasure& s) {
    std::optional<GridDensity> dens = mu.density();
    if (v) {
        if (!dens) throw ValidationError("residual_split: approximant density given but mu has none");
        if (!dens->same_grid(*v)) throw ValidationError("residual_split: approximant is not on mu's grid");
        dens = add(*dens, *v, -1.0);
    }
    MixedMeasure r(add(mu.point(), s, -1.0), std::move(dens));
    MixedMeasure rr = conjugate_reflect(r);
    if (r.density() && !r.density()->same_grid(*rr.density()))
        throw ValidationError("residual_split: density grid is not symmetric about the origin");
    MixedMeasure re = scaled(add(r, rr), 0.5);
    MixedMeasure im = scaled(add(r, rr, -1.0), cplx(0.0, -0.5));
    return {std::move(re), std::move(im)};
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_MEASURES_HPP
