// analytic.hpp
//
// Real-analytic functions of one complex variable, continued to two complex
// variables (zeta1, zeta2) so that real points (xi, eta) evaluate h(xi + i eta);
// compact plane sets with a distance oracle; and the smooth cut-off extension
// H = psi(dist4 / eps) * h, which equals h within 7 eps of K (distance taken
// in C^2 with K sitting at real points) and vanishes beyond 9 eps.

#ifndef WIENERLEVY_ANALYTIC_HPP
#define WIENERLEVY_ANALYTIC_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wienerlevy/errors.hpp"
#include "wienerlevy/fft.hpp"

namespace wienerlevy {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

namespace geometry {

inline double point_segment_distance(cplx p, cplx a, cplx b) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    const double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

inline double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

inline bool segments_intersect(cplx a, cplx b, cplx c, cplx d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    auto on = [](cplx p, cplx q, cplx r) { return point_segment_distance(r, p, q) == 0.0; };
    return on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b);
}

inline double segment_segment_distance(cplx a, cplx b, cplx c, cplx d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

}  // namespace geometry

// ---------------------------------------------------------------------------
// CompactSet
// ---------------------------------------------------------------------------

class CompactSet {
public:
    struct Disc {
        cplx center;
        double radius;
    };
    struct Annulus {
        cplx center;
        double r_in;
        double r_out;
    };
    struct Polygon {
        std::vector<cplx> vertices;
    };
    struct Union {
        std::vector<CompactSet> parts;
    };

    static CompactSet disc(cplx center, double radius) {
        if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("disc: radius must be >= 0");
        return CompactSet(Disc{center, radius});
    }
    static CompactSet annulus(cplx center, double r_in, double r_out) {
        if (!(r_in >= 0.0) || !(r_out >= r_in) || !std::isfinite(r_out))
            throw ValidationError("annulus: need 0 <= r_in <= r_out");
        return CompactSet(Annulus{center, r_in, r_out});
    }
    static CompactSet polygon(std::vector<cplx> vertices) {
        if (vertices.size() < 3) throw ValidationError("polygon: need at least 3 vertices");
        return CompactSet(Polygon{std::move(vertices)});
    }
    static CompactSet union_of(std::vector<CompactSet> parts) {
        if (parts.empty()) throw ValidationError("union: no components");
        return CompactSet(Union{std::move(parts)});
    }
    static CompactSet union_of_discs(const std::vector<std::pair<cplx, double>>& discs) {
        std::vector<CompactSet> parts;
        for (const auto& [c, r] : discs) parts.push_back(disc(c, r));
        return union_of(std::move(parts));
    }

    const auto& shape() const noexcept { return shape_; }

    /// Euclidean distance from a plane point to the set (0 inside).
    double dist2(cplx p) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc>) {
                    return std::max(0.0, std::abs(p - s.center) - s.radius);
                } else if constexpr (std::is_same_v<T, Annulus>) {
                    const double r = std::abs(p - s.center);
                    return std::max({0.0, s.r_in - r, r - s.r_out});
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    if (polygon_contains(s, p)) return 0.0;
                    return polygon_edge_distance(s, p);
                } else {
                    double d = infinity;
                    for (const auto& part : s.parts) d = std::min(d, part.dist2(p));
                    return d;
                }
            },
            shape_);
    }

    bool contains(cplx p) const { return dist2(p) == 0.0; }

    /// Distance from p to the complement of the set (0 outside). For unions
    /// this is the largest component depth, a lower bound on the true value.
    double depth(cplx p) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc>) {
                    return std::max(0.0, s.radius - std::abs(p - s.center));
                } else if constexpr (std::is_same_v<T, Annulus>) {
                    const double r = std::abs(p - s.center);
                    if (r < s.r_in || r > s.r_out) return 0.0;
                    return std::min(r - s.r_in, s.r_out - r);
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    return polygon_contains(s, p) ? polygon_edge_distance(s, p) : 0.0;
                } else {
                    double d = 0.0;
                    for (const auto& part : s.parts) d = std::max(d, part.depth(p));
                    return d;
                }
            },
            shape_);
    }

    /// max over K of |p - c|.
    double farthest_distance(cplx c) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc>) {
                    return std::abs(s.center - c) + s.radius;
                } else if constexpr (std::is_same_v<T, Annulus>) {
                    return std::abs(s.center - c) + s.r_out;
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    double d = 0.0;
                    for (const auto& v : s.vertices) d = std::max(d, std::abs(v - c));
                    return d;
                } else {
                    double d = 0.0;
                    for (const auto& part : s.parts) d = std::max(d, part.farthest_distance(c));
                    return d;
                }
            },
            shape_);
    }

    /// Distance from the set to the segment [a, b].
    double distance_to_segment(cplx a, cplx b) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc>) {
                    return std::max(0.0, geometry::point_segment_distance(s.center, a, b) - s.radius);
                } else if constexpr (std::is_same_v<T, Annulus>) {
                    const double lo = geometry::point_segment_distance(s.center, a, b);
                    const double hi = std::max(std::abs(a - s.center), std::abs(b - s.center));
                    if (hi < s.r_in) return s.r_in - hi;
                    if (lo > s.r_out) return lo - s.r_out;
                    return 0.0;
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    if (polygon_contains(s, a) || polygon_contains(s, b)) return 0.0;
                    double d = infinity;
                    const auto& v = s.vertices;
                    for (std::size_t i = 0; i < v.size(); ++i)
                        d = std::min(d, geometry::segment_segment_distance(a, b, v[i], v[(i + 1) % v.size()]));
                    return d;
                } else {
                    double d = infinity;
                    for (const auto& part : s.parts) d = std::min(d, part.distance_to_segment(a, b));
                    return d;
                }
            },
            shape_);
    }

    /// Distance to the ray {origin + t * direction : t >= 0}.
    double distance_to_ray(cplx origin, cplx direction) const {
        const double len = farthest_distance(origin) + 1.0;
        return distance_to_segment(origin, origin + (2.0 * len / std::abs(direction)) * direction);
    }

    /// Boundary points such that every boundary point lies within spacing/2
    /// (arc length) of one of them.
    std::vector<cplx> boundary_samples(double spacing) const {
        std::vector<cplx> out;
        auto circle = [&](cplx c, double r) {
            if (r == 0.0) {
                out.push_back(c);
                return;
            }
            const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * r / spacing)) + 1;
            for (std::size_t i = 0; i < n; ++i)
                out.push_back(c + std::polar(r, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
        };
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc>) {
                    circle(s.center, s.radius);
                } else if constexpr (std::is_same_v<T, Annulus>) {
                    circle(s.center, s.r_out);
                    if (s.r_in > 0.0) circle(s.center, s.r_in);
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    const auto& v = s.vertices;
                    for (std::size_t i = 0; i < v.size(); ++i) {
                        const cplx a = v[i], b = v[(i + 1) % v.size()];
                        const auto n = static_cast<std::size_t>(std::ceil(std::abs(b - a) / spacing)) + 1;
                        for (std::size_t j = 0; j < n; ++j) out.push_back(a + (b - a) * (static_cast<double>(j) / static_cast<double>(n)));
                    }
                } else {
                    for (const auto& part : s.parts) {
                        auto more = part.boundary_samples(spacing);
                        out.insert(out.end(), more.begin(), more.end());
                    }
                }
            },
            shape_);
        return out;
    }

    /// Lower bound on dist(A, B) from boundary sampling; accurate to spacing.
    static double separation(const CompactSet& a, const CompactSet& b, double spacing) {
        double d = infinity;
        for (const auto& p : a.boundary_samples(spacing)) d = std::min(d, b.dist2(p));
        for (const auto& q : b.boundary_samples(spacing)) d = std::min(d, a.dist2(q));
        return std::max(0.0, d - 0.5 * spacing);
    }

    /// Rough size used to pick sampling resolutions.
    double extent() const { return 2.0 * farthest_distance(representative()); }

    cplx representative() const {
        return std::visit(
            [&](const auto& s) -> cplx {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Disc> || std::is_same_v<T, Annulus>) {
                    return s.center;
                } else if constexpr (std::is_same_v<T, Polygon>) {
                    return s.vertices.front();
                } else {
                    return s.parts.front().representative();
                }
            },
            shape_);
    }

    const std::vector<CompactSet>* components() const {
        if (const auto* u = std::get_if<Union>(&shape_)) return &u->parts;
        return nullptr;
    }

private:
    using Shape = std::variant<Disc, Annulus, Polygon, Union>;
    explicit CompactSet(Shape s) : shape_(std::move(s)) {}

    static bool polygon_contains(const Polygon& poly, cplx p) {
        const auto& v = poly.vertices;
        bool inside = false;
        for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
            if (geometry::point_segment_distance(p, v[j], v[i]) == 0.0) return true;
            const bool crosses = (v[i].imag() > p.imag()) != (v[j].imag() > p.imag());
            if (crosses) {
                const double x = v[j].real() + (p.imag() - v[j].imag()) * (v[i].real() - v[j].real()) /
                                                   (v[i].imag() - v[j].imag());
                if (p.real() < x) inside = !inside;
            }
        }
        return inside;
    }

    static double polygon_edge_distance(const Polygon& poly, cplx p) {
        const auto& v = poly.vertices;
        double d = infinity;
        for (std::size_t i = 0; i < v.size(); ++i)
            d = std::min(d, geometry::point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
        return d;
    }

    Shape shape_;
};

/// Distance in C^2 = R^4 from (zeta1, zeta2) to K placed at real points.
inline double dist4(cplx zeta1, cplx zeta2, const CompactSet& k) {
    const double d = k.dist2(cplx(zeta1.real(), zeta2.real()));
    return std::sqrt(zeta1.imag() * zeta1.imag() + zeta2.imag() * zeta2.imag() + d * d);
}

// ---------------------------------------------------------------------------
// Smooth cut-off
// ---------------------------------------------------------------------------

/// C-infinity transition equal to 1 for t <= 0 and 0 for t >= 1.
inline double smooth_transition(double t) {
    auto g = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    const double a = g(1.0 - t);
    const double b = g(t);
    if (b == 0.0) return 1.0;
    if (a == 0.0) return 0.0;
    return a / (a + b);
}

/// 1 for t <= 7, 0 for t >= 9, strictly decreasing in between.
inline double smooth_step(double t) { return smooth_transition(0.5 * (t - 7.0)); }

// ---------------------------------------------------------------------------
// AnalyticFunction
// ---------------------------------------------------------------------------

class AnalyticFunction;
using AnalyticPtr = std::shared_ptr<const AnalyticFunction>;

class AnalyticFunction {
public:
    /// h(z) with z = zeta1 + i zeta2. Singular points and cut segments
    /// bound the continuation domain.
    struct Holomorphic {
        std::string name;
        std::function<cplx(cplx)> eval;
        std::vector<cplx> singular_points;
        std::vector<std::pair<cplx, cplx>> cuts;  // segments
        std::vector<std::pair<cplx, cplx>> rays;  // (origin, direction)
    };
    /// sum c[j][k] z^j zbar^k, continued with zbar -> zeta1 - i zeta2.
    struct ConjugatePolynomial {
        std::string name;
        std::vector<std::vector<cplx>> coeffs;
    };
    /// sum c[k][n] (xi - Re z0)^k (eta - Im z0)^n, convergent for
    /// |zeta1 - Re z0|^2 + |zeta2 - Im z0|^2 < radius^2.
    struct PowerSeries {
        cplx center;
        double radius;
        std::vector<std::vector<cplx>> coeffs;
    };
    struct Piece {
        CompactSet set;
        AnalyticPtr fn;
    };
    struct Piecewise {
        std::vector<Piece> pieces;
    };

    using Payload = std::variant<Holomorphic, ConjugatePolynomial, PowerSeries, Piecewise>;

    explicit AnalyticFunction(Payload p) : payload_(std::move(p)) {
        if (const auto* s = std::get_if<PowerSeries>(&payload_)) {
            if (!(s->radius > 0.0)) throw ValidationError("power series: radius must be positive");
        }
        if (const auto* pw = std::get_if<Piecewise>(&payload_)) {
            if (pw->pieces.empty()) throw ValidationError("piecewise function: no pieces");
            for (const auto& piece : pw->pieces)
                if (!piece.fn) throw ValidationError("piecewise function: null piece");
        }
    }

    const Payload& payload() const noexcept { return payload_; }

    std::string name() const {
        return std::visit(
            [](const auto& p) -> std::string {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Holomorphic> || std::is_same_v<T, ConjugatePolynomial>)
                    return p.name;
                else if constexpr (std::is_same_v<T, PowerSeries>)
                    return "power_series";
                else
                    return "piecewise";
            },
            payload_);
    }

    cplx continuation_eval(cplx zeta1, cplx zeta2) const {
        const cplx i(0.0, 1.0);
        return std::visit(
            [&](const auto& p) -> cplx {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Holomorphic>) {
                    const cplx z = zeta1 + i * zeta2;
                    for (const auto& s : p.singular_points)
                        if (z == s) throw DomainError(p.name + ": evaluated at a singular point");
                    for (const auto& [a, b] : p.cuts)
                        if (geometry::point_segment_distance(z, a, b) == 0.0)
                            throw DomainError(p.name + ": evaluated on a branch cut");
                    for (const auto& [o, d] : p.rays) {
                        const cplx rel = (z - o) / d;
                        if (rel.imag() == 0.0 && rel.real() >= 0.0)
                            throw DomainError(p.name + ": evaluated on a branch cut");
                    }
                    return p.eval(z);
                } else if constexpr (std::is_same_v<T, ConjugatePolynomial>) {
                    const cplx z = zeta1 + i * zeta2;
                    const cplx w = zeta1 - i * zeta2;
                    cplx acc{};
                    for (std::size_t j = p.coeffs.size(); j-- > 0;) {
                        cplx row{};
                        for (std::size_t k = p.coeffs[j].size(); k-- > 0;) row = row * w + p.coeffs[j][k];
                        acc = acc * z + row;
                    }
                    return acc;
                } else if constexpr (std::is_same_v<T, PowerSeries>) {
                    const cplx a = zeta1 - p.center.real();
                    const cplx b = zeta2 - p.center.imag();
                    if (std::norm(a) + std::norm(b) >= p.radius * p.radius)
                        throw DomainError("power series: point outside the convergence ball");
                    cplx acc{};
                    for (std::size_t k = p.coeffs.size(); k-- > 0;) {
                        cplx row{};
                        for (std::size_t n = p.coeffs[k].size(); n-- > 0;) row = row * b + p.coeffs[k][n];
                        acc = acc * a + row;
                    }
                    return acc;
                } else {
                    const Piece* best = nullptr;
                    double best_d = infinity;
                    for (const auto& piece : p.pieces) {
                        const double d = dist4(zeta1, zeta2, piece.set);
                        if (d < best_d) {
                            best_d = d;
                            best = &piece;
                        }
                    }
                    return best->fn->continuation_eval(zeta1, zeta2);
                }
            },
            payload_);
    }

    /// h on the plane.
    cplx operator()(cplx z) const { return continuation_eval(z.real(), z.imag()); }

    /// Lower bound on dist(K, boundary of the continuation domain), measured
    /// in the plane. Infinite for entire functions. For piecewise functions
    /// the separation of the pieces is folded in so that choose_epsilon keeps
    /// their 10 eps neighbourhoods disjoint.
    double domain_margin(const CompactSet& k) const {
        return std::visit(
            [&](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Holomorphic>) {
                    double d = infinity;
                    for (const auto& s : p.singular_points) d = std::min(d, k.dist2(s));
                    for (const auto& [a, b] : p.cuts) d = std::min(d, k.distance_to_segment(a, b));
                    for (const auto& [o, dir] : p.rays) d = std::min(d, k.distance_to_ray(o, dir));
                    return d;
                } else if constexpr (std::is_same_v<T, ConjugatePolynomial>) {
                    return infinity;
                } else if constexpr (std::is_same_v<T, PowerSeries>) {
                    return p.radius - k.farthest_distance(p.center);
                } else {
                    double d = infinity;
                    for (const auto& piece : p.pieces) d = std::min(d, piece.fn->domain_margin(piece.set));
                    const double gap = piece_gap(p);
                    return std::min(d, 13.0 * gap / 20.0);
                }
            },
            payload_);
    }

    /// Smallest separation between distinct pieces (infinite for one piece).
    static double piece_gap(const Piecewise& p) {
        double gap = infinity;
        for (std::size_t a = 0; a < p.pieces.size(); ++a)
            for (std::size_t b = a + 1; b < p.pieces.size(); ++b) {
                const double scale = std::max(p.pieces[a].set.extent(), p.pieces[b].set.extent());
                gap = std::min(gap, CompactSet::separation(p.pieces[a].set, p.pieces[b].set,
                                                           std::max(1e-6, 1e-5 * scale)));
            }
        return gap;
    }

private:
    Payload payload_;
};

// ---------------------------------------------------------------------------
// Built-ins
// ---------------------------------------------------------------------------

inline AnalyticFunction holomorphic(std::string name, std::function<cplx(cplx)> f, std::vector<cplx> singular = {},
                                    std::vector<std::pair<cplx, cplx>> rays = {}) {
    return AnalyticFunction(AnalyticFunction::Holomorphic{std::move(name), std::move(f), std::move(singular), {},
                                                          std::move(rays)});
}

/// sum_j coeffs[j] z^j.
inline AnalyticFunction polynomial(std::vector<cplx> coeffs, std::string name = "polynomial") {
    if (coeffs.empty()) coeffs.push_back(0.0);
    return holomorphic(std::move(name), [c = std::move(coeffs)](cplx z) {
        cplx acc{};
        for (std::size_t j = c.size(); j-- > 0;) acc = acc * z + c[j];
        return acc;
    });
}

inline AnalyticFunction conjugate_polynomial(std::vector<std::vector<cplx>> coeffs,
                                             std::string name = "conjugate_polynomial") {
    return AnalyticFunction(AnalyticFunction::ConjugatePolynomial{std::move(name), std::move(coeffs)});
}

inline AnalyticFunction power_series(cplx center, double radius, std::vector<std::vector<cplx>> coeffs) {
    return AnalyticFunction(AnalyticFunction::PowerSeries{center, radius, std::move(coeffs)});
}

inline AnalyticFunction piecewise(std::vector<std::pair<CompactSet, AnalyticFunction>> parts) {
    AnalyticFunction::Piecewise pw;
    for (auto& [set, fn] : parts)
        pw.pieces.push_back({std::move(set), std::make_shared<const AnalyticFunction>(std::move(fn))});
    return AnalyticFunction(std::move(pw));
}

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {"identity", "square", "cube",  "reciprocal", "exp", "log",
                                                   "conj",     "abs2",   "affine", "power",     "zero"};
    return names;
}

/// Registry of named functions. Parameters: affine takes (a_re, a_im, b_re,
/// b_im) for a z + b; power takes the integer exponent n >= 0.
inline AnalyticFunction builtin_function(const std::string& name, std::span<const double> params = {}) {
    auto need = [&](std::size_t n) {
        if (params.size() != n)
            throw ValidationError("function '" + name + "' takes " + std::to_string(n) + " parameter(s), got " +
                                  std::to_string(params.size()));
    };
    if (name == "identity") {
        need(0);
        return polynomial({0.0, 1.0}, name);
    }
    if (name == "square") {
        need(0);
        return polynomial({0.0, 0.0, 1.0}, name);
    }
    if (name == "cube") {
        need(0);
        return polynomial({0.0, 0.0, 0.0, 1.0}, name);
    }
    if (name == "zero") {
        need(0);
        return polynomial({0.0}, name);
    }
    if (name == "reciprocal") {
        need(0);
        return holomorphic(name, [](cplx z) { return 1.0 / z; }, {cplx{}});
    }
    if (name == "exp") {
        need(0);
        return holomorphic(name, [](cplx z) { return std::exp(z); });
    }
    if (name == "log") {
        need(0);
        // Principal branch, cut along (-inf, 0].
        return holomorphic(name, [](cplx z) { return std::log(z); }, {cplx{}}, {{cplx{}, cplx(-1.0, 0.0)}});
    }
    if (name == "conj") {
        need(0);
        return conjugate_polynomial({{0.0, 1.0}}, name);
    }
    if (name == "abs2") {
        need(0);
        return conjugate_polynomial({{0.0}, {0.0, 1.0}}, name);
    }
    if (name == "affine") {
        need(4);
        return polynomial({cplx(params[2], params[3]), cplx(params[0], params[1])}, name);
    }
    if (name == "power") {
        need(1);
        const double n = params[0];
        if (n < 0 || n != std::floor(n) || n > 64) throw ValidationError("power: exponent must be an integer in [0, 64]");
        std::vector<cplx> c(static_cast<std::size_t>(n) + 1, cplx{});
        c.back() = 1.0;
        return polynomial(std::move(c), name);
    }
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown function '" + name + "'; registry entries: " + known);
}

// ---------------------------------------------------------------------------
// Margin and extension
// ---------------------------------------------------------------------------

/// 0.9 * margin / 13: continuation points used by H then stay within
/// sqrt(2) * 9 eps < 13 eps of K.
inline double choose_epsilon(double domain_margin) {
    if (!(domain_margin > 0.0)) throw ValidationError("choose_epsilon: domain margin must be positive");
    if (!std::isfinite(domain_margin))
        throw ValidationError("choose_epsilon: domain margin is unbounded (entire function); declare one");
    return 0.9 * domain_margin / 13.0;
}

inline double choose_epsilon(const CompactSet&, double domain_margin) { return choose_epsilon(domain_margin); }

class SmoothedExtension {
public:
    /// declared_margin overrides the margin computed from h and K (needed
    /// for entire functions, optional otherwise).
    SmoothedExtension(AnalyticFunction h, CompactSet k, double eps, std::optional<double> declared_margin = std::nullopt)
        : h_(std::move(h)), k_(std::move(k)), eps_(eps) {
        if (!(eps_ > 0.0) || !std::isfinite(eps_)) throw ValidationError("extension: eps must be positive");
        margin_ = declared_margin ? *declared_margin : h_.domain_margin(k_);
        if (declared_margin && !(*declared_margin > 0.0))
            throw ValidationError("extension: declared domain margin must be positive");
        if (declared_margin) margin_ = std::min(margin_, h_.domain_margin(k_));
        if (!(margin_ > 0.0))
            throw ValidationError("extension: K touches the boundary of h's continuation domain");
        if (std::isfinite(margin_) && !(eps_ < margin_ / 13.0))
            throw ValidationError("extension: eps = " + std::to_string(eps_) + " violates eps < margin/13 = " +
                                  std::to_string(margin_ / 13.0));
        if (const auto* pw = std::get_if<AnalyticFunction::Piecewise>(&h_.payload())) {
            const double gap = AnalyticFunction::piece_gap(*pw);
            if (!(gap > 20.0 * eps_))
                throw ValidationError("extension: piece neighbourhoods of width 10 eps overlap (gap " +
                                      std::to_string(gap) + ", eps " + std::to_string(eps_) + ")");
        }
    }

    const AnalyticFunction& h() const noexcept { return h_; }
    const CompactSet& k() const noexcept { return k_; }
    double eps() const noexcept { return eps_; }
    double inner() const noexcept { return 7.0 * eps_; }
    double outer() const noexcept { return 9.0 * eps_; }
    double margin() const noexcept { return margin_; }

    cplx operator()(cplx zeta1, cplx zeta2) const {
        const double w = smooth_step(dist4(zeta1, zeta2, k_) / eps_);
        if (w == 0.0) return cplx{};
        return w * h_.continuation_eval(zeta1, zeta2);
    }

private:
    AnalyticFunction h_;
    CompactSet k_;
    double eps_;
    double margin_;
};

inline cplx extension_eval(const SmoothedExtension& ext, cplx zeta1, cplx zeta2) { return ext(zeta1, zeta2); }
inline cplx continuation_eval(const AnalyticFunction& h, cplx zeta1, cplx zeta2) {
    return h.continuation_eval(zeta1, zeta2);
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_ANALYTIC_HPP
