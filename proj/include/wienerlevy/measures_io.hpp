// measures_io.hpp
//
// JSON-lines encoding of a MixedMeasure: one record per atom
//   {"k":[...], "freq":[...], "re":..., "im":...}
// followed by at most one density record
//   {"x0":..., "dx":..., "samples_re":[...], "samples_im":[...]}.
// The basis is not part of the stream; readers supply it and every atom's
// "freq" is checked against sum_n k_n gamma_n.

#ifndef WIENERLEVY_MEASURES_IO_HPP
#define WIENERLEVY_MEASURES_IO_HPP

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wienerlevy/measures.hpp"

namespace wienerlevy {

inline void write_jsonl(const MixedMeasure& m, std::ostream& os) {
    for (const auto& [k, c] : m.point().atoms()) {
        nlohmann::json rec;
        rec["k"] = k;
        rec["freq"] = m.basis()->location(k);
        rec["re"] = c.real();
        rec["im"] = c.imag();
        os << rec.dump() << '\n';
    }
    if (const auto& d = m.density()) {
        nlohmann::json rec;
        rec["x0"] = d->x0();
        rec["dx"] = d->dx();
        std::vector<double> re, im;
        re.reserve(d->size());
        im.reserve(d->size());
        for (const auto& s : d->samples()) {
            re.push_back(s.real());
            im.push_back(s.imag());
        }
        rec["samples_re"] = std::move(re);
        rec["samples_im"] = std::move(im);
        os << rec.dump() << '\n';
    }
}

inline std::string to_jsonl(const MixedMeasure& m) {
    std::ostringstream os;
    write_jsonl(m, os);
    return os.str();
}

inline MixedMeasure read_jsonl(std::istream& is, const BasisPtr& basis) {
    PointMeasure point(basis);
    std::optional<GridDensity> density;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ValidationError("measure stream line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(std::string("malformed JSON (") + e.what() + ")");
        }
        if (!rec.is_object()) fail("record is not an object");
        if (density) fail("records after the density record");
        try {
            if (rec.contains("k")) {
                for (const auto& key : rec.items())
                    if (key.key() != "k" && key.key() != "freq" && key.key() != "re" && key.key() != "im")
                        fail("unknown atom field '" + key.key() + "'");
                const auto k = rec.at("k").get<LatticeIndex>();
                basis->check_index(k);
                if (rec.contains("freq")) {
                    const auto freq = rec.at("freq").get<std::vector<double>>();
                    const auto want = basis->location(k);
                    if (freq.size() != want.size()) fail("freq has wrong dimension");
                    for (std::size_t c = 0; c < freq.size(); ++c)
                        if (std::abs(freq[c] - want[c]) > 1e-9 * std::max(1.0, std::abs(want[c])))
                            fail("freq does not match the lattice index over the supplied basis");
                }
                const cplx coef(rec.at("re").get<double>(), rec.at("im").get<double>());
                if (point.atoms().count(k)) fail("duplicate atom index");
                point.add(k, coef);
            } else if (rec.contains("x0")) {
                for (const auto& key : rec.items())
                    if (key.key() != "x0" && key.key() != "dx" && key.key() != "samples_re" &&
                        key.key() != "samples_im")
                        fail("unknown density field '" + key.key() + "'");
                const auto re = rec.at("samples_re").get<std::vector<double>>();
                const auto im = rec.at("samples_im").get<std::vector<double>>();
                if (re.size() != im.size()) fail("samples_re and samples_im differ in length");
                std::vector<cplx> s(re.size());
                for (std::size_t j = 0; j < s.size(); ++j) s[j] = {re[j], im[j]};
                density.emplace(rec.at("x0").get<double>(), rec.at("dx").get<double>(), std::move(s));
            } else {
                fail("record is neither an atom nor a density");
            }
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("bad field: ") + e.what());
        }
    }
    return MixedMeasure(std::move(point), std::move(density));
}

inline MixedMeasure from_jsonl(const std::string& text, const BasisPtr& basis) {
    std::istringstream is(text);
    return read_jsonl(is, basis);
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_MEASURES_IO_HPP
