#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqed/lattice.hpp"
#include "cqed/rational.hpp"

namespace cqed {

struct ParityError : std::domain_error {
    ParityError() : std::domain_error("bracket operand without definite Grassmann parity") {}
};

// Canonical field species on the lattice, plus Lagrange-multiplier symbols.
// Component meaning: Lorentz index a = 0..3 for A/PiEm, spinor index l = 0..3
// for the fermionic species.
enum class Species : uint8_t {
    A = 0,        // A_a(x), even
    PiEm,         // pi^a(x), even
    Psi,          // psi_l(x), odd
    PiPsi,        // pi_l(x), odd (conjugate of psi)
    PsiBar,       // psibar_l(x), odd
    PiPsiBar,     // pibar_l(x), odd (conjugate of psibar)
    MultU0,       // u^0(x), even multiplier
    MultU1,       // u^1_l(x), odd multiplier
    MultU2,       // u^2_l(x), odd multiplier
    MultGauge,    // u(x), even multiplier of the gauge condition
};

constexpr int kSpeciesCount = 10;

inline bool species_odd(Species s) {
    switch (s) {
        case Species::Psi:
        case Species::PiPsi:
        case Species::PsiBar:
        case Species::PiPsiBar:
        case Species::MultU1:
        case Species::MultU2: return true;
        default: return false;
    }
}

inline bool species_multiplier(Species s) {
    return s == Species::MultU0 || s == Species::MultU1 || s == Species::MultU2 ||
           s == Species::MultGauge;
}

// Symbol id packing: site * 64 + species * 4 + component. Ordering by id is
// the canonical monomial order.
struct Symbol {
    uint32_t id;

    Symbol() : id(0) {}
    Symbol(Species sp, int component, int site)
        : id(uint32_t(site) * 64u + uint32_t(sp) * 4u + uint32_t(component)) {}

    Species species() const { return Species((id / 4u) % 16u); }
    int component() const { return int(id % 4u); }
    int site() const { return int(id / 64u); }
    bool odd() const { return species_odd(species()); }

    bool operator<(const Symbol& o) const { return id < o.id; }
    bool operator==(const Symbol& o) const { return id == o.id; }
};

inline std::string species_name(Species s) {
    switch (s) {
        case Species::A: return "A";
        case Species::PiEm: return "piEM";
        case Species::Psi: return "psi";
        case Species::PiPsi: return "pi";
        case Species::PsiBar: return "psibar";
        case Species::PiPsiBar: return "pibar";
        case Species::MultU0: return "u0";
        case Species::MultU1: return "u1";
        case Species::MultU2: return "u2";
        case Species::MultGauge: return "u";
    }
    return "?";
}

using Mono = std::vector<uint32_t>; // sorted symbol ids; odd ids never repeat

enum class Parity { Even, Odd, Mixed };

// Multivariate polynomial over even/odd lattice symbols. Monomials are kept
// in canonical ascending-id order with reordering signs absorbed into the
// coefficient; a repeated odd symbol kills the monomial.
template <class C>
class Poly {
  public:
    using Coef = C;
    using Terms = std::map<Mono, C>;

    Poly() = default;
    explicit Poly(C constant) {
        if (!constant.is_zero()) terms_[Mono{}] = constant;
    }
    static Poly symbol(Symbol s, C coef = C(1)) {
        Poly p;
        p.add_raw({s.id}, coef);
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    // Adds coef * (product of syms in the given order), canonicalizing.
    void add_raw(std::vector<uint32_t> syms, C coef) {
        if (coef.is_zero()) return;
        // insertion sort, counting odd-odd transpositions
        int odd_swaps = 0;
        for (std::size_t i = 1; i < syms.size(); ++i) {
            uint32_t v = syms[i];
            bool v_odd = species_odd(Species((v / 4u) % 16u));
            std::size_t j = i;
            while (j > 0 && syms[j - 1] > v) {
                bool o = species_odd(Species((syms[j - 1] / 4u) % 16u));
                if (o && v_odd) odd_swaps ^= 1;
                syms[j] = syms[j - 1];
                --j;
            }
            syms[j] = v;
        }
        // nilpotency
        for (std::size_t i = 1; i < syms.size(); ++i) {
            if (syms[i] == syms[i - 1] && species_odd(Species((syms[i] / 4u) % 16u))) return;
        }
        if (odd_swaps) coef = -coef;
        auto it = terms_.find(syms);
        if (it == terms_.end()) {
            terms_.emplace(std::move(syms), coef);
        } else {
            it->second += coef;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    Poly operator-() const {
        Poly r;
        for (auto& [m, c] : terms_) r.terms_[m] = -c;
        return r;
    }
    Poly& operator+=(const Poly& o) {
        for (auto& [m, c] : o.terms_) {
            auto it = terms_.find(m);
            if (it == terms_.end()) {
                terms_.emplace(m, c);
            } else {
                it->second += c;
                if (it->second.is_zero()) terms_.erase(it);
            }
        }
        return *this;
    }
    Poly& operator-=(const Poly& o) { return *this += -o; }
    Poly operator+(const Poly& o) const {
        Poly r = *this;
        r += o;
        return r;
    }
    Poly operator-(const Poly& o) const {
        Poly r = *this;
        r -= o;
        return r;
    }

    Poly operator*(const Poly& o) const {
        Poly r;
        for (auto& [ma, ca] : terms_) {
            for (auto& [mb, cb] : o.terms_) {
                Mono m = ma;
                m.insert(m.end(), mb.begin(), mb.end());
                r.add_raw(std::move(m), ca * cb);
            }
        }
        return r;
    }
    Poly& operator*=(const Poly& o) { return *this = *this * o; }

    Poly scaled(C s) const {
        Poly r;
        if (s.is_zero()) return r;
        for (auto& [m, c] : terms_) {
            C v = c * s;
            if (!v.is_zero()) r.terms_[m] = v;
        }
        return r;
    }

    Parity parity() const {
        if (terms_.empty()) return Parity::Even; // zero has any parity; treat as even
        bool saw_even = false, saw_odd = false;
        for (auto& [m, c] : terms_) {
            int odds = 0;
            for (auto id : m)
                if (species_odd(Species((id / 4u) % 16u))) ++odds;
            ((odds % 2) ? saw_odd : saw_even) = true;
        }
        if (saw_even && saw_odd) return Parity::Mixed;
        return saw_odd ? Parity::Odd : Parity::Even;
    }

    bool depends_on(Symbol s) const {
        for (auto& [m, c] : terms_)
            if (std::binary_search(m.begin(), m.end(), s.id)) return true;
        return false;
    }

    std::set<uint32_t> support() const {
        std::set<uint32_t> out;
        for (auto& [m, c] : terms_) out.insert(m.begin(), m.end());
        return out;
    }

    C coefficient(const Mono& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? C(0) : it->second;
    }
    C constant_part() const { return coefficient(Mono{}); }

    // Left derivative: d/ds acting from the left. For an even symbol this is
    // the usual power rule (one occurrence removed, multiplicity factored in).
    Poly dleft(Symbol s) const {
        Poly r;
        bool s_odd = s.odd();
        for (auto& [m, c] : terms_) {
            if (s_odd) {
                auto it = std::find(m.begin(), m.end(), s.id);
                if (it == m.end()) continue;
                int before = 0;
                for (auto j = m.begin(); j != it; ++j)
                    if (species_odd(Species((*j / 4u) % 16u))) ++before;
                Mono rest(m.begin(), it);
                rest.insert(rest.end(), it + 1, m.end());
                C v = (before % 2) ? -c : c;
                r.add_raw(std::move(rest), v);
            } else {
                auto lo = std::lower_bound(m.begin(), m.end(), s.id);
                if (lo == m.end() || *lo != s.id) continue;
                auto hi = std::upper_bound(m.begin(), m.end(), s.id);
                long long mult = hi - lo;
                Mono rest(m.begin(), lo);
                rest.insert(rest.end(), lo + 1, m.end());
                r.add_raw(std::move(rest), c * C(mult));
            }
        }
        return r;
    }

    // Right derivative.
    Poly dright(Symbol s) const {
        Poly r;
        bool s_odd = s.odd();
        for (auto& [m, c] : terms_) {
            if (s_odd) {
                auto it = std::find(m.begin(), m.end(), s.id);
                if (it == m.end()) continue;
                int after = 0;
                for (auto j = it + 1; j != m.end(); ++j)
                    if (species_odd(Species((*j / 4u) % 16u))) ++after;
                Mono rest(m.begin(), it);
                rest.insert(rest.end(), it + 1, m.end());
                C v = (after % 2) ? -c : c;
                r.add_raw(std::move(rest), v);
            } else {
                return dleft(s); // even symbols: left and right agree
            }
        }
        return r;
    }

    // Simultaneous substitution symbol -> polynomial; every occurrence is
    // replaced in one pass, so replacements may mention the symbol itself.
    Poly substituted(Symbol s, const Poly& repl) const {
        Poly out;
        for (auto& [m, c] : terms_) {
            if (!std::binary_search(m.begin(), m.end(), s.id)) {
                out.add_raw(m, c);
                continue;
            }
            Poly acc{C(1)};
            acc = acc.scaled(c);
            for (auto id : m) {
                if (id == s.id) {
                    acc = acc * repl;
                } else {
                    Symbol q;
                    q.id = id;
                    acc = acc * Poly::symbol(q);
                }
            }
            out += acc;
        }
        return out;
    }

    double max_abs() const {
        double m = 0;
        for (auto& [mono, c] : terms_) m = std::max(m, coef_abs(c));
        return m;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (auto& [m, c] : terms_) {
            if (!first) out += " + ";
            first = false;
            out += "[" + c.str() + "]";
            for (auto id : m) {
                Symbol s;
                s.id = id;
                out += " " + species_name(s.species()) + "_" + std::to_string(s.component()) +
                       "(" + std::to_string(s.site()) + ")";
            }
        }
        return out;
    }

  private:
    Terms terms_;
};

using PolyX = Poly<ExactCoef>;  // exact coefficients
using PolyF = Poly<FloatCoef>;  // float coefficients

template <class C>
Poly<C> operator*(const typename Poly<C>::Coef& s, const Poly<C>& p) {
    return p.scaled(s);
}

// Conjugate canonical partner of a symbol, if it has one.
inline std::optional<Symbol> canonical_partner(Symbol s) {
    int c = s.component(), x = s.site();
    switch (s.species()) {
        case Species::A: return Symbol(Species::PiEm, c, x);
        case Species::PiEm: return Symbol(Species::A, c, x);
        case Species::Psi: return Symbol(Species::PiPsi, c, x);
        case Species::PiPsi: return Symbol(Species::Psi, c, x);
        case Species::PsiBar: return Symbol(Species::PiPsiBar, c, x);
        case Species::PiPsiBar: return Symbol(Species::PsiBar, c, x);
        default: return std::nullopt;
    }
}

// Sign carried by the term  dR F/ds * dL G/d(partner(s))  in the bracket:
// the EM pair contributes dF/dA dG/dpi - dF/dpi dG/dA, the psi pair with a
// plus between both orders, the psibar pair with a global minus. This is the
// convention that gives [psi, pi] = +delta, [psibar, pibar] = -delta and with
// it [chi1_l(x), chi2_k(y)] = i gamma^0_{kl} delta_{xy}/a^3.
inline int bracket_sign(Symbol s) {
    switch (s.species()) {
        case Species::A: return +1;
        case Species::PiEm: return -1;
        case Species::Psi:
        case Species::PiPsi: return +1;
        case Species::PsiBar:
        case Species::PiPsiBar: return -1;
        default: return 0;
    }
}

// All left derivatives of a fixed polynomial, one scan. Reused across many
// bracket evaluations against the same right operand.
template <class C>
struct DerivCache {
    std::map<uint32_t, Poly<C>> d;
    Parity parity = Parity::Even;

    explicit DerivCache(const Poly<C>& G) {
        parity = G.parity();
        for (auto& [m, c] : G.terms()) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (i > 0 && m[i] == m[i - 1]) continue; // one entry per distinct symbol
                uint32_t id = m[i];
                bool odd = species_odd(Species((id / 4u) % 16u));
                Mono rest;
                rest.reserve(m.size() - 1);
                rest.insert(rest.end(), m.begin(), m.begin() + i);
                rest.insert(rest.end(), m.begin() + i + 1, m.end());
                if (odd) {
                    int before = 0;
                    for (std::size_t j = 0; j < i; ++j)
                        if (species_odd(Species((m[j] / 4u) % 16u))) ++before;
                    d[id].add_raw(std::move(rest), (before % 2) ? -c : c);
                } else {
                    std::size_t j = i;
                    while (j < m.size() && m[j] == id) ++j;
                    d[id].add_raw(std::move(rest), c * C((long long)(j - i)));
                }
            }
        }
    }
};

// Graded Poisson bracket on lattice functionals. Functional derivatives carry
// the inverse measure 1/a^3.
template <class C>
Poly<C> gpb_cached(const Poly<C>& F, const DerivCache<C>& G, const LatticeSpec& lat) {
    if (F.parity() == Parity::Mixed || G.parity == Parity::Mixed) throw ParityError{};

    C inv_a3;
    if constexpr (std::is_same_v<C, ExactCoef>) {
        Rational a3 = lat.spacing * lat.spacing * lat.spacing;
        inv_a3 = C(GaussRat(Rational(1) / a3));
    } else {
        double a3 = std::pow(lat.spacing_d(), 3);
        inv_a3 = C(CDouble(1.0 / a3));
    }

    Poly<C> out;
    for (auto id : F.support()) {
        Symbol s;
        s.id = id;
        auto partner = canonical_partner(s);
        if (!partner) continue;
        auto it = G.d.find(partner->id);
        if (it == G.d.end()) continue;
        Poly<C> t = F.dright(s) * it->second;
        if (bracket_sign(s) < 0) t = -t;
        out += t.scaled(inv_a3);
    }
    return out;
}

template <class C>
Poly<C> gpb(const Poly<C>& F, const Poly<C>& G, const LatticeSpec& lat) {
    DerivCache<C> cache(G);
    return gpb_cached(F, cache, lat);
}

// Translate a polynomial by a lattice displacement (all symbols shifted).
template <class C>
Poly<C> translated(const Poly<C>& p, const LatticeSpec& lat, const std::array<int, 3>& d) {
    Poly<C> out;
    for (auto& [m, c] : p.terms()) {
        Mono nm;
        nm.reserve(m.size());
        for (auto id : m) {
            Symbol s;
            s.id = id;
            nm.push_back(Symbol(s.species(), s.component(), lat.displace(s.site(), d)).id);
        }
        out.add_raw(std::move(nm), c);
    }
    return out;
}

inline FloatCoef to_float(const ExactCoef& c) {
    return FloatCoef(CDouble(c.c0.to_complex()), CDouble(c.c1.to_complex()));
}

inline PolyF to_float(const PolyX& p) {
    PolyF out;
    for (auto& [m, c] : p.terms()) out.add_raw(m, to_float(c));
    return out;
}

} // namespace cqed
