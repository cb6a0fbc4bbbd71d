#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>

#include "cqed/qed_system.hpp"

namespace cqed {

// flip overall sign so the leading coefficient of the first member is positive
template <class C>
void normalize_family_sign(ConstraintFamily<C>& fam) {
    if (fam.members.empty() || fam.members[0].is_zero()) return;
    const auto& [mono, coef] = *fam.members[0].terms().begin();
    (void)mono;
    bool flip = false;
    if constexpr (std::is_same_v<C, ExactCoef>) {
        const GaussRat& lead = coef.c0.is_zero() ? coef.c1 : coef.c0;
        if (lead.re.sign() < 0 || (lead.re.sign() == 0 && lead.im.sign() < 0)) flip = true;
    } else {
        auto v = std::abs(coef.c0.v) > 1e-30 ? coef.c0.v : coef.c1.v;
        if (v.real() < 0 || (std::abs(v.real()) < 1e-30 && v.imag() < 0)) flip = true;
    }
    if (flip)
        for (auto& m : fam.members) m = -m;
}

// ---------------------------------------------------------------------------
// Consistency algorithm: iterate time preservation of every constraint under
// the total Hamiltonian. Each bracket splits into a multiplier-free part
// (candidate secondary constraint) and bare-linear multiplier conditions,
// which are solved either per site (invertible component matrix) or as a
// translation-invariant stencil system (pseudo-inverted off the zero mode).
// ---------------------------------------------------------------------------
template <class C>
struct MultiplierSolution {
    Species species;
    int components = 1;
    std::vector<Poly<C>> values;   // comp * N + site, particular solution
    bool modulo_constant = false;  // the stencil system had a constant zero mode
};

template <class C>
struct ConsistencyOutcome {
    ConstraintSet<C> tower;
    std::vector<MultiplierSolution<C>> multipliers;
    std::vector<std::string> notes;
    std::vector<std::string> failures;
    bool closed = false;
    int sweeps = 0;

    const MultiplierSolution<C>* solution(Species s) const {
        for (auto& m : multipliers)
            if (m.species == s) return &m;
        return nullptr;
    }
};

namespace detail_ca {

// Split into multiplier-free part and bare multiplier-symbol coefficients.
// Returns false when a multiplier appears inside a larger monomial.
template <class C>
bool split_multipliers(const Poly<C>& B, Poly<C>& base, std::map<uint32_t, C>& mult_coefs) {
    base = Poly<C>();
    mult_coefs.clear();
    for (auto& [m, c] : B.terms()) {
        int nmult = 0;
        uint32_t which = 0;
        for (auto id : m) {
            Symbol s;
            s.id = id;
            if (species_multiplier(s.species())) {
                ++nmult;
                which = id;
            }
        }
        if (nmult == 0) {
            base.add_raw(m, c);
        } else if (nmult == 1 && m.size() == 1) {
            auto it = mult_coefs.find(which);
            if (it == mult_coefs.end())
                mult_coefs.emplace(which, c);
            else
                it->second += c;
        } else {
            return false;
        }
    }
    return true;
}

} // namespace detail_ca

template <class C>
ConsistencyOutcome<C> run_consistency(const QedSystem<C>& sys, bool with_coulomb_gauge) {
    using Ops = CoefOps<C>;
    const LatticeSpec& lat = sys.lat;
    const int N = lat.sites();
    const C a3 = Ops::scalar(GaussRat(lat.spacing * lat.spacing * lat.spacing));

    ConsistencyOutcome<C> out;
    out.tower = sys.primaries;
    if (with_coulomb_gauge) out.tower.families.push_back(coulomb_condition<C>(lat));

    Poly<C> HT = sys.hamiltonian;
    {
        const ConstraintFamily<C>* chi1 = out.tower.find("chi1");
        const ConstraintFamily<C>* chi2 = out.tower.find("chi2");
        const ConstraintFamily<C>* g1 = out.tower.find("gamma1");
        for (int x = 0; x < N; ++x) {
            HT += (Poly<C>::symbol(Symbol(Species::MultU0, 0, x)) * g1->members[x]).scaled(a3);
            for (int l = 0; l < 4; ++l) {
                HT += (chi1->members[l * N + x] * Poly<C>::symbol(Symbol(Species::MultU1, l, x)))
                          .scaled(a3);
                HT += (Poly<C>::symbol(Symbol(Species::MultU2, l, x)) * chi2->members[l * N + x])
                          .scaled(a3);
            }
            if (with_coulomb_gauge)
                HT += (Poly<C>::symbol(Symbol(Species::MultGauge, 0, x)) *
                       out.tower.find("chi")->members[x])
                          .scaled(a3);
        }
    }
    DerivCache<C> Hcache(HT);

    std::map<uint32_t, Poly<C>> solved;
    auto substitute_solved = [&](Poly<C> p) {
        for (;;) {
            bool hit = false;
            for (auto id : p.support()) {
                Symbol s;
                s.id = id;
                if (!species_multiplier(s.species())) continue;
                auto it = solved.find(id);
                if (it != solved.end()) {
                    p = p.substituted(s, it->second);
                    hit = true;
                    break;
                }
            }
            if (!hit) return p;
        }
    };
    auto consistency_bracket = [&](const Poly<C>& member) {
        return substitute_solved(gpb_cached(member, Hcache, lat));
    };

    int sec_counter = 0;
    for (int sweep = 0; sweep < 8; ++sweep) {
        out.sweeps = sweep + 1;
        bool changed = false;

        SurfaceReducer<C> red(lat, out.tower);
        auto span = red.reduced_span();

        const std::size_t nfam = out.tower.families.size();
        for (std::size_t fi = 0; fi < nfam; ++fi) {
            auto& fam = out.tower.families[fi];
            std::vector<Poly<C>> rep(fam.components);
            bool any_mult = false;
            for (int comp = 0; comp < fam.components; ++comp) {
                rep[comp] = consistency_bracket(fam.members[comp * N + 0]);
                for (auto id : rep[comp].support()) {
                    Symbol s;
                    s.id = id;
                    if (species_multiplier(s.species())) any_mult = true;
                }
            }

            if (!any_mult) {
                bool zero = true;
                for (auto& B : rep)
                    if (!weakly_zero(B, red, span)) {
                        zero = false;
                        break;
                    }
                if (zero) continue;
                ConstraintFamily<C> nf;
                nf.name = "sec_" + fam.name;
                while (out.tower.find(nf.name))
                    nf.name = "sec_" + fam.name + "_" + std::to_string(++sec_counter);
                nf.components = fam.components;
                nf.parity = fam.parity;
                nf.members.resize(fam.components * N);
                for (int comp = 0; comp < fam.components; ++comp)
                    for (int x = 0; x < N; ++x)
                        nf.members[comp * N + x] =
                            consistency_bracket(fam.members[comp * N + x]);
                normalize_family_sign(nf);
                out.tower.families.push_back(std::move(nf));
                changed = true;
                continue;
            }

            Poly<C> base0;
            std::map<uint32_t, C> mc0;
            if (!detail_ca::split_multipliers(rep[0], base0, mc0)) {
                out.failures.push_back("nonlinear multiplier dependence in d/dt " + fam.name);
                return out;
            }
            std::set<Species> specs;
            for (auto& [id, c] : mc0) {
                Symbol s;
                s.id = id;
                specs.insert(s.species());
            }
            if (specs.size() != 1) {
                out.failures.push_back("mixed multiplier species in d/dt " + fam.name);
                return out;
            }
            Species ms = *specs.begin();
            const int mcomps = (ms == Species::MultU1 || ms == Species::MultU2) ? 4 : 1;

            bool ultralocal = true;
            for (auto& [id, c] : mc0) {
                Symbol s;
                s.id = id;
                if (s.site() != 0) ultralocal = false;
            }

            if (ultralocal && fam.components == mcomps) {
                std::vector<std::vector<C>> T(fam.components, std::vector<C>(mcomps, C(0)));
                for (int comp = 0; comp < fam.components; ++comp) {
                    Poly<C> b;
                    std::map<uint32_t, C> mcc;
                    if (!detail_ca::split_multipliers(rep[comp], b, mcc)) {
                        out.failures.push_back("nonlinear multiplier dependence");
                        return out;
                    }
                    for (auto& [id, c] : mcc) {
                        Symbol s;
                        s.id = id;
                        if (s.site() != 0 || s.species() != ms) {
                            out.failures.push_back("irregular multiplier coefficient pattern");
                            return out;
                        }
                        T[comp][s.component()] = c;
                    }
                }
                std::vector<std::vector<C>> Tinv;
                try {
                    Tinv = ring_matrix_inverse<C>(T);
                } catch (const StructuralError&) {
                    out.failures.push_back("multiplier system for " + fam.name +
                                           " is not invertible");
                    return out;
                }
                MultiplierSolution<C> sol;
                sol.species = ms;
                sol.components = mcomps;
                sol.values.resize(mcomps * N);
                for (int x = 0; x < N; ++x) {
                    std::vector<Poly<C>> bases(fam.components);
                    for (int comp = 0; comp < fam.components; ++comp) {
                        Poly<C> B = consistency_bracket(fam.members[comp * N + x]);
                        Poly<C> bb;
                        std::map<uint32_t, C> dd;
                        detail_ca::split_multipliers(B, bb, dd);
                        bases[comp] = std::move(bb);
                    }
                    for (int k = 0; k < mcomps; ++k) {
                        Poly<C> u;
                        for (int l = 0; l < fam.components; ++l)
                            if (!Tinv[k][l].is_zero()) u -= bases[l].scaled(Tinv[k][l]);
                        sol.values[k * N + x] = u;
                        solved[Symbol(ms, k, x).id] = std::move(u);
                    }
                }
                out.multipliers.push_back(std::move(sol));
                changed = true;
            } else if (fam.components == 1 && mcomps == 1) {
                // stencil system t * u = -base
                std::vector<Rational> st_q(N, Rational(0));
                std::vector<double> st_d(N, 0.0);
                for (auto& [id, c] : mc0) {
                    Symbol s;
                    s.id = id;
                    if constexpr (std::is_same_v<C, ExactCoef>) {
                        if (!c.c1.is_zero() || !c.c0.im.is_zero()) {
                            out.failures.push_back("multiplier stencil is not a real constant");
                            return out;
                        }
                        st_q[s.site()] = c.c0.re;
                    } else {
                        st_d[s.site()] = c.c0.v.real();
                    }
                }
                MultiplierSolution<C> sol;
                sol.species = ms;
                sol.components = 1;
                sol.values.resize(N);
                std::vector<Poly<C>> bases(N);
                for (int y = 0; y < N; ++y) {
                    Poly<C> B = consistency_bracket(fam.members[y]);
                    Poly<C> bb;
                    std::map<uint32_t, C> dd;
                    detail_ca::split_multipliers(B, bb, dd);
                    bases[y] = std::move(bb);
                }
                if constexpr (std::is_same_v<C, ExactCoef>) {
                    auto pinv = invert_stencil_exact(lat, st_q);
                    sol.modulo_constant = pinv.zero_modes > 0;
                    for (int x = 0; x < N; ++x) {
                        Poly<C> u;
                        for (int y = 0; y < N; ++y)
                            if (!bases[y].is_zero())
                                u -= bases[y].scaled(Ops::scalar(GaussRat(pinv.at(x, y))));
                        sol.values[x] = u;
                        solved[Symbol(ms, 0, x).id] = std::move(u);
                    }
                } else {
                    auto pinv = invert_stencil_float(lat, st_d);
                    sol.modulo_constant = pinv.zero_modes > 0;
                    for (int x = 0; x < N; ++x) {
                        Poly<C> u;
                        for (int y = 0; y < N; ++y)
                            if (!bases[y].is_zero()) u -= bases[y].scaled(C(CDouble(pinv.at(x, y))));
                        sol.values[x] = u;
                        solved[Symbol(ms, 0, x).id] = std::move(u);
                    }
                }
                if (sol.modulo_constant)
                    out.notes.push_back(species_name(ms) + " fixed up to the constant mode");
                out.multipliers.push_back(std::move(sol));
                changed = true;
            } else {
                out.failures.push_back("unsupported multiplier pattern for " + fam.name);
                return out;
            }
        }

        if (!changed) {
            // closure verification sweep
            SurfaceReducer<C> red2(lat, out.tower);
            auto span2 = red2.reduced_span();
            bool ok = true;
            for (auto& fam : out.tower.families) {
                for (int comp = 0; comp < fam.components && ok; ++comp) {
                    Poly<C> B = consistency_bracket(fam.members[comp * N + 0]);
                    for (auto id : B.support()) {
                        Symbol s;
                        s.id = id;
                        if (species_multiplier(s.species())) {
                            out.failures.push_back("unsolved multiplier survives in d/dt " +
                                                   fam.name);
                            ok = false;
                        }
                    }
                    if (ok && !weakly_zero(B, red2, span2)) {
                        out.failures.push_back("consistency bracket of " + fam.name +
                                               " does not vanish on the surface");
                        ok = false;
                    }
                }
            }
            out.closed = ok;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification. First-class candidates are combinations
//   gamma(x) = sum_{even f} c_f phi_f(x)
//            + sum_{odd f} chi_{f,l}(x) * M^{f,s}_{lm} theta_{s,m}(x),
// theta in {psi, psibar} -- the Gauss-constraint ansatz with scalar/linear
// coefficients. The induced linear system is solved layer by layer in the
// coupling; kernel directions with vanishing order-0 part are coupling
// multiples and not counted as separate families.
// ---------------------------------------------------------------------------
struct AnsatzTerm {
    int family;
    int comp = 0;
    std::optional<std::pair<Species, int>> field;
};

template <class C>
Poly<C> ansatz_term_at(const ConstraintSet<C>& set, const LatticeSpec& lat, const AnsatzTerm& t,
                       int site) {
    const int N = lat.sites();
    const auto& fam = set.families[t.family];
    Poly<C> p = fam.members[t.comp * N + site];
    if (t.field) p = p * Poly<C>::symbol(Symbol(t.field->first, t.field->second, site));
    return p;
}

template <class C>
struct ClassifyOutcome {
    ConstraintSet<C> set;
    int first_class_families = 0;
    std::vector<std::vector<std::pair<AnsatzTerm, C>>> combinations;
};

template <class C>
ClassifyOutcome<C> classify(const LatticeSpec& lat, const ConstraintSet<C>& input) {
    using S = typename ScalarOf<C>::type;
    const int N = lat.sites();

    ClassifyOutcome<C> out;
    out.set = input;

    SurfaceReducer<C> red(lat, input);

    std::vector<AnsatzTerm> terms;
    for (int f = 0; f < int(input.families.size()); ++f) {
        const auto& fam = input.families[f];
        if (fam.parity == Parity::Even) {
            for (int c = 0; c < fam.components; ++c) terms.push_back({f, c, std::nullopt});
        } else {
            for (int c = 0; c < fam.components; ++c)
                for (Species sp : {Species::Psi, Species::PsiBar})
                    for (int m = 0; m < 4; ++m) terms.push_back({f, c, std::make_pair(sp, m)});
        }
    }

    std::map<Mono, int> row_of;
    std::vector<std::map<Mono, C>> cols(terms.size());
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
        Poly<C> tp = ansatz_term_at(input, lat, terms[ti], 0);
        DerivCache<C> tc(tp);
        for (std::size_t gf = 0; gf < input.families.size(); ++gf) {
            const auto& fam = input.families[gf];
            for (std::size_t mi = 0; mi < fam.members.size(); ++mi) {
                // [term, member] = sign * [member, term]
                Poly<C> B = gpb_cached(fam.members[mi], tc, lat);
                if (B.is_zero()) continue;
                bool both_odd = fam.parity == Parity::Odd && tp.parity() == Parity::Odd;
                if (!both_odd) B = -B;
                B = red.substitute(B);
                for (auto& [m, c] : B.terms()) {
                    Mono key = m;
                    key.push_back(0xff000000u + uint32_t(mi));
                    key.push_back(0xfe000000u + uint32_t(gf));
                    if (!row_of.count(key)) row_of.emplace(key, int(row_of.size()));
                    auto it = cols[ti].find(key);
                    if (it == cols[ti].end())
                        cols[ti].emplace(key, c);
                    else
                        it->second += c;
                }
            }
        }
    }

    const std::size_t nu = terms.size();
    SparseSolver<S> solver(int(2 * nu));
    for (std::size_t j = 0; j < nu; ++j) {
        std::map<int, S> col0, col1;
        for (auto& [key, c] : cols[j]) {
            int r = row_of[key];
            S c0 = ScalarOf<C>::l0(c), c1 = ScalarOf<C>::l1(c);
            if (coef_mag(c0) > tiny<S>()) {
                col0[2 * r] = c0;
                col1[2 * r + 1] = c0;
            }
            if (coef_mag(c1) > tiny<S>()) col0[2 * r + 1] = c1;
        }
        solver.add_column(std::move(col0));
        solver.add_column(std::move(col1));
    }

    std::vector<std::vector<S>> lead;
    for (auto& kv : solver.kernel()) {
        std::vector<S> v(2 * nu, S(0));
        for (auto& [j, val] : kv) v[j] = val;
        std::vector<S> l0(nu);
        bool nz = false;
        for (std::size_t j = 0; j < nu; ++j) {
            l0[j] = v[2 * j];
            if (coef_mag(l0[j]) > tiny<S>()) nz = true;
        }
        if (!nz) continue;
        lead.push_back(l0);
        std::vector<std::pair<AnsatzTerm, C>> combo;
        for (std::size_t j = 0; j < nu; ++j) {
            C c = make_ring<C>(v[2 * j], v[2 * j + 1]);
            if (!c.is_zero()) combo.emplace_back(terms[j], c);
        }
        out.combinations.push_back(std::move(combo));
    }

    // rank of the order-0 projections = number of first-class families
    {
        auto M = lead;
        std::size_t r = 0;
        for (std::size_t c = 0; c < nu && r < M.size(); ++c) {
            std::size_t p = r;
            bool found = false;
            for (std::size_t i = r; i < M.size(); ++i)
                if (coef_mag(M[i][c]) > tiny<S>()) {
                    p = i;
                    found = true;
                    break;
                }
            if (!found) continue;
            std::swap(M[p], M[r]);
            S inv = inverse(M[r][c]);
            for (std::size_t j = 0; j < nu; ++j) M[r][j] = M[r][j] * inv;
            for (std::size_t i = 0; i < M.size(); ++i) {
                if (i == r) continue;
                S f = M[i][c];
                if (coef_mag(f) <= tiny<S>()) continue;
                for (std::size_t j = 0; j < nu; ++j) M[i][j] = M[i][j] - f * M[r][j];
            }
            ++r;
        }
        out.first_class_families = int(r);
    }

    // direct marking: a family is first class iff the brackets of its bare
    // members vanish weakly against the whole set
    auto span = red.reduced_span();
    for (int f = 0; f < int(out.set.families.size()); ++f) {
        const auto& fam = out.set.families[f];
        bool first = true;
        for (int c = 0; c < fam.components && first; ++c) {
            Poly<C> rep = fam.members[c * N + 0];
            DerivCache<C> rc(rep);
            Parity prep = rep.parity();
            for (auto& other : input.families) {
                for (auto& member : other.members) {
                    Poly<C> B = gpb_cached(member, rc, lat);
                    if (B.is_zero()) continue;
                    bool both_odd = other.parity == Parity::Odd && prep == Parity::Odd;
                    if (!both_odd) B = -B;
                    if (!weakly_zero(B, red, span)) {
                        first = false;
                        break;
                    }
                }
                if (!first) break;
            }
        }
        out.set.families[f].cls = first ? ConstraintClass::First : ConstraintClass::Second;
    }
    return out;
}

template <class C>
ConstraintFamily<C> combination_family(const ConstraintSet<C>& set, const LatticeSpec& lat,
                                       const std::vector<std::pair<AnsatzTerm, C>>& combo,
                                       const std::string& name) {
    const int N = lat.sites();
    ConstraintFamily<C> fam;
    fam.name = name;
    fam.components = 1;
    fam.members.resize(N);
    for (int x = 0; x < N; ++x) {
        Poly<C> p;
        for (auto& [t, c] : combo) p += ansatz_term_at(set, lat, t, x).scaled(c);
        fam.members[x] = p;
    }
    fam.parity = fam.members[0].parity();
    fam.cls = ConstraintClass::First;
    return fam;
}

// ---------------------------------------------------------------------------
// Generalized Dirac bracket for a paired second-class set.
// ---------------------------------------------------------------------------
template <class C>
class DiracBracket {
  public:
    DiracBracket(const LatticeSpec& lat, const ConstraintSet<C>& set) : lat_(lat), set_(set) {
        if (set.pairs.empty()) throw StructuralError("constraint set has no pairing");
        for (auto& f : set.families)
            if (f.cls == ConstraintClass::First)
                throw StructuralError("Dirac bracket requires a second-class set");
        const int N = lat.sites();
        for (auto [P, Q] : set.pairs) {
            const auto& fp = set.families[P];
            const auto& fq = set.families[Q];
            if (fp.components == fq.components && fp.components > 1) {
                UltralocalPair up;
                up.P = P;
                up.Q = Q;
                const int nc = fp.components;
                std::vector<std::vector<C>> Mpq(nc, std::vector<C>(nc, C(0)));
                std::vector<std::vector<C>> Mqp(nc, std::vector<C>(nc, C(0)));
                for (int l = 0; l < nc; ++l)
                    for (int k = 0; k < nc; ++k) {
                        Mpq[l][k] =
                            gpb(fp.members[l * N], fq.members[k * N], lat_).constant_part();
                        Mqp[k][l] =
                            gpb(fq.members[k * N], fp.members[l * N], lat_).constant_part();
                    }
                up.Wqp = ring_matrix_inverse<C>(Mpq);
                up.Wpq = ring_matrix_inverse<C>(Mqp);
                ultralocal_.push_back(std::move(up));
            } else if (fp.components == 1 && fq.components == 1) {
                StencilPair sp;
                sp.P = P;
                sp.Q = Q;
                std::vector<Rational> st_q(N, Rational(0));
                std::vector<double> st_d(N, 0.0);
                for (int r = 0; r < N; ++r) {
                    C c = gpb(fp.members[0], fq.members[r], lat_).constant_part();
                    if constexpr (std::is_same_v<C, ExactCoef>) {
                        if (!c.c1.is_zero() || !c.c0.im.is_zero())
                            throw StructuralError("pairing stencil must be a real constant");
                        st_q[r] = c.c0.re;
                    } else {
                        st_d[r] = c.c0.v.real();
                    }
                }
                if constexpr (std::is_same_v<C, ExactCoef>) {
                    for (int r = 0; r < N; ++r) {
                        auto d = lat.coords(r);
                        int rn = lat.site_of(-d[0], -d[1], -d[2]);
                        if (!(st_q[r] == st_q[rn]))
                            throw StructuralError("pairing stencil is not symmetric");
                    }
                    auto pinv = invert_stencil_exact(lat, st_q);
                    if (pinv.zero_modes > 1)
                        throw StructuralError("pairing singular beyond the constant mode");
                    sp.w.resize(N);
                    for (int r = 0; r < N; ++r)
                        sp.w[r] = CoefOps<C>::scalar(GaussRat(pinv.values[r]));
                } else {
                    auto pinv = invert_stencil_float(lat, st_d);
                    if (pinv.zero_modes > 1)
                        throw StructuralError("pairing singular beyond the constant mode");
                    sp.w.resize(N);
                    for (int r = 0; r < N; ++r) sp.w[r] = C(CDouble(pinv.values[r]));
                }
                stencil_.push_back(std::move(sp));
            } else {
                throw StructuralError("unsupported constraint pair shape");
            }
        }
    }

    // [F, G]_D = [F, G] - sum over pairs of [F, chi] W [chi, G]
    Poly<C> bracket(const Poly<C>& F, const Poly<C>& G) const {
        const int N = lat_.sites();
        Parity pf = F.parity(), pg = G.parity();
        if (pf == Parity::Mixed || pg == Parity::Mixed) throw ParityError{};
        DerivCache<C> Fc(F), Gc(G);
        Poly<C> out = gpb_cached(F, Gc, lat_);

        // [F, chi] from [chi, F] and graded antisymmetry
        auto left_bracket = [&](const Poly<C>& chi, Parity pchi) {
            Poly<C> b = gpb_cached(chi, Fc, lat_);
            bool both_odd = (pchi == Parity::Odd) && (pf == Parity::Odd);
            return both_odd ? b : -b;
        };

        for (auto& up : ultralocal_) {
            const auto& fp = set_.families[up.P];
            const auto& fq = set_.families[up.Q];
            const int nc = fp.components;
            for (int x = 0; x < N; ++x) {
                std::vector<Poly<C>> uP(nc), vQ(nc), uQ(nc), vP(nc);
                bool anyL = false, anyR = false;
                for (int l = 0; l < nc; ++l) {
                    uP[l] = left_bracket(fp.members[l * N + x], fp.parity);
                    uQ[l] = left_bracket(fq.members[l * N + x], fq.parity);
                    vP[l] = gpb_cached(fp.members[l * N + x], Gc, lat_);
                    vQ[l] = gpb_cached(fq.members[l * N + x], Gc, lat_);
                    if (!uP[l].is_zero() || !uQ[l].is_zero()) anyL = true;
                    if (!vP[l].is_zero() || !vQ[l].is_zero()) anyR = true;
                }
                if (!anyL || !anyR) continue;
                for (int l = 0; l < nc; ++l)
                    for (int k = 0; k < nc; ++k) {
                        if (!up.Wpq[l][k].is_zero() && !uP[l].is_zero() && !vQ[k].is_zero())
                            out -= (uP[l] * vQ[k]).scaled(up.Wpq[l][k]);
                        if (!up.Wqp[k][l].is_zero() && !uQ[k].is_zero() && !vP[l].is_zero())
                            out -= (uQ[k] * vP[l]).scaled(up.Wqp[k][l]);
                    }
            }
        }

        for (auto& sp : stencil_) {
            const auto& fp = set_.families[sp.P];
            const auto& fq = set_.families[sp.Q];
            std::vector<int> nzuP, nzuQ, nzvP, nzvQ;
            std::vector<Poly<C>> uP(N), uQ(N), vP(N), vQ(N);
            for (int x = 0; x < N; ++x) {
                uP[x] = left_bracket(fp.members[x], fp.parity);
                if (!uP[x].is_zero()) nzuP.push_back(x);
                uQ[x] = left_bracket(fq.members[x], fq.parity);
                if (!uQ[x].is_zero()) nzuQ.push_back(x);
                vP[x] = gpb_cached(fp.members[x], Gc, lat_);
                if (!vP[x].is_zero()) nzvP.push_back(x);
                vQ[x] = gpb_cached(fq.members[x], Gc, lat_);
                if (!vQ[x].is_zero()) nzvQ.push_back(x);
            }
            // W^{PQ} = -pinv, W^{QP} = +pinv for an antisymmetric even pairing
            for (int x : nzuP)
                for (int y : nzvQ) {
                    const C& w = wval(sp, x, y);
                    if (!w.is_zero()) out += (uP[x] * vQ[y]).scaled(w);
                }
            for (int x : nzuQ)
                for (int y : nzvP) {
                    const C& w = wval(sp, x, y);
                    if (!w.is_zero()) out -= (uQ[x] * vP[y]).scaled(w);
                }
        }
        return out;
    }

    const LatticeSpec& lattice() const { return lat_; }
    const ConstraintSet<C>& constraints() const { return set_; }

  private:
    struct UltralocalPair {
        int P, Q;
        std::vector<std::vector<C>> Wpq, Wqp;
    };
    struct StencilPair {
        int P, Q;
        std::vector<C> w;
    };

    const C& wval(const StencilPair& sp, int x, int y) const {
        auto d = lat_.separation(x, y);
        return sp.w[lat_.site_of(d[0], d[1], d[2])];
    }

    LatticeSpec lat_;
    ConstraintSet<C> set_;
    std::vector<UltralocalPair> ultralocal_;
    std::vector<StencilPair> stencil_;
};

} // namespace cqed
