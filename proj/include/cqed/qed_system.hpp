#pragma once

#include <array>
#include <cassert>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqed/graded.hpp"

namespace cqed {

// ---------------------------------------------------------------------------
// Exact gamma matrices (Dirac representation), entries in {0, +-1, +-i}.
// gamma^0 = diag(1,1,-1,-1), gamma^i = [[0, sigma^i], [-sigma^i, 0]].
// ---------------------------------------------------------------------------
using GammaEntry = GaussRat;
using GammaMatrixQ = std::array<std::array<GaussRat, 4>, 4>;

inline const GammaMatrixQ& gamma_q(int a) {
    static const std::array<GammaMatrixQ, 4> g = [] {
        std::array<GammaMatrixQ, 4> m{};
        auto R = [](long long v) { return GaussRat(Rational(v)); };
        auto I = [](long long v) { return GaussRat(Rational(0), Rational(v)); };
        // gamma^0
        m[0][0][0] = R(1);
        m[0][1][1] = R(1);
        m[0][2][2] = R(-1);
        m[0][3][3] = R(-1);
        // gamma^1
        m[1][0][3] = R(1);
        m[1][1][2] = R(1);
        m[1][2][1] = R(-1);
        m[1][3][0] = R(-1);
        // gamma^2
        m[2][0][3] = I(-1);
        m[2][1][2] = I(1);
        m[2][2][1] = I(1);
        m[2][3][0] = I(-1);
        // gamma^3
        m[3][0][2] = R(1);
        m[3][1][3] = R(-1);
        m[3][2][0] = R(-1);
        m[3][3][1] = R(1);
        return m;
    }();
    return g[a];
}

// ---------------------------------------------------------------------------
// Constraint bookkeeping
// ---------------------------------------------------------------------------
enum class ConstraintClass { Unknown, First, Second };

inline const char* class_name(ConstraintClass c) {
    switch (c) {
        case ConstraintClass::First: return "first";
        case ConstraintClass::Second: return "second";
        default: return "unknown";
    }
}

template <class C>
struct ConstraintFamily {
    std::string name;
    int components = 1;                 // 1 or 4
    Parity parity = Parity::Even;
    std::vector<Poly<C>> members;       // indexed comp * N + site
    ConstraintClass cls = ConstraintClass::Unknown;

    const Poly<C>& member(int comp, int site, int n_sites) const {
        return members[comp * n_sites + site];
    }
};

template <class C>
struct ConstraintSet {
    std::vector<ConstraintFamily<C>> families;
    std::vector<std::pair<int, int>> pairs; // indices into families

    const ConstraintFamily<C>* find(const std::string& name) const {
        for (auto& f : families)
            if (f.name == name) return &f;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Coefficient adapters so the system builder works for both exact and float
// coefficients.
// ---------------------------------------------------------------------------
template <class C>
struct CoefOps;

template <>
struct CoefOps<ExactCoef> {
    static ExactCoef scalar(const GaussRat& g) { return ExactCoef(g); }
    static ExactCoef coupling(const GaussRat& g) { return ExactCoef(GaussRat(0), g); }
    static bool exact() { return true; }
};

template <>
struct CoefOps<FloatCoef> {
    static FloatCoef scalar(const GaussRat& g) { return FloatCoef(CDouble(g.to_complex())); }
    static FloatCoef coupling(const GaussRat& g) {
        return FloatCoef(CDouble(0.0), CDouble(g.to_complex()));
    }
    static bool exact() { return false; }
};

// ---------------------------------------------------------------------------
// QED system on the lattice.
//
// EM sector: F_ij built from forward differences, divergences backward, so
// the composite Laplacian is the 7-point stencil. Fermion sector: symmetric
// difference, with the vector potential coupled to the matching symmetrized
// point-split current; that pairing makes the lattice continuity identity,
// and with it the closure of the consistency algorithm, exact.
// ---------------------------------------------------------------------------
template <class C>
struct QedSystem {
    LatticeSpec lat;
    Rational e;        // coupling magnitude, carried at first order
    Rational m;        // fermion mass
    Poly<C> hamiltonian;
    ConstraintSet<C> primaries;
};

template <class C>
Poly<C> psi_sym(int l, int x) { return Poly<C>::symbol(Symbol(Species::Psi, l, x)); }
template <class C>
Poly<C> psibar_sym(int l, int x) { return Poly<C>::symbol(Symbol(Species::PsiBar, l, x)); }

// local bilinear  psibar(x) Gamma psi(y), coefficient scale included
template <class C>
Poly<C> bilinear(const GammaMatrixQ& g, int x, int y, C scale) {
    Poly<C> out;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            if (g[a][b].is_zero()) continue;
            out.add_raw({Symbol(Species::PsiBar, a, x).id, Symbol(Species::Psi, b, y).id},
                        scale * CoefOps<C>::scalar(g[a][b]));
        }
    }
    return out;
}

template <class C>
QedSystem<C> build_qed_system(const LatticeSpec& lat, Rational e, Rational m) {
    using Ops = CoefOps<C>;
    const int N = lat.sites();
    const Rational a = lat.spacing;
    const Rational a3 = a * a * a;

    auto S = [](const Rational& r) { return Ops::scalar(GaussRat(r)); };
    auto SI = [](const Rational& r) { return Ops::scalar(GaussRat(Rational(0), r)); };
    auto E = [&](const Rational& r) { return Ops::coupling(GaussRat(e * r)); };

    QedSystem<C> sys;
    sys.lat = lat;
    sys.e = e;
    sys.m = m;

    Poly<C>& H = sys.hamiltonian;

    for (int x = 0; x < N; ++x) {
        // Dirac kinetic: -i psibar gamma^j (symmetric difference psi) + m psibar psi
        for (int j = 1; j <= 3; ++j) {
            int xp = lat.shift(x, j - 1, +1);
            int xm = lat.shift(x, j - 1, -1);
            Rational half = a3 / (a * 2);
            H += bilinear<C>(gamma_q(j), x, xp, SI(-half));  // -i * (1/2a)
            H += bilinear<C>(gamma_q(j), x, xm, SI(half));
        }
        {
            GammaMatrixQ id{};
            for (int d = 0; d < 4; ++d) id[d][d] = GaussRat(Rational(1));
            H += bilinear<C>(id, x, x, S(a3 * m));
        }

        // EM energy: 1/2 pi^j pi^j + 1/4 F_ij F_ij
        for (int j = 1; j <= 3; ++j) {
            auto pj = Symbol(Species::PiEm, j, x);
            Poly<C> p = Poly<C>::symbol(pj);
            H += (p * p).scaled(S(a3 * Rational(1, 2)));
        }
        for (int i = 1; i <= 3; ++i) {
            for (int j = 1; j <= 3; ++j) {
                if (i == j) continue;
                // F_ij = (A_j(x+i) - A_j(x))/a - (A_i(x+j) - A_i(x))/a
                Poly<C> Fij;
                Rational inv_a = Rational(1) / a;
                Fij += Poly<C>::symbol(Symbol(Species::A, j, lat.shift(x, i - 1, +1))).scaled(S(inv_a));
                Fij -= Poly<C>::symbol(Symbol(Species::A, j, x)).scaled(S(inv_a));
                Fij -= Poly<C>::symbol(Symbol(Species::A, i, lat.shift(x, j - 1, +1))).scaled(S(inv_a));
                Fij += Poly<C>::symbol(Symbol(Species::A, i, x)).scaled(S(inv_a));
                H += (Fij * Fij).scaled(S(a3 * Rational(1, 4)));
            }
        }

        // interaction: e A_j(x) * symmetrized point-split current
        for (int j = 1; j <= 3; ++j) {
            int xp = lat.shift(x, j - 1, +1);
            Poly<C> cur = bilinear<C>(gamma_q(j), x, xp, Ops::scalar(GaussRat(Rational(1, 2))));
            cur += bilinear<C>(gamma_q(j), xp, x, Ops::scalar(GaussRat(Rational(1, 2))));
            Poly<C> Aj = Poly<C>::symbol(Symbol(Species::A, j, x));
            H += (Aj * cur).scaled(E(a3));
        }

        // A_0 (e rho - div pi), backward divergence
        {
            Poly<C> A0 = Poly<C>::symbol(Symbol(Species::A, 0, x));
            Poly<C> rho = bilinear<C>(gamma_q(0), x, x, Ops::scalar(GaussRat(Rational(1))));
            H += (A0 * rho).scaled(E(a3));
            Poly<C> divpi;
            for (int j = 1; j <= 3; ++j) {
                divpi += Poly<C>::symbol(Symbol(Species::PiEm, j, x)).scaled(S(Rational(1) / a));
                divpi -= Poly<C>::symbol(Symbol(Species::PiEm, j, lat.shift(x, j - 1, -1)))
                             .scaled(S(Rational(1) / a));
            }
            H -= (A0 * divpi).scaled(S(a3));
        }
    }

    // Primary constraints.
    ConstraintFamily<C> chi1{"chi1", 4, Parity::Odd, {}, ConstraintClass::Unknown};
    ConstraintFamily<C> chi2{"chi2", 4, Parity::Odd, {}, ConstraintClass::Unknown};
    ConstraintFamily<C> gamma1{"gamma1", 1, Parity::Even, {}, ConstraintClass::Unknown};
    chi1.members.resize(4 * N);
    chi2.members.resize(4 * N);
    gamma1.members.resize(N);
    for (int x = 0; x < N; ++x) {
        for (int l = 0; l < 4; ++l) {
            Poly<C> c1 = Poly<C>::symbol(Symbol(Species::PiPsi, l, x));
            Poly<C> c2 = Poly<C>::symbol(Symbol(Species::PiPsiBar, l, x));
            for (int aa = 0; aa < 4; ++aa) {
                if (!gamma_q(0)[aa][l].is_zero())
                    c1 -= psibar_sym<C>(aa, x).scaled(SI(Rational(1, 2)) *
                                                      Ops::scalar(gamma_q(0)[aa][l]));
                if (!gamma_q(0)[l][aa].is_zero())
                    c2 += psi_sym<C>(aa, x).scaled(SI(Rational(1, 2)) *
                                                   Ops::scalar(gamma_q(0)[l][aa]));
            }
            chi1.members[l * N + x] = c1;
            chi2.members[l * N + x] = c2;
        }
        gamma1.members[x] = Poly<C>::symbol(Symbol(Species::PiEm, 0, x));
    }
    sys.primaries.families = {chi1, chi2, gamma1};
    return sys;
}

// Coulomb gauge condition chi = backward-div A, one member per site.
template <class C>
ConstraintFamily<C> coulomb_condition(const LatticeSpec& lat) {
    const int N = lat.sites();
    ConstraintFamily<C> f{"chi", 1, Parity::Even, {}, ConstraintClass::Unknown};
    f.members.resize(N);
    GaussRat inv_a(Rational(1) / lat.spacing);
    for (int x = 0; x < N; ++x) {
        Poly<C> p;
        for (int j = 1; j <= 3; ++j) {
            p += Poly<C>::symbol(Symbol(Species::A, j, x)).scaled(CoefOps<C>::scalar(inv_a));
            p -= Poly<C>::symbol(Symbol(Species::A, j, lat.shift(x, j - 1, -1)))
                     .scaled(CoefOps<C>::scalar(inv_a));
        }
        f.members[x] = p;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Surface reduction. Families whose members are linear in momentum symbols at
// their own site (the fermionic momenta and pi^0, in any invertible
// recombination) are solved jointly per site and turned into substitutions;
// everything else stays as the residual span for weak-equality tests.
// ---------------------------------------------------------------------------
inline bool momentum_species(Species s) {
    return s == Species::PiPsi || s == Species::PiPsiBar || s == Species::PiEm;
}

template <class C>
class SurfaceReducer {
  public:
    SurfaceReducer(const LatticeSpec& lat, const ConstraintSet<C>& set) : lat_(lat) {
        const int N = lat.sites();
        std::vector<const ConstraintFamily<C>*> participating;
        for (auto& fam : set.families) {
            if (ultralocal_momentum_linear(fam, N))
                participating.push_back(&fam);
            else
                residual_families_.push_back(&fam);
        }
        if (participating.empty()) return;

        // joint structure at site 0
        std::vector<uint32_t> unknowns;
        {
            std::set<uint32_t> u;
            for (auto* fam : participating)
                for (int c = 0; c < fam->components; ++c)
                    for (auto& [m, cf] : fam->members[c * N + 0].terms())
                        if (m.size() == 1) {
                            Symbol s;
                            s.id = m[0];
                            if (momentum_species(s.species()) && s.site() == 0) u.insert(m[0]);
                        }
            unknowns.assign(u.begin(), u.end());
        }
        int neq = 0;
        for (auto* fam : participating) neq += fam->components;
        if (neq != int(unknowns.size())) {
            // cannot invert; demote everything to the residual span
            for (auto* fam : participating) residual_families_.push_back(fam);
            return;
        }

        const int n = neq;
        std::vector<std::vector<C>> M(n, std::vector<C>(n, C(0)));
        {
            int eq = 0;
            for (auto* fam : participating)
                for (int c = 0; c < fam->components; ++c, ++eq)
                    for (std::size_t j = 0; j < unknowns.size(); ++j)
                        M[eq][j] = fam->members[c * N + 0].coefficient({unknowns[j]});
        }
        std::vector<std::vector<C>> Minv;
        try {
            Minv = ring_inverse_small(M);
        } catch (...) {
            for (auto* fam : participating) residual_families_.push_back(fam);
            return;
        }

        // substitutions at every site: u = -Minv * rest
        for (int x = 0; x < N; ++x) {
            std::vector<Poly<C>> rest(n);
            {
                int eq = 0;
                for (auto* fam : participating)
                    for (int c = 0; c < fam->components; ++c, ++eq) {
                        Poly<C> r = fam->members[c * N + x];
                        for (std::size_t j = 0; j < unknowns.size(); ++j) {
                            Symbol s;
                            s.id = unknowns[j];
                            Symbol sx(s.species(), s.component(), x);
                            C cf = r.coefficient({sx.id});
                            if (!cf.is_zero()) r -= Poly<C>::symbol(sx, cf);
                        }
                        rest[eq] = std::move(r);
                    }
            }
            for (std::size_t j = 0; j < unknowns.size(); ++j) {
                Symbol s;
                s.id = unknowns[j];
                Symbol sx(s.species(), s.component(), x);
                Poly<C> repl;
                for (int eq = 0; eq < n; ++eq)
                    if (!Minv[j][eq].is_zero()) repl -= rest[eq].scaled(Minv[j][eq]);
                subs_.emplace(sx.id, std::move(repl));
            }
        }
    }

    Poly<C> substitute(const Poly<C>& p) const {
        Poly<C> cur = p;
        for (;;) {
            bool hit = false;
            for (auto id : cur.support()) {
                auto it = subs_.find(id);
                if (it != subs_.end()) {
                    Symbol s;
                    s.id = id;
                    cur = cur.substituted(s, it->second);
                    hit = true;
                    break;
                }
            }
            if (!hit) return cur;
        }
    }

    // reduced (momentum-substituted) members of the non-solvable families
    std::vector<Poly<C>> reduced_span() const {
        std::vector<Poly<C>> out;
        for (auto* fam : residual_families_)
            for (auto& mpoly : fam->members) out.push_back(substitute(mpoly));
        return out;
    }

    const std::vector<const ConstraintFamily<C>*>& residual_families() const {
        return residual_families_;
    }

  private:
    static bool ultralocal_momentum_linear(const ConstraintFamily<C>& fam, int N) {
        bool has_momentum = false;
        for (int c = 0; c < fam.components; ++c) {
            for (auto& [m, cf] : fam.members[c * N + 0].terms()) {
                bool single_own_momentum = false;
                if (m.size() == 1) {
                    Symbol s;
                    s.id = m[0];
                    if (momentum_species(s.species()) && s.site() == 0)
                        single_own_momentum = true;
                }
                if (single_own_momentum) {
                    has_momentum = true;
                    continue;
                }
                for (auto id : m) {
                    Symbol s;
                    s.id = id;
                    if (momentum_species(s.species())) return false;
                }
            }
        }
        return has_momentum;
    }

    static std::vector<std::vector<C>> ring_inverse_small(const std::vector<std::vector<C>>& M) {
        return ring_matrix_inverse<C>(M);
    }

    LatticeSpec lat_;
    std::map<uint32_t, Poly<C>> subs_;
    std::vector<const ConstraintFamily<C>*> residual_families_;
};

// Dense scalar Gaussian elimination over GaussRat or CDouble.
template <class S>
struct DenseSolveResult {
    bool solvable = false;
    std::vector<S> particular;          // one solution if solvable
    std::vector<std::vector<S>> kernel; // homogeneous basis
};

inline double coef_mag(const GaussRat& g) { return g.is_zero() ? 0.0 : 1.0; }
inline double coef_mag(const CDouble& c) { return std::abs(c.v); }
template <class S>
double tiny();
template <>
inline double tiny<GaussRat>() { return 0.0; }
template <>
inline double tiny<CDouble>() { return 1e-9; }
inline GaussRat inverse(const GaussRat& g) { return g.inv(); }
inline CDouble inverse(const CDouble& c) { return CDouble(1.0 / c.v); }

template <class S>
DenseSolveResult<S> solve_dense(std::vector<std::vector<S>> Am, std::vector<S> b) {
    const std::size_t rows = Am.size();
    const std::size_t cols = rows ? Am[0].size() : 0;
    std::vector<int> pivot_col_of_row;
    std::vector<int> pivot_row_of_col(cols, -1);
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        double best = 0;
        for (std::size_t i = r; i < rows; ++i) {
            double mag = coef_mag(Am[i][c]);
            if (mag > best) {
                best = mag;
                p = i;
            }
        }
        if (best <= tiny<S>()) continue;
        std::swap(Am[p], Am[r]);
        std::swap(b[p], b[r]);
        S inv = inverse(Am[r][c]);
        for (std::size_t j = c; j < cols; ++j) Am[r][j] = Am[r][j] * inv;
        b[r] = b[r] * inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r) continue;
            S f = Am[i][c];
            if (coef_mag(f) <= tiny<S>()) continue;
            for (std::size_t j = c; j < cols; ++j) Am[i][j] = Am[i][j] - f * Am[r][j];
            b[i] = b[i] - f * b[r];
        }
        pivot_row_of_col[c] = int(r);
        pivot_col_of_row.push_back(int(c));
        ++r;
    }
    DenseSolveResult<S> out;
    out.solvable = true;
    for (std::size_t i = r; i < rows; ++i) {
        if (coef_mag(b[i]) > tiny<S>() * 100) out.solvable = false;
    }
    out.particular.assign(cols, S(0));
    if (out.solvable) {
        for (std::size_t i = 0; i < r; ++i) out.particular[pivot_col_of_row[i]] = b[i];
    }
    for (std::size_t c = 0; c < cols; ++c) {
        if (pivot_row_of_col[c] >= 0) continue;
        std::vector<S> v(cols, S(0));
        v[c] = S(1);
        for (std::size_t i = 0; i < r; ++i) {
            v[pivot_col_of_row[i]] = S(0) - Am[i][c];
        }
        out.kernel.push_back(std::move(v));
    }
    return out;
}

// Scalar layer type behind a ring coefficient.
template <class C>
struct ScalarOf;
template <>
struct ScalarOf<ExactCoef> {
    using type = GaussRat;
    static GaussRat l0(const ExactCoef& c) { return c.c0; }
    static GaussRat l1(const ExactCoef& c) { return c.c1; }
};
template <>
struct ScalarOf<FloatCoef> {
    using type = CDouble;
    static CDouble l0(const FloatCoef& c) { return c.c0; }
    static CDouble l1(const FloatCoef& c) { return c.c1; }
};

struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

template <class C>
C make_ring(const typename ScalarOf<C>::type& a, const typename ScalarOf<C>::type& b);
template <>
inline ExactCoef make_ring<ExactCoef>(const GaussRat& a, const GaussRat& b) {
    return ExactCoef(a, b);
}
template <>
inline FloatCoef make_ring<FloatCoef>(const CDouble& a, const CDouble& b) {
    return FloatCoef(a, b);
}

// Ring-valued matrix inverse, layer-unrolled over the nilpotent part:
// (M0 + M1 g)^{-1} = M0^{-1} - M0^{-1} M1 M0^{-1} g.
template <class C>
std::vector<std::vector<C>> ring_matrix_inverse(const std::vector<std::vector<C>>& M) {
    using S = typename ScalarOf<C>::type;
    const std::size_t n = M.size();
    std::vector<std::vector<S>> m0(n, std::vector<S>(n, S(0)));
    std::vector<std::vector<S>> m1(n, std::vector<S>(n, S(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            m0[i][j] = ScalarOf<C>::l0(M[i][j]);
            m1[i][j] = ScalarOf<C>::l1(M[i][j]);
        }
    std::vector<std::vector<S>> inv0(n, std::vector<S>(n, S(0)));
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<S> b(n, S(0));
        b[col] = S(1);
        auto r = solve_dense<S>(m0, b);
        if (!r.solvable || !r.kernel.empty())
            throw StructuralError("singular matrix in ring inverse");
        for (std::size_t i = 0; i < n; ++i) inv0[i][col] = r.particular[i];
    }
    auto matmul = [&](const std::vector<std::vector<S>>& A, const std::vector<std::vector<S>>& B) {
        std::vector<std::vector<S>> R(n, std::vector<S>(n, S(0)));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < n; ++j) R[i][j] = R[i][j] + A[i][k] * B[k][j];
        return R;
    };
    auto corr = matmul(matmul(inv0, m1), inv0);
    std::vector<std::vector<C>> out(n, std::vector<C>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i][j] = make_ring<C>(inv0[i][j], S(0) - corr[i][j]);
    return out;
}

// Sparse Gaussian elimination over a scalar field, column-oriented, with
// combination tracking so both kernels and particular solutions fall out.
template <class S>
class SparseSolver {
  public:
    explicit SparseSolver(int ncols) : ncols_(ncols) {}

    // add column j (must be called in order j = 0,1,2,...)
    void add_column(std::map<int, S> col) {
        std::map<int, S> comb;
        comb[int(cols_added_)] = S(1);
        reduce(col, comb);
        if (first_nonzero(col) < 0) {
            kernel_.push_back(std::move(comb));
        } else {
            int r = first_nonzero(col);
            pivots_.push_back({r, std::move(col), std::move(comb)});
        }
        ++cols_added_;
    }

    // is rhs in the span of the added columns? if yes and coeffs != nullptr,
    // fill the combination
    bool reduce_rhs(std::map<int, S> rhs, std::vector<S>* coeffs = nullptr) const {
        std::map<int, S> comb;
        reduce(rhs, comb);
        if (first_nonzero(rhs) >= 0) return false;
        if (coeffs) {
            coeffs->assign(ncols_, S(0));
            for (auto& [j, v] : comb) (*coeffs)[j] = S(0) - v;
        }
        return true;
    }

    const std::vector<std::map<int, S>>& kernel() const { return kernel_; }

  private:
    struct Pivot {
        int row;
        std::map<int, S> col;
        std::map<int, S> comb;
    };

    static int first_nonzero(const std::map<int, S>& col) {
        for (auto& [r, v] : col)
            if (coef_mag(v) > tiny<S>()) return r;
        return -1;
    }

    void reduce(std::map<int, S>& col, std::map<int, S>& comb) const {
        for (auto& p : pivots_) {
            auto it = col.find(p.row);
            if (it == col.end() || coef_mag(it->second) <= tiny<S>()) continue;
            S f = it->second * inverse(p.col.at(p.row));
            for (auto& [r, v] : p.col) {
                auto jt = col.find(r);
                if (jt == col.end())
                    col.emplace(r, S(0) - f * v);
                else
                    jt->second = jt->second - f * v;
            }
            for (auto& [j, v] : p.comb) {
                auto jt = comb.find(j);
                if (jt == comb.end())
                    comb.emplace(j, S(0) - f * v);
                else
                    jt->second = jt->second - f * v;
            }
            // clean tiny/zero entries at the pivot row
            col.erase(p.row);
        }
        // drop exact zeros to keep maps small
        for (auto it = col.begin(); it != col.end();)
            it = (coef_mag(it->second) <= tiny<S>()) ? col.erase(it) : std::next(it);
    }

    int ncols_;
    std::size_t cols_added_ = 0;
    std::vector<Pivot> pivots_;
    std::vector<std::map<int, S>> kernel_;
};

inline ExactCoef ring_div(const ExactCoef& a, const ExactCoef& b) {
    // (a0 + a1 g) / (b0 + b1 g), b0 invertible
    GaussRat inv = b.c0.inv();
    return ExactCoef(a.c0 * inv, (a.c1 - a.c0 * inv * b.c1) * inv);
}
inline FloatCoef ring_div(const FloatCoef& a, const FloatCoef& b) {
    std::complex<double> inv = 1.0 / b.c0.v;
    return FloatCoef(CDouble(a.c0.v * inv), CDouble((a.c1.v - a.c0.v * inv * b.c1.v) * inv));
}

// Decides whether `target` lies in the span of `basis` with ring-scalar
// coefficients. The nilpotent layer is handled by unrolling each ring unknown
// u = u0 + u1 g into two scalar unknowns and each monomial equation into its
// order-0 and order-1 parts.
template <class C>
bool in_ring_span(const Poly<C>& target, const std::vector<Poly<C>>& basis) {
    using S = typename ScalarOf<C>::type;
    if (target.is_zero()) return true;

    // fast path: proportional to a single basis element
    for (auto& b : basis) {
        if (b.size() != target.size() || b.is_zero()) continue;
        // candidate ratio from the first monomials
        auto& [m0, c0] = *target.terms().begin();
        auto& [mb, cb] = *b.terms().begin();
        if (m0 != mb) continue;
        Poly<C> diff;
        bool layered_ok = true;
        // only attempt the cheap test when the basis leading coefficient is
        // ring-invertible
        if constexpr (std::is_same_v<C, ExactCoef>) {
            layered_ok = !cb.c0.is_zero();
        } else {
            layered_ok = std::abs(cb.c0.v) > 1e-12;
        }
        if (!layered_ok) continue;
        C ratio = ring_div(c0, cb);
        diff = target - b.scaled(ratio);
        if (diff.is_zero()) return true;
    }

    std::map<Mono, int> row_of;
    auto row = [&](const Mono& m) {
        auto it = row_of.find(m);
        if (it != row_of.end()) return it->second;
        int k = int(row_of.size());
        row_of.emplace(m, k);
        return k;
    };

    SparseSolver<S> solver(int(2 * basis.size()));
    for (auto& b : basis) {
        std::map<int, S> col0, col1;
        for (auto& [m, c] : b.terms()) {
            int r = row(m);
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
    std::map<int, S> rhs;
    for (auto& [m, c] : target.terms()) {
        int r = row(m);
        S c0 = ScalarOf<C>::l0(c), c1 = ScalarOf<C>::l1(c);
        if (coef_mag(c0) > tiny<S>()) rhs[2 * r] = c0;
        if (coef_mag(c1) > tiny<S>()) rhs[2 * r + 1] = c1;
    }
    return solver.reduce_rhs(std::move(rhs));
}

// Full weak-equality test: momentum substitution, then span membership in the
// reduced non-solvable families.
template <class C>
bool weakly_zero(const Poly<C>& p, const SurfaceReducer<C>& red,
                 const std::vector<Poly<C>>& reduced_span) {
    Poly<C> r = red.substitute(p);
    if (r.is_zero()) return true;
    return in_ring_span(r, reduced_span);
}

} // namespace cqed
