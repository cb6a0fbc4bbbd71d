#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "cqed/qed_ops.hpp"

using namespace cqed;

namespace {

const Rational kE(3, 10);
const Rational kM(1);

ExactCoef ec(long long n, long long d = 1) { return ExactCoef(GaussRat(Rational(n, d))); }

PolyX backward_div_pi(const LatticeSpec& lat, int x) {
    PolyX p;
    GaussRat inv_a(Rational(1) / lat.spacing);
    for (int j = 1; j <= 3; ++j) {
        p += PolyX::symbol(Symbol(Species::PiEm, j, x)).scaled(ExactCoef(inv_a));
        p -= PolyX::symbol(Symbol(Species::PiEm, j, lat.shift(x, j - 1, -1)))
                 .scaled(ExactCoef(inv_a));
    }
    return p;
}

PolyX laplacian_a0(const LatticeSpec& lat, int x) {
    PolyX p;
    GaussRat inv_a2(Rational(1) / (lat.spacing * lat.spacing));
    for (int j = 0; j < 3; ++j) {
        p += PolyX::symbol(Symbol(Species::A, 0, lat.shift(x, j, +1))).scaled(ExactCoef(inv_a2));
        p += PolyX::symbol(Symbol(Species::A, 0, lat.shift(x, j, -1))).scaled(ExactCoef(inv_a2));
    }
    p -= PolyX::symbol(Symbol(Species::A, 0, x)).scaled(ExactCoef(inv_a2 * GaussRat(Rational(6))));
    return p;
}

PolyX expected_gauss(const LatticeSpec& lat, int x) {
    // div pi - e rho
    PolyX p = backward_div_pi(lat, x);
    p -= bilinear<ExactCoef>(gamma_q(0), x, x, CoefOps<ExactCoef>::coupling(GaussRat(kE)));
    return p;
}

PolyX expected_phi(const LatticeSpec& lat, int x) {
    return -backward_div_pi(lat, x) - laplacian_a0(lat, x);
}

// gamma2 = gauss + i e chi1 psi - i e psibar chi2
PolyX expected_gamma2(const LatticeSpec& lat, const ConstraintSet<ExactCoef>& prim, int x) {
    const int N = lat.sites();
    const auto* chi1 = prim.find("chi1");
    const auto* chi2 = prim.find("chi2");
    PolyX p = expected_gauss(lat, x);
    ExactCoef ie = CoefOps<ExactCoef>::coupling(GaussRat(Rational(0), kE));
    for (int l = 0; l < 4; ++l) {
        p += (chi1->members[l * N + x] * PolyX::symbol(Symbol(Species::Psi, l, x))).scaled(ie);
        p -= (PolyX::symbol(Symbol(Species::PsiBar, l, x)) * chi2->members[l * N + x]).scaled(ie);
    }
    return p;
}

PolyX random_poly(std::mt19937& rng, const LatticeSpec& lat, Parity want, int deg_max = 2) {
    std::vector<Symbol> pool;
    for (int x = 0; x < lat.sites(); ++x) {
        for (int c = 0; c < 4; ++c) {
            pool.push_back(Symbol(Species::A, c, x));
            pool.push_back(Symbol(Species::PiEm, c, x));
            pool.push_back(Symbol(Species::Psi, c, x));
            pool.push_back(Symbol(Species::PiPsi, c, x));
            pool.push_back(Symbol(Species::PsiBar, c, x));
            pool.push_back(Symbol(Species::PiPsiBar, c, x));
        }
    }
    std::uniform_int_distribution<int> nsym(0, deg_max), pick(0, int(pool.size()) - 1),
        coef(-2, 2);
    PolyX p;
    int guard = 0;
    while (p.is_zero() && guard++ < 200) {
        PolyX cand;
        for (int t = 0; t < 3; ++t) {
            std::vector<uint32_t> mono;
            int odd = 0;
            for (int k = 0; k < nsym(rng); ++k) {
                Symbol s = pool[pick(rng)];
                if (s.odd()) ++odd;
                mono.push_back(s.id);
            }
            if ((want == Parity::Odd) != (odd % 2 == 1)) continue;
            long long re = coef(rng), im = coef(rng);
            if (re == 0 && im == 0) re = 1;
            cand.add_raw(mono, ExactCoef(GaussRat(Rational(re), Rational(im))));
        }
        if (cand.parity() != Parity::Mixed) p = cand;
    }
    return p;
}

struct Fixture {
    LatticeSpec lat;
    QedSystem<ExactCoef> sys;
    ConsistencyOutcome<ExactCoef> no_gauge;
    ConsistencyOutcome<ExactCoef> gauged;
    ConstraintSet<ExactCoef> basis;

    explicit Fixture(int n)
        : lat(n, Rational(1)),
          sys(build_qed_system<ExactCoef>(lat, kE, kM)),
          no_gauge(run_consistency(sys, false)),
          gauged(run_consistency(sys, true)),
          basis(standard_coulomb_basis(lat, gauged)) {}
};

Fixture& fx() {
    static Fixture f(2);
    return f;
}

} // namespace

TEST_CASE("consistency closes with exactly one secondary family") {
    auto& f = fx();
    REQUIRE(f.no_gauge.failures.empty());
    CHECK(f.no_gauge.closed);
    REQUIRE(f.no_gauge.tower.families.size() == 4);
    CHECK(f.no_gauge.tower.families[3].name == "sec_gamma1");

    const int N = f.lat.sites();
    for (int x = 0; x < N; ++x) {
        CHECK((f.no_gauge.tower.families[3].members[x] - expected_gauss(f.lat, x)).is_zero());
    }
}

TEST_CASE("multiplier solutions carry the expected structure") {
    auto& f = fx();
    const auto* u1 = f.no_gauge.solution(Species::MultU1);
    const auto* u2 = f.no_gauge.solution(Species::MultU2);
    REQUIRE(u1 != nullptr);
    REQUIRE(u2 != nullptr);

    const int N = f.lat.sites();
    // u1_l(x) contains -i e A_0(x) psi_l(x) and -i m (gamma^0 psi)_l(x)
    for (int l = 0; l < 4; ++l) {
        const PolyX& v = u1->values[l * N + 0];
        Mono a0psi{Symbol(Species::A, 0, 0).id, Symbol(Species::Psi, l, 0).id};
        std::sort(a0psi.begin(), a0psi.end());
        CHECK(v.coefficient(a0psi) ==
              CoefOps<ExactCoef>::coupling(GaussRat(Rational(0), -kE)));
        // mass term: -i m gamma^0_{ll} psi_l (gamma^0 diagonal)
        ExactCoef mass = v.coefficient({Symbol(Species::Psi, l, 0).id});
        GaussRat expect = GaussRat(Rational(0), -kM) * gamma_q(0)[l][l];
        CHECK(mass == ExactCoef(expect));
    }
    // u2 is the conjugate-side restriction: +i e A_0 psibar and +i m psibar gamma^0
    for (int l = 0; l < 4; ++l) {
        const PolyX& v = u2->values[l * N + 0];
        Mono a0psb{Symbol(Species::A, 0, 0).id, Symbol(Species::PsiBar, l, 0).id};
        std::sort(a0psb.begin(), a0psb.end());
        CHECK(v.coefficient(a0psb) ==
              CoefOps<ExactCoef>::coupling(GaussRat(Rational(0), kE)));
    }
}

TEST_CASE("Coulomb condition adds exactly the A0 constraint") {
    auto& f = fx();
    REQUIRE(f.gauged.failures.empty());
    CHECK(f.gauged.closed);
    REQUIRE(f.gauged.tower.families.size() == 6);
    const auto* phi = f.gauged.tower.find("sec_chi");
    REQUIRE(phi != nullptr);
    const int N = f.lat.sites();
    for (int x = 0; x < N; ++x)
        CHECK((phi->members[x] - expected_phi(f.lat, x)).is_zero());

    // gauge multiplier: harmonic, so the particular solution vanishes and the
    // constant mode stays free
    const auto* ug = f.gauged.solution(Species::MultGauge);
    REQUIRE(ug != nullptr);
    CHECK(ug->modulo_constant);
    for (auto& v : ug->values) CHECK(v.is_zero());

    // u0 obeys the Poisson equation: laplacian u0 = e * div J at every site
    const auto* u0 = f.gauged.solution(Species::MultU0);
    REQUIRE(u0 != nullptr);
    GaussRat inv_a2(Rational(1) / (f.lat.spacing * f.lat.spacing));
    for (int x = 0; x < N; ++x) {
        PolyX lap;
        for (int ax = 0; ax < 3; ++ax) {
            lap += u0->values[f.lat.shift(x, ax, +1)].scaled(ExactCoef(inv_a2));
            lap += u0->values[f.lat.shift(x, ax, -1)].scaled(ExactCoef(inv_a2));
        }
        lap -= u0->values[x].scaled(ExactCoef(inv_a2 * GaussRat(Rational(6))));
        PolyX rhs;
        GaussRat inv_a(Rational(1) / f.lat.spacing);
        for (int j = 1; j <= 3; ++j) {
            rhs += split_current<ExactCoef>(f.lat, kE, j, x).scaled(ExactCoef(inv_a));
            rhs -= split_current<ExactCoef>(f.lat, kE, j, f.lat.shift(x, j - 1, -1))
                       .scaled(ExactCoef(inv_a));
        }
        CHECK((lap - rhs).is_zero());
    }
}

TEST_CASE("classification finds the improved Gauss family") {
    auto& f = fx();
    auto cls = classify(f.lat, f.no_gauge.tower);
    CHECK(cls.first_class_families == 2);
    CHECK(cls.set.find("gamma1")->cls == ConstraintClass::First);
    CHECK(cls.set.find("chi1")->cls == ConstraintClass::Second);
    CHECK(cls.set.find("chi2")->cls == ConstraintClass::Second);
    CHECK(cls.set.find("sec_gamma1")->cls == ConstraintClass::Second);

    // the textbook combination gamma2 weakly commutes with everything
    SurfaceReducer<ExactCoef> red(f.lat, f.no_gauge.tower);
    auto span = red.reduced_span();
    PolyX g2 = expected_gamma2(f.lat, f.no_gauge.tower, 0);
    const int N = f.lat.sites();
    for (auto& fam : f.no_gauge.tower.families)
        for (int c = 0; c < fam.components; ++c)
            for (int x = 0; x < N; ++x) {
                PolyX b = gpb(g2, fam.members[c * N + x], f.lat);
                CHECK(weakly_zero(b, red, span));
            }
}

TEST_CASE("classification: single pi^0 family is first class") {
    LatticeSpec lat(2, Rational(1));
    ConstraintSet<ExactCoef> set;
    ConstraintFamily<ExactCoef> g1{"gamma1", 1, Parity::Even, {}, ConstraintClass::Unknown};
    for (int x = 0; x < lat.sites(); ++x)
        g1.members.push_back(PolyX::symbol(Symbol(Species::PiEm, 0, x)));
    set.families = {g1};
    auto cls = classify(lat, set);
    CHECK(cls.first_class_families == 1);
    CHECK(cls.set.families[0].cls == ConstraintClass::First);
}

TEST_CASE("classification is stable under invertible recombination") {
    auto& f = fx();
    const int N = f.lat.sites();
    ConstraintSet<ExactCoef> mixed = f.no_gauge.tower;
    // chi1' = chi1 + 2 chi2 (componentwise), gauss' = gauss + 3 gamma1
    for (int l = 0; l < 4; ++l)
        for (int x = 0; x < N; ++x)
            mixed.families[0].members[l * N + x] +=
                mixed.families[1].members[l * N + x].scaled(ec(2));
    for (int x = 0; x < N; ++x)
        mixed.families[3].members[x] += mixed.families[2].members[x].scaled(ec(3));
    auto cls = classify(f.lat, mixed);
    CHECK(cls.first_class_families == 2);
}

TEST_CASE("gauge-fixed set is fully second class and pairs as expected") {
    auto& f = fx();
    auto cls = classify(f.lat, f.gauged.tower);
    CHECK(cls.first_class_families == 0);

    REQUIRE(f.basis.families.size() == 6);
    CHECK(f.basis.families[0].name == "chi1");
    CHECK(f.basis.families[2].name == "chi3");
    REQUIRE(f.basis.pairs.size() == 3);
    auto has_pair = [&](const std::string& a, const std::string& b) {
        for (auto [p, q] : f.basis.pairs) {
            if (f.basis.families[p].name == a && f.basis.families[q].name == b) return true;
            if (f.basis.families[p].name == b && f.basis.families[q].name == a) return true;
        }
        return false;
    };
    CHECK(has_pair("chi1", "chi2"));
    CHECK(has_pair("chi3", "chi4"));
    CHECK(has_pair("chi5", "chi6"));

    // chi3 is the improved Gauss family
    const int N = f.lat.sites();
    for (int x = 0; x < N; ++x)
        CHECK((f.basis.families[2].members[x] - expected_gamma2(f.lat, f.gauged.tower, x))
                  .is_zero());
    // chi6 has no fermionic-free div-pi part: - e rho-ish + laplacian A0 only
    for (auto id : f.basis.families[5].members[0].support()) {
        Symbol s;
        s.id = id;
        CHECK(s.species() != Species::PiEm);
    }
}

TEST_CASE("Dirac bracket annihilates every constraint") {
    auto& f = fx();
    const int N = f.lat.sites();
    DiracBracket<ExactCoef> db(f.lat, f.basis);
    SurfaceReducer<ExactCoef> red(f.lat, f.basis);

    std::mt19937 rng(7);
    std::vector<PolyX> tries;
    for (int t = 0; t < 6; ++t)
        tries.push_back(random_poly(rng, f.lat, t % 2 ? Parity::Odd : Parity::Even));

    for (auto& F : tries) {
        for (int fi = 0; fi < 6; ++fi) {
            const auto& fam = f.basis.families[fi];
            bool project = fam.components == 1; // scalar pairs carry the zero mode
            for (int c = 0; c < fam.components; ++c) {
                for (int y : {0, N - 1}) {
                    PolyX target = fam.members[c * N + y];
                    if (project) {
                        PolyX mean;
                        for (int z = 0; z < N; ++z) mean += fam.members[c * N + z];
                        target -= mean.scaled(ExactCoef(GaussRat(Rational(1, N))));
                    }
                    PolyX b = db.bracket(F, target);
                    PolyX r = red.substitute(b);
                    CHECK(r.is_zero());
                }
            }
        }
    }
}

TEST_CASE("transverse commutator matches the lattice projector mode by mode") {
    auto& f = fx();
    DiracBracket<ExactCoef> db(f.lat, f.basis);
    auto table = transverse_commutator_table(db);

    const int n = f.lat.n;
    const int N = f.lat.sites();
    const double a = f.lat.spacing_d();
    // A_i lives on links; the transform is phase-aligned to link midpoints,
    // e^{+-i pi (m_i - m_j)/n} on the (i,j) entry. Both orientations are
    // tried; one must reproduce the real transverse projector.
    double best = 1e100;
    for (int sgn : {+1, -1}) {
        double max_res = 0;
        for (int k = 1; k < N; ++k) {
            auto kc = f.lat.coords(k);
            std::array<double, 3> khat{};
            double k2 = 0;
            for (int i = 0; i < 3; ++i) {
                khat[i] = lattice_khat(f.lat, kc[i]);
                k2 += khat[i] * khat[i];
            }
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    std::complex<double> m{0, 0};
                    for (int r = 0; r < N; ++r) {
                        auto rc = f.lat.coords(r);
                        double ph = -2.0 * M_PI *
                                    (kc[0] * rc[0] + kc[1] * rc[1] + kc[2] * rc[2]) /
                                    double(n);
                        m += std::polar(1.0, ph) * table[i][j][r];
                    }
                    m *= std::pow(a, 3); // undo the bracket measure
                    std::complex<double> u =
                        std::polar(1.0, sgn * M_PI * (double(kc[i]) - double(kc[j])) / n);
                    double expect = (i == j ? 1.0 : 0.0) - khat[i] * khat[j] / k2;
                    max_res = std::max(max_res, std::abs(m * u - expect));
                }
        }
        best = std::min(best, max_res);
    }
    CHECK(best < 1e-12);
}

TEST_CASE("spinor sector of the Dirac bracket is the free-field one") {
    auto& f = fx();
    DiracBracket<ExactCoef> full(f.lat, f.basis);

    ConstraintSet<ExactCoef> only12;
    only12.families = {f.basis.families[0], f.basis.families[1]};
    only12.pairs = {{0, 1}};
    DiracBracket<ExactCoef> free_dirac(f.lat, only12);

    std::mt19937 rng(11);
    for (int t = 0; t < 8; ++t) {
        // spinor-only polynomials
        std::vector<Symbol> pool;
        for (int x = 0; x < f.lat.sites(); ++x)
            for (int c = 0; c < 4; ++c) {
                pool.push_back(Symbol(Species::Psi, c, x));
                pool.push_back(Symbol(Species::PiPsi, c, x));
                pool.push_back(Symbol(Species::PsiBar, c, x));
                pool.push_back(Symbol(Species::PiPsiBar, c, x));
            }
        std::uniform_int_distribution<int> pick(0, int(pool.size()) - 1), coef(-2, 2);
        auto mk = [&](Parity want) {
            PolyX p;
            while (p.is_zero()) {
                std::vector<uint32_t> mono;
                int count = (want == Parity::Odd) ? 1 : 2;
                for (int k = 0; k < count; ++k) mono.push_back(pool[pick(rng)].id);
                long long re = coef(rng);
                if (re == 0) re = 1;
                PolyX cand;
                cand.add_raw(mono, ec(re));
                p = cand;
            }
            return p;
        };
        PolyX F = mk(t % 2 ? Parity::Odd : Parity::Even);
        PolyX G = mk((t / 2) % 2 ? Parity::Odd : Parity::Even);
        CHECK((full.bracket(F, G) - free_dirac.bracket(F, G)).is_zero());
    }
}

TEST_CASE("equations of motion hold on the constraint surface") {
    auto& f = fx();
    DiracBracket<ExactCoef> db(f.lat, f.basis);
    auto rep = eom_check(f.sys, db);
    CHECK(rep.a_dot_matches);
    CHECK(rep.pi_dot_matches);
    CHECK(rep.h_self_bracket_zero);
}

TEST_CASE("free-limit equations of motion: A-dot equals pi-perp") {
    LatticeSpec lat(2, Rational(1));
    auto sys0 = build_qed_system<ExactCoef>(lat, Rational(0), kM);
    auto gauged = run_consistency(sys0, true);
    REQUIRE(gauged.closed);
    auto basis = standard_coulomb_basis(lat, gauged);
    DiracBracket<ExactCoef> db(lat, basis);
    // e = 0: the bracket [A_1, H] equals pi_perp plus constraint terms
    auto rep = eom_check(sys0, db);
    CHECK(rep.a_dot_matches);
    CHECK(rep.pi_dot_matches);
}

TEST_CASE("gauge action: invariances and the smeared generator") {
    auto& f = fx();
    const int N = f.lat.sites();

    std::mt19937 rng(23);
    std::uniform_int_distribution<int> mdist(1, 4), ndist(1, 3), fdist(-3, 3);
    GaugeFieldData gd;
    for (int x = 0; x < N; ++x) {
        long long m = mdist(rng), n = ndist(rng);
        // exact unit-modulus phase from a Pythagorean triple
        Rational re(m * m - n * n, m * m + n * n), im(2 * m * n, m * m + n * n);
        gd.phase.push_back(GaussRat(re, im));
        gd.shift.push_back(Rational(fdist(rng), 2));
    }

    const auto& chi3 = f.basis.families[2]; // improved Gauss family
    auto rep = gauge_action(f.sys, chi3, gd);
    CHECK(rep.pi_invariant);
    CHECK(rep.current_invariant);
    CHECK(rep.identity_at_zero);
    CHECK(rep.infinitesimal_residual == 0.0);
}

TEST_CASE("pi_perp has trivial brackets with spinor variables") {
    auto& f = fx();
    DiracBracket<ExactCoef> db(f.lat, f.basis);

    PolyX F1 = PolyX::symbol(Symbol(Species::PsiBar, 1, 3)) *
               PolyX::symbol(Symbol(Species::PiPsiBar, 2, 3));
    PolyX F2 = PolyX::symbol(Symbol(Species::PiPsi, 0, 1)) *
               PolyX::symbol(Symbol(Species::Psi, 0, 1));
    PolyX F3 = PolyX::symbol(Symbol(Species::Psi, 2, 4));
    for (auto* F : {&F1, &F2, &F3})
        for (int j = 1; j <= 3; ++j)
            for (int y : {0, 5})
                CHECK(db.bracket(*F, pi_perp<ExactCoef>(f.lat, j, y)).is_zero());

    // electromagnetic coordinates and momenta commute among themselves
    PolyX A1 = PolyX::symbol(Symbol(Species::A, 1, 0));
    PolyX A2 = PolyX::symbol(Symbol(Species::A, 2, 3));
    PolyX P1 = PolyX::symbol(Symbol(Species::PiEm, 1, 0));
    PolyX P3 = PolyX::symbol(Symbol(Species::PiEm, 3, 6));
    CHECK(db.bracket(A1, A2).is_zero());
    CHECK(db.bracket(P1, P3).is_zero());

    // divergence of pi_perp vanishes on the constraint surface
    SurfaceReducer<ExactCoef> red(f.lat, f.basis);
    auto span = red.reduced_span();
    GaussRat inv_a(Rational(1) / f.lat.spacing);
    PolyX div;
    for (int j = 1; j <= 3; ++j) {
        div += pi_perp<ExactCoef>(f.lat, j, 0).scaled(ExactCoef(inv_a));
        div -= pi_perp<ExactCoef>(f.lat, j, f.lat.shift(0, j - 1, -1)).scaled(ExactCoef(inv_a));
    }
    CHECK(weakly_zero(div, red, span));
}

TEST_CASE("spacing different from one flows through the whole pipeline") {
    LatticeSpec lat(2, Rational(1, 2));
    auto sys = build_qed_system<ExactCoef>(lat, kE, kM);
    auto gauged = run_consistency(sys, true);
    REQUIRE(gauged.closed);
    auto basis = standard_coulomb_basis(lat, gauged);
    DiracBracket<ExactCoef> db(lat, basis);
    SurfaceReducer<ExactCoef> red(lat, basis);

    // canonical value carries 1/a^3 = 8
    auto b = gpb(PolyX::symbol(Symbol(Species::A, 1, 0)),
                 PolyX::symbol(Symbol(Species::PiEm, 1, 0)), lat);
    CHECK(b.constant_part() == ExactCoef(GaussRat(Rational(8))));

    // annihilation still exact
    std::mt19937 rng(99);
    PolyX F = PolyX::symbol(Symbol(Species::A, 2, 1)) * PolyX::symbol(Symbol(Species::PiEm, 2, 1));
    const int N = lat.sites();
    for (int fi : {0, 2, 3}) {
        auto& fam = basis.families[fi];
        PolyX target = fam.members[0];
        if (fam.components == 1) {
            PolyX mean;
            for (int z = 0; z < N; ++z) mean += fam.members[z];
            target -= mean.scaled(ExactCoef(GaussRat(Rational(1, N))));
        }
        CHECK(red.substitute(db.bracket(F, target)).is_zero());
    }
}

TEST_CASE("Dirac bracket: graded antisymmetry and either-slot annihilation") {
    auto& f = fx();
    const int N = f.lat.sites();
    DiracBracket<ExactCoef> db(f.lat, f.basis);
    SurfaceReducer<ExactCoef> red(f.lat, f.basis);

    std::mt19937 rng(31);
    for (int t = 0; t < 6; ++t) {
        Parity pf = (t % 2) ? Parity::Odd : Parity::Even;
        Parity pg = (t % 3) ? Parity::Odd : Parity::Even;
        PolyX F = random_poly(rng, f.lat, pf);
        PolyX G = random_poly(rng, f.lat, pg);
        PolyX lhs = db.bracket(F, G);
        PolyX rhs = db.bracket(G, F);
        if (!(pf == Parity::Odd && pg == Parity::Odd)) rhs = -rhs;
        CHECK((lhs - rhs).is_zero());
    }

    // constraint in the left slot
    std::mt19937 rng2(32);
    PolyX F = random_poly(rng2, f.lat, Parity::Even);
    for (int fi : {1, 3, 5}) {
        const auto& fam = f.basis.families[fi];
        PolyX target = fam.members[0];
        if (fam.components == 1) {
            PolyX mean;
            for (int z = 0; z < N; ++z) mean += fam.members[z];
            target -= mean.scaled(ExactCoef(GaussRat(Rational(1, N))));
        }
        CHECK(red.substitute(db.bracket(target, F)).is_zero());
    }
}
