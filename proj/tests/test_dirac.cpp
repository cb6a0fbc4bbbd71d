#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cqed/dirac.hpp"

using namespace cqed;

namespace {

FourMomentum random_onshell(std::mt19937& rng, double m, double pmax = 2.0) {
    std::uniform_real_distribution<double> d(-pmax, pmax);
    double px = d(rng), py = d(rng), pz = d(rng);
    double e = std::sqrt(m * m + px * px + py * py + pz * pz);
    return {e, px, py, pz};
}

} // namespace

TEST_CASE("Clifford relations") {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            Mat4 anti = gammas()[a] * gammas()[b] + gammas()[b] * gammas()[a];
            Mat4 expect = Mat4::identity() * cplx(2 * metric(a, b));
            CHECK((anti - expect).max_abs() < 1e-14);
        }
    // hermiticity pattern
    CHECK((gammas()[0].adjoint() - gammas()[0]).max_abs() < 1e-14);
    for (int i = 1; i < 4; ++i)
        CHECK((gammas()[i].adjoint() + gammas()[i]).max_abs() < 1e-14);
}

TEST_CASE("slash algebra") {
    FourMomentum t{1, 0, 0, 0};
    CHECK((slash(t) - gammas()[0]).max_abs() < 1e-14);

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int trial = 0; trial < 50; ++trial) {
        FourMomentum p{d(rng), d(rng), d(rng), d(rng)};
        Mat4 sq = slash(p) * slash(p);
        CHECK((sq - Mat4::identity() * cplx(p.mass2())).max_abs() < 1e-12);
    }
}

TEST_CASE("rest-frame spinors") {
    double m = 0.7;
    FourMomentum rest{m, 0, 0, 0};
    auto up = u_spinor(rest, +1, m);
    CHECK(std::abs(up.c[0] - std::sqrt(2 * m)) < 1e-14);
    CHECK(std::abs(up.c[1]) < 1e-14);
    CHECK(std::abs(up.c[2]) < 1e-14);
    CHECK(std::abs(up.c[3]) < 1e-14);

    // sum_sigma u u^dag = m diag(2,2,0,0) at rest
    Mat4 acc;
    for (int s : {+1, -1}) {
        auto u = u_spinor(rest, s, m);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) acc(i, j) += u.c[i] * std::conj(u.c[j]);
    }
    Mat4 expect;
    expect(0, 0) = 2 * m;
    expect(1, 1) = 2 * m;
    CHECK((acc - expect).max_abs() < 1e-13);

    // ubar u = 2m, vbar v = -2m
    CHECK(std::abs(row_col(adjoint(up), up.c) - cplx(2 * m)) < 1e-13);
    auto vp = v_spinor(rest, +1, m);
    CHECK(std::abs(row_col(adjoint(vp), vp.c) - cplx(-2 * m)) < 1e-13);
}

TEST_CASE("on-shell identities for boosted momenta") {
    std::mt19937 rng(17);
    double m = 0.105658;
    for (int trial = 0; trial < 300; ++trial) {
        FourMomentum p = random_onshell(rng, m);
        for (int s : {+1, -1}) {
            auto u = u_spinor(p, s, m);
            auto v = v_spinor(p, s, m);
            // Dirac equations
            Mat4 dir_u = slash(p) - Mat4::identity() * cplx(m);
            Mat4 dir_v = slash(p) + Mat4::identity() * cplx(m);
            auto ru = mat_vec(dir_u, u.c);
            auto rv = mat_vec(dir_v, v.c);
            double nu = 0, nv = 0, su = 0, sv = 0;
            for (int i = 0; i < 4; ++i) {
                nu += std::norm(ru[i]);
                nv += std::norm(rv[i]);
                su += std::norm(u.c[i]);
                sv += std::norm(v.c[i]);
            }
            CHECK(std::sqrt(nu) < 1e-12 * std::sqrt(su));
            CHECK(std::sqrt(nv) < 1e-12 * std::sqrt(sv));
            // normalization u^dag u = 2E
            CHECK(std::abs(su - 2 * p.e) < 1e-12 * p.e);
            // current reality: ubar gamma^a u real
            for (int a = 0; a < 4; ++a) {
                cplx cur = row_mat_col(adjoint(u), gammas()[a], u.c);
                CHECK(std::abs(cur.imag()) < 1e-11 * (std::abs(cur) + 1));
            }
            // ubar gamma^0 u = 2E
            cplx g0 = row_mat_col(adjoint(u), gammas()[0], u.c);
            CHECK(std::abs(g0 - cplx(2 * p.e)) < 1e-11 * p.e);
        }
        // completeness: sum_s u ubar = pslash + m; sum_s v vbar = pslash - m
        Mat4 uu, vv;
        for (int s : {+1, -1}) {
            auto u = u_spinor(p, s, m);
            auto v = v_spinor(p, s, m);
            auto ub = adjoint(u);
            auto vb = adjoint(v);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    uu(i, j) += u.c[i] * ub[j];
                    vv(i, j) += v.c[i] * vb[j];
                }
        }
        CHECK((uu - (slash(p) + Mat4::identity() * cplx(m))).max_abs() < 1e-11);
        CHECK((vv - (slash(p) - Mat4::identity() * cplx(m))).max_abs() < 1e-11);
    }
}

TEST_CASE("spinor construction rejects bad input") {
    double m = 0.5;
    FourMomentum off{1.0, 0.9, 0, 0}; // m^2 = 0.19 != 0.25
    CHECK_THROWS_AS(u_spinor(off, +1, m), KinematicsError);
    FourMomentum null{1, 0, 0, 1};
    CHECK_THROWS_AS(u_spinor(null, +1, 0.0), KinematicsError);
}

TEST_CASE("trace identities") {
    CHECK_THROWS_AS(trace_product({}), std::invalid_argument);
    for (int a = 0; a < 4; ++a) {
        CHECK(std::abs(trace_product({gammas()[a]})) < 1e-14);
        for (int b = 0; b < 4; ++b) {
            cplx t = trace_product({gammas()[a], gammas()[b]});
            CHECK(std::abs(t - cplx(4 * metric(a, b))) < 1e-14);
            for (int c = 0; c < 4; ++c)
                CHECK(std::abs(trace_product({gammas()[a], gammas()[b], gammas()[c]})) < 1e-14);
        }
    }
}
