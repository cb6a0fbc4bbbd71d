#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cqed/observables.hpp"

using namespace cqed;

namespace {

ProcessParams params() { return ProcessParams{}; }

std::mt19937& rng() {
    static std::mt19937 r(424242);
    return r;
}
double uni(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng());
}

// analytic total cross section for the pair process with massless electrons:
// sigma = (4 pi alpha^2 / 3 s) sqrt(1-x) (1 + x/2), x = 4 m_mu^2 / s
double analytic_pair_total(double sqrt_s, const ProcessParams& par) {
    double s = sqrt_s * sqrt_s;
    double x = 4 * par.m_mu * par.m_mu / s;
    double alpha = alpha_of(par);
    return 4 * M_PI * alpha * alpha / (3 * s) * std::sqrt(1 - x) * (1 + x / 2);
}

// Klein-Nishina invariant |M|^2 (spin/polarization averaged-summed), the
// standard closed form in terms of p.k and p.k'
double kn_formula(const ComptonKinematics& kin, double e) {
    double pk = kin.p.dot(kin.k);
    double pkp = kin.p.dot(kin.k_prime);
    double m2 = kin.m * kin.m;
    double inv = 1.0 / pk - 1.0 / pkp;
    double v = pkp / pk + pk / pkp + 2 * m2 * inv + m2 * m2 * inv * inv;
    return 2 * e * e * e * e * v;
}

} // namespace

TEST_CASE("dual-path |M|^2: explicit spinors against traces") {
    auto par = params();
    for (int t = 0; t < 100; ++t) {
        double sqrt_s = par.m_e * uni(1.5, 30.0);
        auto kin = compton_cm(sqrt_s, uni(-0.95, 0.95), uni(0, 2 * M_PI), par.m_e);
        double a = compton_spin_sum(kin, par.e);
        double b = trace_oracle_compton(kin, par.e);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
        CHECK(a >= 0);
    }
    for (int t = 0; t < 100; ++t) {
        double sqrt_s = 2 * par.m_mu * uni(1.02, 10.0);
        auto kin = eemumu_cm(sqrt_s, uni(-0.95, 0.95), uni(0, 2 * M_PI), par.m_e, par.m_mu);
        double a = eemumu_spin_sum(kin, par.e);
        double b = trace_oracle_eemumu(kin, par.e);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
        CHECK(a >= 0);
    }
}

TEST_CASE("Compton oracle matches the closed Klein-Nishina form") {
    auto par = params();
    for (int t = 0; t < 50; ++t) {
        double sqrt_s = par.m_e * uni(1.2, 50.0);
        auto kin = compton_cm(sqrt_s, uni(-0.99, 0.99), uni(0, 2 * M_PI), par.m_e);
        double a = trace_oracle_compton(kin, par.e);
        double b = kn_formula(kin, par.e);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
    }
}

TEST_CASE("frame invariance of the summed pair amplitude") {
    auto par = params();
    auto cm = eemumu_cm(3 * par.m_mu, 0.37, 1.3, par.m_e, par.m_mu);
    double base = eemumu_spin_sum(cm, par.e);
    auto boosted = boosted_z(cm, 0.3);
    double moved = eemumu_spin_sum(boosted, par.e);
    CHECK(std::abs(base - moved) <= 1e-10 * base);
}

TEST_CASE("Thomson limit of the Compton cross section") {
    auto par = params();
    double m = par.m_e;
    double alpha = alpha_of(par);
    double omega_lab = 1e-3 * m;
    double s = m * m + 2 * m * omega_lab;
    double sqrt_s = std::sqrt(s);

    // dsigma/dOmega at theta = pi/2 tends to alpha^2/(2 m^2)
    auto pt = dsigma_domega(ScatterProcess::Compton, par, sqrt_s, 0.0);
    CHECK(std::abs(pt.value * m * m / (alpha * alpha) - 0.5) < 0.005);
    // forward limit: alpha^2/m^2
    auto fwd = dsigma_domega(ScatterProcess::Compton, par, sqrt_s, 0.999999);
    CHECK(std::abs(fwd.value * m * m / (alpha * alpha) - 1.0) < 0.005);

    // angular shape (1 + cos^2)/2 within half a percent
    for (double c : {-0.8, -0.3, 0.2, 0.6}) {
        auto p = dsigma_domega(ScatterProcess::Compton, par, sqrt_s, c);
        double shape = p.value * m * m / (alpha * alpha);
        CHECK(std::abs(shape - (1 + c * c) / 2) < 0.005);
    }

    // total: 8 pi alpha^2 / 3 m^2 within half a percent
    auto tot = total_sigma(ScatterProcess::Compton, par, sqrt_s, 200000, 11);
    double thomson = 8 * M_PI * alpha * alpha / (3 * m * m);
    CHECK(std::abs(tot.sigma - thomson) < 0.005 * thomson);
}

TEST_CASE("pair production total against the analytic form") {
    auto par = params();
    double sqrt_s = 3 * par.m_mu;
    auto mc = total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, 1000000, 99);
    double exact = analytic_pair_total(sqrt_s, par);
    CHECK(std::abs(mc.sigma - exact) < 3 * mc.mc_error + 1e-300);
    CHECK(std::abs(mc.sigma - exact) < 1e-3 * exact);

    // deterministic quadrature cross-check of the same total
    int nq = 2000;
    double acc = 0;
    for (int i = 0; i < nq; ++i) {
        double c = -1.0 + 2.0 * (i + 0.5) / nq;
        acc += dsigma_domega(ScatterProcess::EeToMuMu, par, sqrt_s, c).value;
    }
    acc *= 2.0 / nq * 2 * M_PI;
    CHECK(std::abs(acc - exact) < 1e-4 * exact);
}

TEST_CASE("high-energy pair shape approaches 1 + cos^2") {
    auto par = params();
    double sqrt_s = 2 * par.m_mu * 100; // s = 1e4 * 4 m_mu^2
    auto at = [&](double c) {
        auto kin = eemumu_cm(sqrt_s, c, 0.0, par.m_e, par.m_mu);
        return trace_oracle_eemumu(kin, par.e);
    };
    double e4 = std::pow(par.e, 4);
    for (double c : {-0.7, -0.2, 0.0, 0.5, 0.9}) {
        CHECK(std::abs(at(c) / e4 - (1 + c * c)) < 0.01 * (1 + c * c));
    }
}

TEST_CASE("threshold behavior") {
    auto par = params();
    CHECK_THROWS_AS(dsigma_domega(ScatterProcess::EeToMuMu, par, 1.9 * par.m_mu, 0.0),
                    KinematicsError);
    // at threshold the flux factor kills the rate and the shape is isotropic
    double thr = 2 * par.m_mu;
    auto kin0 = eemumu_cm(thr, 0.0, 0.0, par.m_e, par.m_mu);
    auto kin1 = eemumu_cm(thr, 0.9, 0.0, par.m_e, par.m_mu);
    double a = trace_oracle_eemumu(kin0, par.e);
    double b = trace_oracle_eemumu(kin1, par.e);
    CHECK(std::abs(a - b) <= 1e-10 * a);
    auto pt = dsigma_domega(ScatterProcess::EeToMuMu, par, thr, 0.3);
    CHECK(pt.value == 0.0); // |p_f| = 0 exactly
}

TEST_CASE("MC determinism and error scaling") {
    auto par = params();
    double sqrt_s = 3 * par.m_mu;
    auto a = total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, 50000, 7);
    auto b = total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, 50000, 7);
    CHECK(a.sigma == b.sigma); // bit-for-bit
    CHECK(a.mc_error == b.mc_error);

    auto c = total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, 100000, 7);
    double ratio = c.mc_error / a.mc_error;
    CHECK(std::abs(ratio - 1 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));

    CHECK_THROWS(total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, 100, 7));
}

TEST_CASE("pair angular distribution is forward-backward symmetric") {
    auto par = params();
    double sqrt_s = 3 * par.m_mu;
    for (double c : {0.1, 0.35, 0.6, 0.85}) {
        auto a = dsigma_domega(ScatterProcess::EeToMuMu, par, sqrt_s, c);
        auto b = dsigma_domega(ScatterProcess::EeToMuMu, par, sqrt_s, -c);
        CHECK(std::abs(a.value - b.value) <= 1e-10 * a.value);
    }
}
