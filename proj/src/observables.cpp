#include "cqed/observables.hpp"

#include <vector>

namespace cqed {

double compton_spin_sum(const ComptonKinematics& kin, double e) {
    Vec3 kin_v{kin.k.px, kin.k.py, kin.k.pz};
    Vec3 kout_v{kin.k_prime.px, kin.k_prime.py, kin.k_prime.pz};
    double sum = 0;
    for (int sigma : {+1, -1})
        for (int sigma_p : {+1, -1})
            for (int hin = 0; hin < 2; ++hin)
                for (int hout = 0; hout < 2; ++hout) {
                    PolarizationState pin(kin_v, hin == 0 ? 1.0 : 0.0, hin == 0 ? 0.0 : 1.0);
                    PolarizationState pout(kout_v, hout == 0 ? 1.0 : 0.0, hout == 0 ? 0.0 : 1.0);
                    cplx m = compton_final(kin, sigma, sigma_p, pin, pout, e).value;
                    sum += std::norm(m);
                }
    return sum / 4.0; // average over initial spin and helicity
}

double eemumu_spin_sum(const PairKinematics& kin, double e) {
    double sum = 0;
    for (int s1 : {+1, -1})
        for (int s2 : {+1, -1})
            for (int l1 : {+1, -1})
                for (int l2 : {+1, -1})
                    sum += std::norm(eemumu_covariant(kin, s1, s2, l1, l2, e).value);
    return sum / 4.0;
}

double spin_sum(ScatterProcess proc, const ProcessParams& par, double sqrt_s, double cos_theta,
                double phi) {
    if (proc == ScatterProcess::Compton) {
        auto kin = compton_cm(sqrt_s, cos_theta, phi, par.m_e);
        return compton_spin_sum(kin, par.e);
    }
    auto kin = eemumu_cm(sqrt_s, cos_theta, phi, par.m_e, par.m_mu);
    return eemumu_spin_sum(kin, par.e);
}

double trace_oracle_compton(const ComptonKinematics& kin, double e) {
    Vec3 kin_v{kin.k.px, kin.k.py, kin.k.pz};
    Vec3 kout_v{kin.k_prime.px, kin.k_prime.py, kin.k_prime.pz};
    Mat3 Pin = transverse_projector(kin_v);
    Mat3 Pout = transverse_projector(kout_v);

    double two_pk = 2 * kin.p.dot(kin.k);
    double two_pkp = 2 * kin.p.dot(kin.k_prime);
    Mat4 mid_s = slash(kin.p) + slash(kin.k) + Mat4::identity() * cplx(kin.m);
    Mat4 mid_u = slash(kin.p) - slash(kin.k_prime) + Mat4::identity() * cplx(kin.m);
    Mat4 pin_m = slash(kin.p) + Mat4::identity() * cplx(kin.m);
    Mat4 pout_m = slash(kin.p_prime) + Mat4::identity() * cplx(kin.m);

    auto gamma_sp = [&](int i) { return gammas()[i + 1]; };
    auto Gamma = [&](int i, int j) {
        return gamma_sp(i) * mid_s * gamma_sp(j) * (1.0 / two_pk) +
               gamma_sp(j) * mid_u * gamma_sp(i) * (1.0 / (-two_pkp));
    };

    cplx sum = 0;
    const Mat4 g0 = gammas()[0];
    for (int i = 0; i < 3; ++i)
        for (int ip = 0; ip < 3; ++ip) {
            for (int j = 0; j < 3; ++j)
                for (int jp = 0; jp < 3; ++jp) {
                    double w = Pout[i][ip] * Pin[j][jp];
                    if (w == 0.0) continue;
                    Mat4 G = Gamma(i, j);
                    Mat4 Gbar = g0 * Gamma(ip, jp).adjoint() * g0;
                    sum += w * (pout_m * G * pin_m * Gbar).trace();
                }
        }
    double e4 = e * e * e * e;
    return e4 * sum.real() / 4.0;
}

double trace_oracle_eemumu(const PairKinematics& kin, double e) {
    FourMomentum q = kin.k + kin.k_prime;
    double q2 = q.mass2();
    Mat4 pe = slash(kin.p) + Mat4::identity() * cplx(kin.m_e);
    Mat4 pe_bar = slash(kin.p_prime) - Mat4::identity() * cplx(kin.m_e);
    Mat4 mu = slash(kin.k) + Mat4::identity() * cplx(kin.m_mu);
    Mat4 mu_bar = slash(kin.k_prime) - Mat4::identity() * cplx(kin.m_mu);

    cplx sum = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double eta = metric(a, a) * metric(b, b);
            cplx l1 = (gammas()[a] * pe * gammas()[b] * pe_bar).trace();
            cplx l2 = (gammas()[a] * mu_bar * gammas()[b] * mu).trace();
            sum += eta * l1 * l2;
        }
    double e4 = e * e * e * e;
    return e4 * sum.real() / (q2 * q2) / 4.0;
}

CrossSectionPoint dsigma_domega(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                                double cos_theta) {
    CrossSectionPoint pt;
    pt.sqrt_s = sqrt_s;
    pt.cos_theta = cos_theta;
    double s = sqrt_s * sqrt_s;
    double msq, pf, pi;
    if (proc == ScatterProcess::Compton) {
        pt.process = "compton";
        auto kin = compton_cm(sqrt_s, cos_theta, 0.0, par.m_e);
        msq = compton_spin_sum(kin, par.e);
        pf = pi = (s - par.m_e * par.m_e) / (2 * sqrt_s);
    } else {
        pt.process = "eemumu";
        if (s < 4 * par.m_mu * par.m_mu) throw KinematicsError("below the muon pair threshold");
        auto kin = eemumu_cm(sqrt_s, cos_theta, 0.0, par.m_e, par.m_mu);
        msq = eemumu_spin_sum(kin, par.e);
        pi = std::sqrt(s / 4 - par.m_e * par.m_e);
        pf = std::sqrt(s / 4 - par.m_mu * par.m_mu);
    }
    pt.value = msq * pf / (64 * M_PI * M_PI * s * pi);
    return pt;
}

namespace {

struct McAccumulator {
    double sum = 0, sum2 = 0;
};

// Fixed chunking keeps the floating-point reduction order independent of the
// thread count: every chunk is summed in index order and chunk partials are
// combined sequentially.
constexpr std::uint64_t kChunk = 4096;

template <class F>
TotalResult mc_integrate(F&& integrand, std::uint64_t n_samples, bool parallel) {
    const std::uint64_t nchunks = (n_samples + kChunk - 1) / kChunk;
    std::vector<McAccumulator> acc(nchunks);

#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t c = 0; c < std::int64_t(nchunks); ++c) {
        McAccumulator a;
        std::uint64_t lo = std::uint64_t(c) * kChunk;
        std::uint64_t hi = std::min(n_samples, lo + kChunk);
        for (std::uint64_t i = lo; i < hi; ++i) {
            double f = integrand(i);
            a.sum += f;
            a.sum2 += f * f;
        }
        acc[c] = a;
    }
    double sum = 0, sum2 = 0;
    for (auto& a : acc) {
        sum += a.sum;
        sum2 += a.sum2;
    }
    double n = double(n_samples);
    double mean = sum / n;
    double var = std::max(0.0, sum2 / n - mean * mean);
    TotalResult r;
    r.sigma = mean;
    r.mc_error = std::sqrt(var / n);
    return r;
}

TotalResult total_sigma_impl(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                             std::uint64_t n_samples, std::uint64_t seed, bool parallel) {
    if (n_samples < 10000) throw std::invalid_argument("total_sigma needs at least 1e4 samples");
    double s = sqrt_s * sqrt_s;
    if (proc == ScatterProcess::EeToMuMu && s < 4 * par.m_mu * par.m_mu)
        throw KinematicsError("below the muon pair threshold");

    // stratified over cos(theta): sample i lands in stratum i mod NS
    constexpr std::uint64_t NS = 64;
    auto integrand = [&](std::uint64_t i) {
        std::uint64_t stratum = i % NS;
        double u = uniform01(seed, i, 0);
        double cos_theta = -1.0 + 2.0 * (double(stratum) + u) / double(NS);
        double phi = 2.0 * M_PI * uniform01(seed, i, 1);
        auto pt_proc = proc;
        double msq, pf, pi;
        if (pt_proc == ScatterProcess::Compton) {
            auto kin = compton_cm(sqrt_s, cos_theta, phi, par.m_e);
            msq = compton_spin_sum(kin, par.e);
            pf = pi = (s - par.m_e * par.m_e) / (2 * sqrt_s);
        } else {
            auto kin = eemumu_cm(sqrt_s, cos_theta, phi, par.m_e, par.m_mu);
            msq = eemumu_spin_sum(kin, par.e);
            pi = std::sqrt(s / 4 - par.m_e * par.m_e);
            pf = std::sqrt(s / 4 - par.m_mu * par.m_mu);
        }
        double dsig = msq * pf / (64 * M_PI * M_PI * s * pi);
        return dsig * 4.0 * M_PI; // volume of dOmega
    };
    return mc_integrate(integrand, n_samples, parallel);
}

} // namespace

TotalResult total_sigma(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                        std::uint64_t n_samples, std::uint64_t seed) {
    return total_sigma_impl(proc, par, sqrt_s, n_samples, seed, true);
}

TotalResult total_sigma_serial(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                               std::uint64_t n_samples, std::uint64_t seed) {
    return total_sigma_impl(proc, par, sqrt_s, n_samples, seed, false);
}

} // namespace cqed
