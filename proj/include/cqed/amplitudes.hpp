#pragma once

#include <string>

#include "cqed/dirac.hpp"
#include "cqed/polarization.hpp"
#include "cqed/propagators.hpp"

namespace cqed {

struct FrameError : std::domain_error {
    explicit FrameError(const std::string& w) : std::domain_error(w) {}
};

struct ComptonKinematics {
    FourMomentum p, k, p_prime, k_prime; // e in, gamma in, e out, gamma out
    double m = 0;

    void validate() const {
        double rs = std::sqrt(std::max(1e-300, (p + k).mass2()));
        auto total = p + k - p_prime - k_prime;
        for (int a = 0; a < 4; ++a)
            if (std::abs(total[a]) > 1e-10 * rs)
                throw KinematicsError("Compton kinematics violate momentum conservation");
        if (!p.on_shell(m) || !p_prime.on_shell(m))
            throw KinematicsError("electron leg off shell");
        if (!k.on_shell(0) || !k_prime.on_shell(0)) throw KinematicsError("photon leg not null");
    }
};

// CM construction: photon along +z, outgoing photon at (theta, phi).
inline ComptonKinematics compton_cm(double sqrt_s, double cos_theta, double phi, double m) {
    double s = sqrt_s * sqrt_s;
    if (sqrt_s <= m) throw KinematicsError("Compton CM energy below the electron mass");
    double omega = (s - m * m) / (2 * sqrt_s);
    double Ee = (s + m * m) / (2 * sqrt_s);
    double st = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    ComptonKinematics kin;
    kin.m = m;
    kin.k = {omega, 0, 0, omega};
    kin.p = {Ee, 0, 0, -omega};
    kin.k_prime = {omega, omega * st * std::cos(phi), omega * st * std::sin(phi),
                   omega * cos_theta};
    kin.p_prime = {Ee, -kin.k_prime.px, -kin.k_prime.py, -kin.k_prime.pz};
    return kin;
}

struct PairKinematics {
    FourMomentum p, p_prime; // e- and e+ in
    FourMomentum k, k_prime; // mu- and mu+ out
    double m_e = 0, m_mu = 0;

    void validate() const {
        double rs = std::sqrt(std::max(1e-300, (p + p_prime).mass2()));
        auto total = p + p_prime - k - k_prime;
        for (int a = 0; a < 4; ++a)
            if (std::abs(total[a]) > 1e-10 * rs)
                throw KinematicsError("pair kinematics violate momentum conservation");
        if (!p.on_shell(m_e) || !p_prime.on_shell(m_e))
            throw KinematicsError("electron leg off shell");
        if (!k.on_shell(m_mu) || !k_prime.on_shell(m_mu))
            throw KinematicsError("muon leg off shell");
        if ((p + p_prime).mass2() < 4 * m_mu * m_mu - 1e-9 * rs * rs)
            throw KinematicsError("below the muon pair threshold");
    }
};

inline PairKinematics eemumu_cm(double sqrt_s, double cos_theta, double phi, double m_e,
                                double m_mu) {
    double s = sqrt_s * sqrt_s;
    if (s < 4 * m_mu * m_mu) throw KinematicsError("below the muon pair threshold");
    double pi = std::sqrt(std::max(0.0, s / 4 - m_e * m_e));
    double pf = std::sqrt(std::max(0.0, s / 4 - m_mu * m_mu));
    double st = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    PairKinematics kin;
    kin.m_e = m_e;
    kin.m_mu = m_mu;
    kin.p = {sqrt_s / 2, 0, 0, pi};
    kin.p_prime = {sqrt_s / 2, 0, 0, -pi};
    kin.k = {sqrt_s / 2, pf * st * std::cos(phi), pf * st * std::sin(phi), pf * cos_theta};
    kin.k_prime = {sqrt_s / 2, -kin.k.px, -kin.k.py, -kin.k.pz};
    return kin;
}

inline PairKinematics boosted_z(const PairKinematics& kin, double beta) {
    PairKinematics out = kin;
    out.p = boost_z(kin.p, beta);
    out.p_prime = boost_z(kin.p_prime, beta);
    out.k = boost_z(kin.k, beta);
    out.k_prime = boost_z(kin.k_prime, beta);
    return out;
}

struct AmplitudeResult {
    cplx value;          // iM with (2pi)^4 delta^4 stripped
    std::string process;
    std::string labels;
};

// Compton amplitude straight from the two propagator pieces.
cplx compton_pieces(const ComptonKinematics& kin, int sigma, int sigma_p,
                    const PolarizationState& pol_in, const PolarizationState& pol_out, double e,
                    double epsilon);

// Closed form with the propagators reduced to 2 p.k denominators.
AmplitudeResult compton_final(const ComptonKinematics& kin, int sigma, int sigma_p,
                              const PolarizationState& pol_in, const PolarizationState& pol_out,
                              double e);

// Transverse photon-exchange piece (frame dependent).
cplx eemumu_transverse(const PairKinematics& kin, int sigma, int sigma_p, int lambda,
                       int lambda_p, double e);

// Instantaneous Coulomb piece (frame dependent); carries 2 theta(0) = 1.
cplx eemumu_coulomb(const PairKinematics& kin, int sigma, int sigma_p, int lambda, int lambda_p,
                    double e);

// Covariant total.
AmplitudeResult eemumu_covariant(const PairKinematics& kin, int sigma, int sigma_p, int lambda,
                                 int lambda_p, double e);

} // namespace cqed
