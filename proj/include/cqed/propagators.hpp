#pragma once

#include "cqed/dirac.hpp"
#include "cqed/polarization.hpp"

namespace cqed {

struct PoleError : std::domain_error {
    PoleError() : std::domain_error("propagator evaluated at its pole with epsilon = 0") {}
};

// theta(0) convention used by the instantaneous Coulomb exchange.
inline constexpr double theta_at_zero = 0.5;

struct DiracPropagator {
    Mat4 numerator;   // (m + qslash) gamma^0
    cplx denominator; // m^2 - q^2 - i eps
    FourMomentum q;
};

inline DiracPropagator dirac_propagator(const FourMomentum& q, double m, double eps = 0.0) {
    cplx den = m * m - q.mass2() - cplx(0, 1) * eps;
    if (den == 0.0) throw PoleError{};
    DiracPropagator p;
    p.q = q;
    p.numerator = (Mat4::identity() * cplx(m) + slash(q)) * gammas()[0];
    p.denominator = den;
    return p;
}

struct PhotonPropagator {
    Mat3 numerator;   // delta_jk - q_j q_k / |q|^2
    cplx denominator; // q^2 + i eps
    FourMomentum q;
};

inline PhotonPropagator photon_propagator(const FourMomentum& q, double eps = 0.0) {
    Vec3 qv{q.px, q.py, q.pz};
    if (norm3(qv) == 0) throw DirectionError{};
    PhotonPropagator p;
    p.q = q;
    p.numerator = transverse_projector(qv);
    p.denominator = q.mass2() + cplx(0, 1) * eps;
    if (p.denominator == 0.0 && eps == 0.0) throw PoleError{};
    return p;
}

// Momentum-space instantaneous Coulomb kernel 1/|q|^2.
inline double coulomb_kernel(const FourMomentum& q) {
    double n2 = q.px * q.px + q.py * q.py + q.pz * q.pz;
    if (n2 == 0) throw std::domain_error("Coulomb kernel undefined at zero spatial momentum");
    return 1.0 / n2;
}

} // namespace cqed
