#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "cqed/dirac.hpp"

namespace cqed {

using Vec3 = std::array<double, 3>;
using Vec3c = std::array<cplx, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct DirectionError : std::domain_error {
    DirectionError() : std::domain_error("polarization direction undefined for zero momentum") {}
};

inline double norm3(const Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Spherical angles with the deterministic pole convention: phi = 0 when
// sin(theta) vanishes.
inline std::pair<double, double> angles_of(const Vec3& k) {
    double r = norm3(k);
    if (r == 0) throw DirectionError{};
    double theta = std::acos(std::clamp(k[2] / r, -1.0, 1.0));
    double rho = std::hypot(k[0], k[1]);
    double phi = 0.0;
    if (rho > 0) {
        phi = std::atan2(k[1], k[0]);
        if (phi < 0) phi += 2 * M_PI;
    }
    return {theta, phi};
}

// R(k) = Rz(phi) Ry(theta); maps z-hat to k-hat.
inline Mat3 rotation(const Vec3& k) {
    auto [theta, phi] = angles_of(k);
    double ct = std::cos(theta), st = std::sin(theta);
    double cp = std::cos(phi), sp = std::sin(phi);
    Mat3 rz{{{cp, -sp, 0}, {sp, cp, 0}, {0, 0, 1}}};
    Mat3 ry{{{ct, 0, st}, {0, 1, 0}, {-st, 0, ct}}};
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) r[i][j] += rz[i][l] * ry[l][j];
    return r;
}

// Helicity basis columns: e_{+1}, e_{-1}; transverse to k, orthonormal under
// the Hermitian product. At k || z they reduce to (1, +-i, 0)/sqrt(2).
inline std::pair<Vec3c, Vec3c> basis(const Vec3& k) {
    auto [theta, phi] = angles_of(k);
    double ct = std::cos(theta), st = std::sin(theta);
    double cp = std::cos(phi), sp = std::sin(phi);
    const cplx I(0, 1);
    double s2 = 1.0 / std::sqrt(2.0);
    Vec3c ep{s2 * (ct * cp - I * sp), s2 * (ct * sp + I * cp), s2 * (-st)};
    Vec3c em{s2 * (ct * cp + I * sp), s2 * (ct * sp - I * cp), s2 * (-st)};
    return {ep, em};
}

// Photon polarization state: helicity superposition coefficients on the
// basis attached to the momentum direction.
struct PolarizationState {
    Vec3 k{};
    cplx alpha_plus{1.0}, alpha_minus{0.0};

    PolarizationState() = default;
    PolarizationState(const Vec3& k_, cplx ap, cplx am) : k(k_), alpha_plus(ap), alpha_minus(am) {
        double n = std::sqrt(std::norm(ap) + std::norm(am));
        if (std::abs(n - 1.0) > 1e-9)
            throw std::invalid_argument("helicity coefficients must be normalized");
        if (norm3(k) == 0) throw DirectionError{};
    }

    Vec3c vector() const {
        auto [ep, em] = basis(k);
        Vec3c e;
        for (int i = 0; i < 3; ++i) e[i] = alpha_plus * ep[i] + alpha_minus * em[i];
        return e;
    }
};

// Algebraic core of the mode inversion: e0^dag R^{-1}(k) e_lambda(k) must be
// the lambda-th standard 2-column. Returns the max deviation.
inline double mode_projection_identity(const Vec3& k) {
    auto R = rotation(k);
    auto [ep, em] = basis(k);
    const cplx I(0, 1);
    double s2 = 1.0 / std::sqrt(2.0);
    // e0 columns
    Vec3c e0p{s2, s2 * I, 0.0};
    Vec3c e0m{s2, -s2 * I, 0.0};
    double dev = 0;
    for (int col = 0; col < 2; ++col) {
        const Vec3c& e = (col == 0) ? ep : em;
        // R^{-1} = R^T
        Vec3c rot{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rot[i] += R[j][i] * e[j];
        cplx pp = 0, pm = 0;
        for (int i = 0; i < 3; ++i) {
            pp += std::conj(e0p[i]) * rot[i];
            pm += std::conj(e0m[i]) * rot[i];
        }
        dev = std::max(dev, std::abs(pp - (col == 0 ? 1.0 : 0.0)));
        dev = std::max(dev, std::abs(pm - (col == 1 ? 1.0 : 0.0)));
    }
    return dev;
}

// Transverse projector delta_ij - khat_i khat_j; shared by the polarization
// completeness sum and the photon propagator numerator.
inline Mat3 transverse_projector(const Vec3& k) {
    double n2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (n2 == 0) throw DirectionError{};
    Mat3 p{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p[i][j] = (i == j ? 1.0 : 0.0) - k[i] * k[j] / n2;
    return p;
}

} // namespace cqed
