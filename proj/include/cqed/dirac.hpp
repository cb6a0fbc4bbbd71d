#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace cqed {

using cplx = std::complex<double>;

struct KinematicsError : std::domain_error {
    explicit KinematicsError(const std::string& w) : std::domain_error(w) {}
};

// 4x4 complex matrix, row major.
struct Mat4 {
    std::array<cplx, 16> a{};

    static Mat4 zero() { return {}; }
    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }

    cplx& operator()(int r, int c) { return a[r * 4 + c]; }
    const cplx& operator()(int r, int c) const { return a[r * 4 + c]; }

    Mat4 operator+(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 16; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }
    Mat4 operator-(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 16; ++i) r.a[i] = a[i] - o.a[i];
        return r;
    }
    Mat4 operator*(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) {
                cplx v = a[i * 4 + k];
                if (v == 0.0) continue;
                for (int j = 0; j < 4; ++j) r.a[i * 4 + j] += v * o.a[k * 4 + j];
            }
        return r;
    }
    Mat4 operator*(cplx s) const {
        Mat4 r;
        for (int i = 0; i < 16; ++i) r.a[i] = a[i] * s;
        return r;
    }
    Mat4 adjoint() const {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r(i, j) = std::conj((*this)(j, i));
        return r;
    }
    cplx trace() const { return a[0] + a[5] + a[10] + a[15]; }
    double max_abs() const {
        double m = 0;
        for (auto& v : a) m = std::max(m, std::abs(v));
        return m;
    }
};

inline Mat4 operator*(cplx s, const Mat4& m) { return m * s; }

using Vec4c = std::array<cplx, 4>;

inline Vec4c mat_vec(const Mat4& m, const Vec4c& v) {
    Vec4c r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i] += m(i, j) * v[j];
    return r;
}

// Metric (+,-,-,-). p.e is the energy component.
struct FourMomentum {
    double e = 0, px = 0, py = 0, pz = 0;

    double operator[](int a) const {
        switch (a) {
            case 0: return e;
            case 1: return px;
            case 2: return py;
            default: return pz;
        }
    }
    FourMomentum operator+(const FourMomentum& o) const {
        return {e + o.e, px + o.px, py + o.py, pz + o.pz};
    }
    FourMomentum operator-(const FourMomentum& o) const {
        return {e - o.e, px - o.px, py - o.py, pz - o.pz};
    }
    FourMomentum operator-() const { return {-e, -px, -py, -pz}; }

    double dot(const FourMomentum& o) const {
        return e * o.e - px * o.px - py * o.py - pz * o.pz;
    }
    double mass2() const { return dot(*this); }
    double p3norm() const { return std::sqrt(px * px + py * py + pz * pz); }

    bool on_shell(double m, double tol_scale = 1e-12) const {
        return e > 0 && std::abs(mass2() - m * m) <= tol_scale * e * e * 100;
    }
};

// Boost along z with velocity beta (applies to any four-vector).
inline FourMomentum boost_z(const FourMomentum& p, double beta) {
    double gamma = 1.0 / std::sqrt(1.0 - beta * beta);
    return {gamma * (p.e + beta * p.pz), p.px, p.py, gamma * (p.pz + beta * p.e)};
}

// Dirac representation gamma matrices; gamma^0 diagonal, spatial ones built
// from Pauli blocks.
inline const std::array<Mat4, 4>& gammas() {
    static const std::array<Mat4, 4> g = [] {
        std::array<Mat4, 4> m{};
        const cplx I(0, 1);
        m[0](0, 0) = 1;
        m[0](1, 1) = 1;
        m[0](2, 2) = -1;
        m[0](3, 3) = -1;
        // sigma_x
        m[1](0, 3) = 1;
        m[1](1, 2) = 1;
        m[1](2, 1) = -1;
        m[1](3, 0) = -1;
        // sigma_y
        m[2](0, 3) = -I;
        m[2](1, 2) = I;
        m[2](2, 1) = I;
        m[2](3, 0) = -I;
        // sigma_z
        m[3](0, 2) = 1;
        m[3](1, 3) = -1;
        m[3](2, 0) = -1;
        m[3](3, 1) = 1;
        return m;
    }();
    return g;
}

inline double metric(int a, int b) {
    if (a != b) return 0;
    return a == 0 ? 1.0 : -1.0;
}

// p-slash = p_a gamma^a = p^0 gamma^0 - p^i gamma^i
inline Mat4 slash(const FourMomentum& p) {
    Mat4 r = gammas()[0] * cplx(p.e);
    r = r - gammas()[1] * cplx(p.px);
    r = r - gammas()[2] * cplx(p.py);
    r = r - gammas()[3] * cplx(p.pz);
    return r;
}

// spatial-only contraction gamma^i e_i of a complex 3-vector, as used for the
// transverse polarization insertions
inline Mat4 slash3(const std::array<cplx, 3>& e) {
    Mat4 r;
    for (int i = 0; i < 3; ++i) r = r + gammas()[i + 1] * e[i];
    return r;
}

enum class SpinorKind { U, V };

struct DiracSpinor {
    Vec4c c{};
    SpinorKind kind = SpinorKind::U;
    int sigma = +1; // +1 for +1/2, -1 for -1/2
    double mass = 0;
};

// On-shell spinors in the Dirac representation: rest-frame two-spinors
// (1,0), (0,1) boosted by the sigma.p / sqrt(E+m) block. Normalization
// u^dag u = 2E, completeness sum u ubar = pslash + m.
inline DiracSpinor u_spinor(const FourMomentum& p, int sigma, double m) {
    if (m <= 0) throw KinematicsError("massive spinor construction needs m > 0");
    if (!p.on_shell(m)) throw KinematicsError("u_spinor: momentum off shell");
    double wplus = std::sqrt(p.e + m);
    std::array<cplx, 2> xi = (sigma > 0) ? std::array<cplx, 2>{1, 0}
                                         : std::array<cplx, 2>{0, 1};
    // sigma.p on the two-spinor
    const cplx I(0, 1);
    std::array<cplx, 2> sp{};
    sp[0] = p.pz * xi[0] + (p.px - I * p.py) * xi[1];
    sp[1] = (p.px + I * p.py) * xi[0] - p.pz * xi[1];
    DiracSpinor s;
    s.kind = SpinorKind::U;
    s.sigma = sigma;
    s.mass = m;
    s.c[0] = wplus * xi[0];
    s.c[1] = wplus * xi[1];
    s.c[2] = sp[0] / wplus;
    s.c[3] = sp[1] / wplus;
    return s;
}

inline DiracSpinor v_spinor(const FourMomentum& p, int sigma, double m) {
    if (m <= 0) throw KinematicsError("massive spinor construction needs m > 0");
    if (!p.on_shell(m)) throw KinematicsError("v_spinor: momentum off shell");
    double wplus = std::sqrt(p.e + m);
    // eta_sigma = -i sigma_y xi_sigma keeps charge-conjugation phases tidy
    std::array<cplx, 2> eta = (sigma > 0) ? std::array<cplx, 2>{0, 1}
                                          : std::array<cplx, 2>{-1, 0};
    const cplx I(0, 1);
    std::array<cplx, 2> sp{};
    sp[0] = p.pz * eta[0] + (p.px - I * p.py) * eta[1];
    sp[1] = (p.px + I * p.py) * eta[0] - p.pz * eta[1];
    DiracSpinor s;
    s.kind = SpinorKind::V;
    s.sigma = sigma;
    s.mass = m;
    s.c[0] = sp[0] / wplus;
    s.c[1] = sp[1] / wplus;
    s.c[2] = wplus * eta[0];
    s.c[3] = wplus * eta[1];
    return s;
}

// Dirac adjoint as a row vector: ubar = u^dag gamma^0.
inline Vec4c adjoint(const DiracSpinor& s) {
    Vec4c r;
    for (int i = 0; i < 4; ++i) {
        r[i] = std::conj(s.c[i]);
        if (i >= 2) r[i] = -r[i];
    }
    return r;
}

inline cplx row_mat_col(const Vec4c& row, const Mat4& m, const Vec4c& col) {
    cplx out = 0;
    for (int i = 0; i < 4; ++i) {
        if (row[i] == 0.0) continue;
        cplx acc = 0;
        for (int j = 0; j < 4; ++j) acc += m(i, j) * col[j];
        out += row[i] * acc;
    }
    return out;
}

inline cplx row_col(const Vec4c& row, const Vec4c& col) {
    cplx out = 0;
    for (int i = 0; i < 4; ++i) out += row[i] * col[i];
    return out;
}

// trace of an ordered product of 4x4 matrices
inline cplx trace_product(const std::vector<Mat4>& ms) {
    if (ms.empty()) throw std::invalid_argument("trace_product needs at least one factor");
    Mat4 acc = ms[0];
    for (std::size_t i = 1; i < ms.size(); ++i) acc = acc * ms[i];
    return acc.trace();
}

} // namespace cqed
