#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cqed/rational.hpp"

namespace cqed {

// Periodic cubic lattice, n sites per axis, spacing a.
struct LatticeSpec {
    int n = 4;
    Rational spacing = Rational(1);

    LatticeSpec() = default;
    LatticeSpec(int n_, Rational a_) : n(n_), spacing(a_) {
        if (n < 1) throw std::invalid_argument("lattice size must be positive");
        if (a_.sign() <= 0) throw std::invalid_argument("lattice spacing must be positive");
    }

    int sites() const { return n * n * n; }

    std::array<int, 3> coords(int site) const {
        return {site % n, (site / n) % n, site / (n * n)};
    }
    int site_of(int x, int y, int z) const {
        auto w = [this](int v) { return ((v % n) + n) % n; };
        return w(x) + n * w(y) + n * n * w(z);
    }
    // site shifted by +/-1 along axis (0..2)
    int shift(int site, int axis, int step) const {
        auto c = coords(site);
        c[axis] += step;
        return site_of(c[0], c[1], c[2]);
    }
    int displace(int site, const std::array<int, 3>& d) const {
        auto c = coords(site);
        return site_of(c[0] + d[0], c[1] + d[1], c[2] + d[2]);
    }
    std::array<int, 3> separation(int from, int to) const {
        auto a = coords(from);
        auto b = coords(to);
        auto w = [this](int v) { return ((v % n) + n) % n; };
        return {w(b[0] - a[0]), w(b[1] - a[1]), w(b[2] - a[2])};
    }

    double spacing_d() const { return spacing.to_double(); }
};

// cos(2*pi*k/n) as an exact rational where it is one (n = 1,2,3,4,6).
inline std::optional<Rational> exact_cos_table(int n, int k) {
    k = ((k % n) + n) % n;
    switch (n) {
        case 1: return Rational(1);
        case 2: return k == 0 ? Rational(1) : Rational(-1);
        case 3: return k == 0 ? Rational(1) : Rational(-1, 2);
        case 4: {
            static const int c[4] = {1, 0, -1, 0};
            return Rational(c[k]);
        }
        case 6: {
            static const long long num[6] = {1, 1, -1, -1, -1, 1};
            static const long long den[6] = {1, 2, 2, 1, 2, 2};
            return Rational(num[k], den[k]);
        }
        default: return std::nullopt;
    }
}

inline bool lattice_green_is_exact(int n) { return exact_cos_table(n, 0).has_value(); }

// Pseudo-inverse of a translation-invariant symmetric stencil on the periodic
// lattice, computed mode by mode:
//   S(r), eigenvalue s(k) = sum_r S(r) cos(2 pi k.r / n),
//   Sinv(r) = (1/N) sum_{k: s(k)!=0} cos(2 pi k.r / n) / s(k).
// Modes with s(k) = 0 are projected out, which for the lattice Laplacian is
// exactly the constant mode. Throws if asked for exactness on a lattice whose
// cosines are irrational.
template <class S>
struct StencilInverse {
    LatticeSpec lat;
    std::vector<S> values;   // indexed by displacement site index
    int zero_modes = 0;

    const S& at(int from, int to) const {
        auto d = lat.separation(from, to);
        return values[lat.site_of(d[0], d[1], d[2])];
    }
};

inline StencilInverse<Rational> invert_stencil_exact(const LatticeSpec& lat,
                                                     const std::vector<Rational>& stencil) {
    const int n = lat.n;
    const int N = lat.sites();
    if (!lattice_green_is_exact(n))
        throw std::domain_error("exact stencil inverse needs rational lattice cosines");

    // eigenvalues
    std::vector<Rational> eig(N);
    for (int k = 0; k < N; ++k) {
        auto kc = lat.coords(k);
        Rational s(0);
        for (int r = 0; r < N; ++r) {
            if (stencil[r].is_zero()) continue;
            auto rc = lat.coords(r);
            int phase = kc[0] * rc[0] + kc[1] * rc[1] + kc[2] * rc[2];
            s += stencil[r] * *exact_cos_table(n, phase);
        }
        eig[k] = s;
    }

    StencilInverse<Rational> out;
    out.lat = lat;
    out.values.assign(N, Rational(0));
    for (int k = 0; k < N; ++k) {
        if (eig[k].is_zero()) {
            out.zero_modes += 1;
            continue;
        }
        Rational w = Rational(1, N) / eig[k];
        for (int r = 0; r < N; ++r) {
            auto rc = lat.coords(r);
            auto kc = lat.coords(k);
            int phase = kc[0] * rc[0] + kc[1] * rc[1] + kc[2] * rc[2];
            out.values[r] += w * *exact_cos_table(n, phase);
        }
    }
    return out;
}

inline StencilInverse<double> invert_stencil_float(const LatticeSpec& lat,
                                                   const std::vector<double>& stencil) {
    const int n = lat.n;
    const int N = lat.sites();
    std::vector<double> eig(N, 0.0);
    for (int k = 0; k < N; ++k) {
        auto kc = lat.coords(k);
        double s = 0;
        for (int r = 0; r < N; ++r) {
            if (stencil[r] == 0.0) continue;
            auto rc = lat.coords(r);
            int phase = kc[0] * rc[0] + kc[1] * rc[1] + kc[2] * rc[2];
            s += stencil[r] * std::cos(2.0 * M_PI * phase / n);
        }
        eig[k] = s;
    }
    StencilInverse<double> out;
    out.lat = lat;
    out.values.assign(N, 0.0);
    double scale = 0;
    for (int k = 0; k < N; ++k) scale = std::max(scale, std::abs(eig[k]));
    for (int k = 0; k < N; ++k) {
        if (std::abs(eig[k]) < 1e-12 * scale) {
            out.zero_modes += 1;
            continue;
        }
        for (int r = 0; r < N; ++r) {
            auto rc = lat.coords(r);
            auto kc = lat.coords(k);
            int phase = kc[0] * rc[0] + kc[1] * rc[1] + kc[2] * rc[2];
            out.values[r] += std::cos(2.0 * M_PI * phase / n) / eig[k] / N;
        }
    }
    return out;
}

// Stencil of the 7-point Laplacian (backward divergence of forward gradient).
template <class S>
std::vector<S> laplacian_stencil(const LatticeSpec& lat, S inv_a2) {
    std::vector<S> st(lat.sites(), S(0));
    st[0] = S(-6) * inv_a2;
    for (int ax = 0; ax < 3; ++ax) {
        st[lat.shift(0, ax, +1)] += inv_a2;
        st[lat.shift(0, ax, -1)] += inv_a2;
    }
    return st;
}

// Green function of -laplacian on the mean-zero subspace. Rational for
// n in {1,2,3,4,6}; float path otherwise.
inline StencilInverse<Rational> green_minus_laplacian_exact(const LatticeSpec& lat) {
    Rational inv_a2 = Rational(1) / (lat.spacing * lat.spacing);
    auto st = laplacian_stencil<Rational>(lat, inv_a2);
    for (auto& v : st) v = -v;
    return invert_stencil_exact(lat, st);
}

inline StencilInverse<double> green_minus_laplacian_float(const LatticeSpec& lat) {
    double inv_a2 = 1.0 / (lat.spacing_d() * lat.spacing_d());
    auto st = laplacian_stencil<double>(lat, inv_a2);
    for (auto& v : st) v = -v;
    return invert_stencil_float(lat, st);
}

// Lattice momentum component khat = (2/a) sin(a k / 2) for integer mode m,
// where k = 2 pi m / (n a).
inline double lattice_khat(const LatticeSpec& lat, int mode) {
    double a = lat.spacing_d();
    return (2.0 / a) * std::sin(M_PI * mode / lat.n);
}

} // namespace cqed
