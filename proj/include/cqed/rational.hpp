#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <complex>

namespace cqed {

struct RationalOverflow : std::overflow_error {
    RationalOverflow() : std::overflow_error("rational arithmetic overflow") {}
};

namespace detail {

using i128 = __int128;

inline i128 iabs(i128 v) { return v < 0 ? -v : v; }

inline i128 igcd(i128 a, i128 b) {
    a = iabs(a);
    b = iabs(b);
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw RationalOverflow{};
    return r;
}

inline i128 checked_add(i128 a, i128 b) {
    i128 r;
    if (__builtin_add_overflow(a, b, &r)) throw RationalOverflow{};
    return r;
}

inline std::string i128_to_string(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    // careful with INT128_MIN; our values never reach it after normalization
    unsigned __int128 u = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
    std::string s;
    while (u != 0) {
        s.push_back(char('0' + int(u % 10)));
        u /= 10;
    }
    if (neg) s.push_back('-');
    return {s.rbegin(), s.rend()};
}

} // namespace detail

// Exact rational over 128-bit integers. Throws RationalOverflow instead of
// silently wrapping; callers that want a float fallback catch it.
class Rational {
  public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    static Rational from_i128(detail::i128 n, detail::i128 d) {
        Rational r;
        r.num_ = n;
        r.den_ = d;
        r.normalize();
        return r;
    }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

    Rational operator-() const { return from_i128(-num_, den_); }

    Rational operator+(const Rational& o) const {
        using namespace detail;
        i128 g = igcd(den_, o.den_);
        i128 lb = den_ / g;
        i128 rb = o.den_ / g;
        i128 n = checked_add(checked_mul(num_, rb), checked_mul(o.num_, lb));
        i128 d = checked_mul(den_, rb);
        return from_i128(n, d);
    }
    Rational operator-(const Rational& o) const { return *this + (-o); }

    Rational operator*(const Rational& o) const {
        using namespace detail;
        i128 g1 = igcd(num_, o.den_);
        i128 g2 = igcd(o.num_, den_);
        i128 n = checked_mul(num_ / g1, o.num_ / g2);
        i128 d = checked_mul(den_ / g2, o.den_ / g1);
        return from_i128(n, d);
    }

    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("rational division by zero");
        return *this * from_i128(o.den_, o.num_);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const {
        return detail::checked_mul(num_, o.den_) < detail::checked_mul(o.num_, den_);
    }

    double to_double() const { return double(num_) / double(den_); }

    std::string str() const {
        if (den_ == 1) return detail::i128_to_string(num_);
        return detail::i128_to_string(num_) + "/" + detail::i128_to_string(den_);
    }

  private:
    void normalize() {
        if (den_ == 0) throw std::domain_error("rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        if (num_ == 0) {
            den_ = 1;
            return;
        }
        detail::i128 g = detail::igcd(num_, den_);
        num_ /= g;
        den_ /= g;
    }

    detail::i128 num_, den_;
};

// Gaussian rational a + b*i.
struct GaussRat {
    Rational re, im;

    GaussRat() = default;
    GaussRat(Rational r) : re(r), im(0) {}
    GaussRat(long long r) : re(r), im(0) {}
    GaussRat(Rational r, Rational i) : re(r), im(i) {}

    static GaussRat unit_i() { return {Rational(0), Rational(1)}; }

    bool is_zero() const { return re.is_zero() && im.is_zero(); }

    GaussRat operator-() const { return {-re, -im}; }
    GaussRat operator+(const GaussRat& o) const { return {re + o.re, im + o.im}; }
    GaussRat operator-(const GaussRat& o) const { return {re - o.re, im - o.im}; }
    GaussRat operator*(const GaussRat& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    GaussRat conj() const { return {re, -im}; }
    GaussRat inv() const {
        Rational n = re * re + im * im;
        return {re / n, -(im / n)};
    }
    GaussRat operator/(const GaussRat& o) const { return *this * o.inv(); }

    GaussRat& operator+=(const GaussRat& o) { return *this = *this + o; }
    GaussRat& operator-=(const GaussRat& o) { return *this = *this - o; }
    GaussRat& operator*=(const GaussRat& o) { return *this = *this * o; }

    bool operator==(const GaussRat& o) const { return re == o.re && im == o.im; }
    bool operator!=(const GaussRat& o) const { return !(*this == o); }

    std::complex<double> to_complex() const { return {re.to_double(), im.to_double()}; }

    std::string str() const {
        if (im.is_zero()) return re.str();
        if (re.is_zero()) return im.str() + "*i";
        return re.str() + (im.sign() >= 0 ? "+" : "") + im.str() + "*i";
    }
};

// Coefficient ring for the lattice field algebra: c0 + c1*g where g is the
// electric coupling kept as a first-order (nilpotent) expansion parameter,
// g^2 = 0. Every relation of the constraint analysis is at most linear in
// the coupling; squaring it is where a polynomial lattice theory and the
// continuum algebra part ways, so the ring drops it by construction.
template <class S>
struct CouplingPair {
    S c0{}, c1{};

    CouplingPair() = default;
    CouplingPair(S a) : c0(a), c1() {}
    CouplingPair(S a, S b) : c0(a), c1(b) {}

    static CouplingPair coupling(S scale) { return {S{}, scale}; }

    bool is_zero() const { return c0.is_zero() && c1.is_zero(); }

    CouplingPair operator-() const { return {-c0, -c1}; }
    CouplingPair operator+(const CouplingPair& o) const { return {c0 + o.c0, c1 + o.c1}; }
    CouplingPair operator-(const CouplingPair& o) const { return {c0 - o.c0, c1 - o.c1}; }
    CouplingPair operator*(const CouplingPair& o) const {
        return {c0 * o.c0, c0 * o.c1 + c1 * o.c0};
    }
    CouplingPair& operator+=(const CouplingPair& o) { return *this = *this + o; }
    CouplingPair& operator-=(const CouplingPair& o) { return *this = *this - o; }
    CouplingPair& operator*=(const CouplingPair& o) { return *this = *this * o; }

    bool operator==(const CouplingPair& o) const { return c0 == o.c0 && c1 == o.c1; }
    bool operator!=(const CouplingPair& o) const { return !(*this == o); }

    std::string str() const { return "(" + c0.str() + ") + (" + c1.str() + ")*g"; }
};

// Complex-double analogue of GaussRat's role, for lattices whose Green
// function is irrational.
struct CDouble {
    std::complex<double> v{};

    CDouble() = default;
    CDouble(double d) : v(d) {}
    CDouble(std::complex<double> c) : v(c) {}
    CDouble(long long n) : v(double(n)) {}
    CDouble(int n) : v(double(n)) {}
    CDouble(const GaussRat& g) : v(g.to_complex()) {}

    bool is_zero() const { return std::abs(v) < 1e-13; }

    CDouble operator-() const { return {-v}; }
    CDouble operator+(const CDouble& o) const { return {v + o.v}; }
    CDouble operator-(const CDouble& o) const { return {v - o.v}; }
    CDouble operator*(const CDouble& o) const { return {v * o.v}; }
    CDouble& operator+=(const CDouble& o) { return *this = *this + o; }
    CDouble& operator-=(const CDouble& o) { return *this = *this - o; }
    CDouble& operator*=(const CDouble& o) { return *this = *this * o; }
    bool operator==(const CDouble& o) const { return v == o.v; }

    std::string str() const {
        return "(" + std::to_string(v.real()) + "," + std::to_string(v.imag()) + ")";
    }
};

using ExactCoef = CouplingPair<GaussRat>;
using FloatCoef = CouplingPair<CDouble>;

inline double coef_abs(const ExactCoef& c) {
    auto a = c.c0.to_complex();
    auto b = c.c1.to_complex();
    return std::abs(a) + std::abs(b);
}
inline double coef_abs(const FloatCoef& c) { return std::abs(c.c0.v) + std::abs(c.c1.v); }

} // namespace cqed
