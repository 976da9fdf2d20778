#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "tpk/errors.hpp"

namespace tpk {

using cplx = std::complex<double>;

/// Order nu = twice_order / 2 of a Bessel-type function.
struct HalfIntegerOrder {
    int twice_order = 0;

    constexpr HalfIntegerOrder() = default;
    explicit HalfIntegerOrder(int twice) : twice_order(twice) {
        if (twice < 0) throw DomainError("HalfIntegerOrder: negative order");
    }
    /// nu = (n - 2)/2, the order attached to dimension n.
    static HalfIntegerOrder from_dimension(int n) {
        if (n < 2) throw DomainError("HalfIntegerOrder: dimension must be >= 2");
        return HalfIntegerOrder(n - 2);
    }
    static HalfIntegerOrder integer(int m) { return HalfIntegerOrder(2 * m); }
    static HalfIntegerOrder half(int m) { return HalfIntegerOrder(2 * m + 1); }

    double value() const { return 0.5 * twice_order; }
    bool is_integer() const { return twice_order % 2 == 0; }
    HalfIntegerOrder plus_one() const { return HalfIntegerOrder(twice_order + 2); }
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kHankelSwitchRadius = 12.0;
inline constexpr double kKSeriesRadius = 2.0;
// Above this imaginary part the J + iY series loses too many digits to cancellation.
inline constexpr double kHankelSeriesMaxImag = 2.0;

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline void require_nonzero(cplx z, const char* who) {
    if (z == cplx(0.0, 0.0)) throw DomainError(std::string(who) + ": argument is zero");
    if (!finite(z)) throw DomainError(std::string(who) + ": non-finite argument");
}

// Keep the argument on the upper side of the negative real axis.
inline cplx upper_side(cplx z) {
    if (z.imag() == 0.0) return {z.real(), 0.0};
    return z;
}

inline double harmonic(int k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += 1.0 / j;
    return s;
}

inline double factorial(int k) {
    double f = 1.0;
    for (int j = 2; j <= k; ++j) f *= j;
    return f;
}

// H^(1)_{m+1/2}(z) from the terminating spherical Hankel sum.
inline cplx hankel1_half(int m, cplx z) {
    const cplx I(0.0, 1.0);
    cplx sum = 0.0;
    cplx term = 1.0;
    for (int k = 0; k <= m; ++k) {
        if (k > 0) term *= I / (2.0 * z);
        sum += term * factorial(m + k) / (factorial(k) * factorial(m - k));
    }
    cplx phase = std::pow(-I, m + 1);
    return std::sqrt(2.0 / (std::numbers::pi * z)) * phase * std::exp(I * z) * sum;
}

// J_m(z) + i Y_m(z) by the ascending series.
inline cplx hankel1_series(int m, cplx z) {
    const cplx I(0.0, 1.0);
    const double pi = std::numbers::pi;
    cplx h = 0.5 * z;
    cplx q = -h * h;
    cplx hm = std::pow(h, m);

    cplx j = 0.0, s2 = 0.0;
    cplx term = hm / factorial(m);  // k = 0 term of J
    for (int k = 0; k < 400; ++k) {
        if (k > 0) term *= q / (double(k) * double(m + k));
        j += term;
        double psi = -2.0 * kEulerGamma + harmonic(k) + harmonic(m + k);
        cplx d = psi * term;
        s2 += d;
        if (k > 4 && std::abs(term) < 1e-18 * std::abs(j) && std::abs(d) < 1e-18 * std::abs(s2)) break;
    }
    cplx s1 = 0.0;
    if (m > 0) {
        cplx hh = h * h;
        cplx p = std::pow(h, -m);
        for (int k = 0; k < m; ++k) {
            s1 += factorial(m - k - 1) / factorial(k) * p;
            p *= hh;
        }
    }
    cplx y = -s1 / pi + (2.0 / pi) * std::log(h) * j - s2 / pi;
    return j + I * y;
}

// Large-argument expansion, valid across the closed upper half-plane for |z| >= 12.
inline cplx hankel1_asymptotic(double nu, cplx z) {
    const cplx I(0.0, 1.0);
    const double pi = std::numbers::pi;
    double mu = 4.0 * nu * nu;
    cplx sum = 1.0, term = 1.0;
    double last = 1.0;
    for (int k = 1; k < 60; ++k) {
        double odd = 2.0 * k - 1.0;
        term *= I * (mu - odd * odd) / (8.0 * k * z);
        double mag = std::abs(term);
        if (mag == 0.0) break;
        if (mag > last) break;  // asymptotic: stop at the smallest term
        sum += term;
        last = mag;
        if (mag < 1e-17 * std::abs(sum)) break;
    }
    return std::sqrt(2.0 / (pi * z)) * std::exp(I * (z - 0.5 * nu * pi - 0.25 * pi)) * sum;
}

// K_0 and K_1 of complex argument with Re w > 0 and |w| > 2 (Steed's continued fraction).
// When scaled, the factor e^{-w} is omitted.
inline void bessel_k01_cf2(cplx w, cplx& k0, cplx& k1, bool scaled) {
    const double eps = 1e-17;
    cplx b = 2.0 * (1.0 + w);
    cplx d = 1.0 / b;
    cplx h = d, delh = d;
    cplx q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    cplx q = a1, c = a1;
    double a = -a1;
    cplx s = 1.0 + q * delh;
    for (int i = 2; i < 100000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / double(i);
        cplx qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        cplx dels = q * delh;
        s += dels;
        if (std::abs(dels) < eps * std::abs(s)) break;
    }
    h = a1 * h;
    cplx pref = std::sqrt(std::numbers::pi / (2.0 * w));
    if (!scaled) pref *= std::exp(-w);
    k0 = pref / s;
    k1 = k0 * (w + 0.5 - h) / w;
}

// K_m by the ascending series (small |w|).
inline cplx bessel_k_series(int m, cplx w) {
    cplx h = 0.5 * w;
    cplx q = h * h;
    cplx s1 = 0.0;
    if (m > 0) {
        cplx p = std::pow(h, -m);
        for (int k = 0; k < m; ++k) {
            s1 += factorial(m - k - 1) / factorial(k) * p;
            p *= -q;
        }
        s1 *= 0.5;
    }
    cplx im = 0.0, s2 = 0.0;
    cplx term = std::pow(h, m) / factorial(m);
    for (int k = 0; k < 400; ++k) {
        if (k > 0) term *= q / (double(k) * double(m + k));
        im += term;
        double psi = -2.0 * kEulerGamma + harmonic(k) + harmonic(m + k);
        cplx d = psi * term;
        s2 += d;
        if (k > 4 && std::abs(term) < 1e-18 * std::abs(im) && std::abs(d) < 1e-18 * std::abs(s2)) break;
    }
    double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return s1 - sign * std::log(h) * im + sign * 0.5 * s2;
}

// Integer-order K_m(w), Re w >= 0.
inline cplx bessel_k_int(int m, cplx w, bool scaled) {
    if (std::abs(w) <= kKSeriesRadius) {
        cplx v = bessel_k_series(m, w);
        return scaled ? v * std::exp(w) : v;
    }
    cplx k0, k1;
    bessel_k01_cf2(w, k0, k1, scaled);
    if (m == 0) return k0;
    for (int j = 1; j < m; ++j) {
        cplx k2 = k0 + (2.0 * j / w) * k1;
        k0 = k1;
        k1 = k2;
    }
    return k1;
}

inline cplx hankel1_int(int m, cplx z) {
    if (std::abs(z) >= kHankelSwitchRadius) return hankel1_asymptotic(m, z);
    if (z.imag() > kHankelSeriesMaxImag) {
        const cplx I(0.0, 1.0);
        cplx w = -I * z;
        return (2.0 / (std::numbers::pi * I)) * std::pow(-I, m) * bessel_k_int(m, w, false);
    }
    return hankel1_series(m, z);
}

// Non-negative twice-order.
inline cplx hankel1_nonneg(int twice, cplx z) {
    if (twice % 2 == 0) return hankel1_int(twice / 2, z);
    return hankel1_half((twice - 1) / 2, z);
}

// Any twice-order >= -2, via H_{-nu} = e^{i nu pi} H_nu.
inline cplx hankel1_signed(int twice, cplx z) {
    if (twice >= 0) return hankel1_nonneg(twice, z);
    double nu = -0.5 * twice;
    return std::polar(1.0, nu * std::numbers::pi) * hankel1_nonneg(-twice, z);
}

inline double bessel_k_half(int m, double x, bool scaled) {
    double sum = 0.0, p = 1.0;
    for (int k = 0; k <= m; ++k) {
        sum += factorial(m + k) / (factorial(k) * factorial(m - k)) * p;
        p /= 2.0 * x;
    }
    double v = std::sqrt(std::numbers::pi / (2.0 * x)) * sum;
    return scaled ? v : v * std::exp(-x);
}

}  // namespace detail

/// Square root with Im >= 0; for real positive z the positive root.
inline cplx sqrt_upper(cplx z) {
    detail::require_nonzero(z, "sqrt_upper");
    cplx w = std::sqrt(z);
    if (w.imag() < 0.0 || (w.imag() == 0.0 && w.real() < 0.0)) w = -w;
    return w;
}

/// Hankel function of the first kind H^(1)_nu(z), Im z >= 0.
/// Integer orders: ascending J + iY series for |z| < 12 (through K_m(-iz) when Im z > 2),
/// asymptotic expansion for |z| >= 12. Half-integer orders: closed form.
inline cplx hankel1(HalfIntegerOrder nu, cplx z) {
    detail::require_nonzero(z, "hankel1");
    return detail::hankel1_nonneg(nu.twice_order, detail::upper_side(z));
}

/// d/dz H^(1)_nu(z) = H^(1)_{nu-1}(z) - (nu/z) H^(1)_nu(z); H_{-1} = -H_1, H_{-1/2} = i H_{1/2}.
inline cplx hankel1_derivative(HalfIntegerOrder nu, cplx z) {
    detail::require_nonzero(z, "hankel1_derivative");
    z = detail::upper_side(z);
    cplx lower = detail::hankel1_signed(nu.twice_order - 2, z);
    return lower - (nu.value() / z) * detail::hankel1_nonneg(nu.twice_order, z);
}

/// Modified Bessel function K_nu(x), x > 0.
inline double bessel_k(HalfIntegerOrder nu, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_k: x must be positive");
    if (nu.is_integer()) return detail::bessel_k_int(nu.twice_order / 2, cplx(x, 0.0), false).real();
    return detail::bessel_k_half((nu.twice_order - 1) / 2, x, false);
}

/// e^x K_nu(x), x > 0; avoids underflow for large x.
inline double bessel_k_scaled(HalfIntegerOrder nu, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_k_scaled: x must be positive");
    if (nu.is_integer()) return detail::bessel_k_int(nu.twice_order / 2, cplx(x, 0.0), true).real();
    return detail::bessel_k_half((nu.twice_order - 1) / 2, x, true);
}

}  // namespace tpk
