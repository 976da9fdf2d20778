#pragma once

// Unsteady Oseen tensor E(s, y) = delta H_s(y) + dd W_s(y), W_s = int_s^inf H_tau dtau,
// and the time integrals built from it: Fourier coefficients in t of the time-periodic
// kernel (semigroup route) and the pointwise time-image sum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "tpk/errors.hpp"
#include "tpk/quadrature.hpp"
#include "tpk/steady_kernels.hpp"

namespace tpk {

/// g_a(u) = gamma(a, u)/u^a = int_0^1 t^{a-1} e^{-u t} dt for a = twice_a/2 > 0, u >= 0.
inline double lower_gamma_scaled(int twice_a, double u) {
    if (twice_a <= 0) throw DomainError("lower_gamma_scaled: order must be positive");
    const double a = 0.5 * twice_a;
    if (u <= 2.0) {
        double sum = 0.0, term = 1.0;
        for (int k = 0; k < 200; ++k) {
            if (k > 0) term *= -u / k;
            double d = term / (a + k);
            sum += d;
            if (std::abs(d) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    double g, b;
    if (twice_a % 2 == 0) {
        b = 1.0;
        g = -std::expm1(-u) / u;
    } else {
        b = 0.5;
        double su = std::sqrt(u);
        g = std::sqrt(std::numbers::pi) * std::erf(su) / su;
    }
    double eu = std::exp(-u);
    for (; b < a - 0.25; b += 1.0) g = (b * g - eu) / u;
    return g;
}

namespace detail {
inline constexpr int kMaxUnsteadyDim = 6;
}

class UnsteadyOseen {
public:
    UnsteadyOseen(int n, double lambda) : n_(n), lambda_(lambda) {
        if (n < 2 || n > detail::kMaxUnsteadyDim) throw DomainError("UnsteadyOseen: unsupported dimension");
        c_ = std::pow(4.0 * std::numbers::pi, -0.5 * n);
        for (int i = 0; i < 3; ++i) gamma0_[i] = std::tgamma(0.5 * n + i);
    }

    int n() const { return n_; }
    double lambda() const { return lambda_; }

    /// E(s, y) into e (n*n row-major); if de is non-null, d_m E_{jl} into de[(m*n + j)*n + l].
    /// s = 0 gives the limit s -> 0+ (requires y != 0).
    void eval(double s, const double* y, double* e, double* de) const {
        const int n = n_;
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
        double h = 0.0, hs = 0.0, ia, ib, ic;
        const double hn = 0.5 * n;
        if (s <= 0.0) {
            if (r2 == 0.0) throw SingularPointError("UnsteadyOseen: y = 0 at s = 0");
            double q = 4.0 / r2;
            // I_p(0, r) = (4/r^2)^{p-1} Gamma(p-1)
            ib = std::pow(q, hn) * gamma0_[0];
            ia = std::pow(q, hn + 1.0) * gamma0_[1];
            ic = std::pow(q, hn + 2.0) * gamma0_[2];
        } else {
            double u = 0.25 * r2 / s;
            h = std::pow(4.0 * std::numbers::pi * s, -hn) * std::exp(-u);
            hs = h / (2.0 * s);
            ib = std::pow(s, -hn) * lower_gamma_scaled(n, u);
            ia = std::pow(s, -hn - 1.0) * lower_gamma_scaled(n + 2, u);
            ic = de ? std::pow(s, -hn - 2.0) * lower_gamma_scaled(n + 4, u) : 0.0;
        }
        const double diag = h - 0.5 * c_ * ib;
        const double ca = 0.25 * c_ * ia;
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) e[j * n + l] = ca * y[j] * y[l] + (j == l ? diag : 0.0);
        if (!de) return;
        const double cc = 0.125 * c_ * ic;
        for (int m = 0; m < n; ++m) {
            double dm = -y[m] * hs + ca * y[m];
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    double v = -cc * y[j] * y[l] * y[m];
                    if (m == j) v += ca * y[l];
                    if (m == l) v += ca * y[j];
                    if (j == l) v += dm;
                    de[(m * n + j) * n + l] = v;
                }
        }
    }

    RealMatrix tensor(double s, const Point& y) const {
        RealMatrix out(n_, n_);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n_, n_);
        eval(s, y.data(), rm.data(), nullptr);
        out = rm;
        return out;
    }

private:
    int n_;
    double lambda_;
    double c_;
    double gamma0_[3];
};

/// Value and (optionally) spatial gradient of a matrix kernel; gradient[m] = d_m K.
struct KernelDerivs {
    ComplexMatrix value;
    std::vector<ComplexMatrix> gradient;
};

namespace detail {

// Accumulates int e^{-i w s} F(s) ds for F(s) = E(s, x - lambda s e_1) and its gradient.
class ModeAccumulator {
public:
    ModeAccumulator(const UnsteadyOseen& op, const Point& x, double omega, bool grad)
        : op_(op), x_(x), omega_(omega), grad_(grad), n_(op.n()) {
        int n = n_;
        acc_.assign(n * n * (grad ? n + 1 : 1), cplx(0.0, 0.0));
        buf_.assign(acc_.size(), 0.0);
    }

    // F at s (real), stored in buf_ (value block followed by gradient block).
    const std::vector<double>& sample(double s) {
        double y[kMaxUnsteadyDim];
        for (int i = 0; i < n_; ++i) y[i] = x_(i);
        y[0] -= op_.lambda() * s;
        op_.eval(s, y, buf_.data(), grad_ ? buf_.data() + n_ * n_ : nullptr);
        return buf_;
    }

    void panel(double a, double b, int order) {
        const GaussRule& g = gauss_legendre(order);
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int i = 0; i < order; ++i) {
            double s = c + h * g.nodes[i];
            const auto& f = sample(s);
            cplx w = h * g.weights[i] * std::polar(1.0, -omega_ * s);
            for (std::size_t q = 0; q < f.size(); ++q) acc_[q] += w * f[q];
        }
    }

    void add(const std::vector<cplx>& v, cplx scale) {
        for (std::size_t q = 0; q < v.size(); ++q) acc_[q] += scale * v[q];
    }

    std::vector<cplx>& acc() { return acc_; }
    int n() const { return n_; }

private:
    const UnsteadyOseen& op_;
    Point x_;
    double omega_;
    bool grad_;
    int n_;
    std::vector<cplx> acc_;
    std::vector<double> buf_;
};

inline KernelDerivs unpack(const std::vector<cplx>& acc, int n, bool grad) {
    KernelDerivs out;
    out.value.resize(n, n);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) out.value(j, l) = acc[j * n + l];
    if (grad) {
        out.gradient.assign(n, ComplexMatrix(n, n));
        for (int m = 0; m < n; ++m)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) out.gradient[m](j, l) = acc[n * n + (m * n + j) * n + l];
    }
    return out;
}

// Length scale below which the heat part of E(s, x - lambda s e_1) is negligible.
inline double semigroup_start(const Point& x, double lambda) {
    double r = x.norm();
    double s0 = 0.01 * r * r;
    if (lambda != 0.0) s0 = std::min(s0, 0.01 * r / std::abs(lambda));
    return s0;
}

// Time beyond which F is a smooth power law on the scale s.
inline double semigroup_far(const Point& x, double lambda) {
    double r = x.norm();
    if (lambda == 0.0) return 4.0 * r * r + 1.0;
    // Diffusive time, capped by the drift time once lambda r > 1.
    double a = std::abs(lambda);
    return 4.0 * std::min(r * r, r / a) + 1.0 + 8.0 * (r + std::abs(x(0))) / a + 8.0 / (a * a);
}

}  // namespace detail

/// Fourier coefficient of the time-periodic velocity kernel,
/// M_k(x) = int_0^inf e^{-i beta k s} E(s, x - lambda s e_1) ds = F^{-1}[P(xi)/(|xi|^2 + i lambda xi_1 + i beta k)](x).
/// k = 0 gives the steady kernel (requires n >= 3 or lambda != 0).
inline KernelDerivs semigroup_mode(int k, const Point& x, const KernelParams& p, bool with_gradient = false) {
    p.validate();
    detail::check_point(x, p, "semigroup_mode");
    if (k == 0 && p.n == 2 && p.lambda == 0.0) throw DomainError("semigroup_mode: 2D steady Stokes integral diverges");
    UnsteadyOseen op(p.n, p.lambda);
    const double omega = p.beta() * k;
    detail::ModeAccumulator accu(op, x, omega, with_gradient);
    const int order = 16;
    const double growth = 1.4;

    double s0 = detail::semigroup_start(x, p.lambda);
    double far = detail::semigroup_far(x, p.lambda);
    double wave = omega != 0.0 ? 2.0 * std::numbers::pi / std::abs(omega) : 1e300;
    double S = omega != 0.0 ? std::max(far, 64.0 / std::abs(omega)) : far;

    accu.panel(0.0, s0, order);
    double a = s0;
    while (a < S) {
        double b = std::min({a * growth, a + wave, S});
        accu.panel(a, b, order);
        a = b;
    }

    const int n = p.n;
    if (omega != 0.0) {
        // int_S^inf e^{-iws} F = e^{-iwS} sum_m F^(m)(S)/(iw)^{m+1}, derivatives by 5-point differences.
        double h = S / 16.0;
        std::vector<std::vector<double>> f(5);
        for (int i = 0; i < 5; ++i) f[i] = accu.sample(S + (i - 2) * h);
        std::vector<cplx> tail(f[0].size());
        cplx iw(0.0, omega);
        cplx e = std::polar(1.0, -omega * S);
        for (std::size_t q = 0; q < tail.size(); ++q) {
            double d0 = f[2][q];
            double d1 = (f[0][q] - 8 * f[1][q] + 8 * f[3][q] - f[4][q]) / (12 * h);
            double d2 = (-f[0][q] + 16 * f[1][q] - 30 * f[2][q] + 16 * f[3][q] - f[4][q]) / (12 * h * h);
            double d3 = (-f[0][q] + 2 * f[1][q] - 2 * f[3][q] + f[4][q]) / (2 * h * h * h);
            tail[q] = e * (d0 / iw + d1 / (iw * iw) + d2 / (iw * iw * iw) + d3 / (iw * iw * iw * iw));
        }
        accu.add(tail, 1.0);
    } else {
        double end = S * 1e8;
        while (a < end) {
            accu.panel(a, 2.0 * a, order);
            a *= 2.0;
        }
        std::vector<double> fb = accu.sample(a), fh = accu.sample(0.5 * a);
        std::vector<cplx> tail(fb.size(), 0.0);
        for (std::size_t q = 0; q < fb.size(); ++q) {
            if (fb[q] == 0.0 || fb[q] * fh[q] <= 0.0) continue;
            double pw = std::log2(fh[q] / fb[q]);
            if (pw > 1.0) tail[q] = fb[q] * a / (pw - 1.0);
        }
        accu.add(tail, 1.0);
    }
    return detail::unpack(accu.acc(), n, with_gradient);
}

/// Pointwise Gamma_perp(t, x) from the time-image sum
/// Gamma^TP(t, x) = T sum_{j>=0} E(t + jT, x - lambda (t + jT) e_1), 0 < t < T,
/// minus the steady part int_0^inf E ds. At t = 0 (mod T) the midpoint of the jump is returned.
class TimeImageKernel {
public:
    TimeImageKernel(const Point& x, const KernelParams& p) : p_(p), x_(x), op_(p.n, p.lambda) {
        p.validate();
        detail::check_point(x, p, "TimeImageKernel");
        const double T = p.period;
        double far = detail::semigroup_far(x, p.lambda);
        images_ = std::max(24, int(std::ceil(4.0 * far / T)));
        S_ = images_ * T;
        // int_0^S E ds, non-oscillatory.
        detail::ModeAccumulator accu(op_, x_, 0.0, false);
        double s0 = detail::semigroup_start(x, p.lambda);
        accu.panel(0.0, s0, 16);
        double a = s0;
        while (a < S_) {
            double b = std::min({a * 1.4, a + T, S_});
            accu.panel(a, b, 16);
            a = b;
        }
        head_ = detail::unpack(accu.acc(), p.n, false).value.real();
    }

    RealMatrix at(double t) const {
        const double T = p_.period;
        t = std::fmod(t, T);
        if (t < 0.0) t += T;
        const int n = p_.n;
        RealMatrix sum = RealMatrix::Zero(n, n);
        for (int j = 0; j < images_; ++j) {
            double s = t + j * T;
            double w = (j == 0 && t == 0.0) ? 0.5 : 1.0;
            sum += w * f(s);
        }
        double S = t + S_;
        double h = S / 16.0;
        RealMatrix fm2 = f(S - 2 * h), fm1 = f(S - h), f0 = f(S), fp1 = f(S + h), fp2 = f(S + 2 * h);
        RealMatrix d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
        RealMatrix d3 = (-fm2 + 2 * fm1 - 2 * fp1 + fp2) / (2 * h * h * h);
        RealMatrix em = 0.5 * f0 - (T / 12.0) * d1 + (T * T * T / 720.0) * d3;
        // int_{S_}^{S} E ds
        RealMatrix piece = RealMatrix::Zero(n, n);
        if (t > 0.0) piece = integrate_gl([&](double s) { return f(s); }, S_, S, 8);
        return T * (sum + em) - head_ - piece;
    }

    int images() const { return images_; }

private:
    RealMatrix f(double s) const {
        Point y = x_;
        y(0) -= p_.lambda * s;
        return op_.tensor(s, y);
    }

    KernelParams p_;
    Point x_;
    UnsteadyOseen op_;
    int images_;
    double S_;
    RealMatrix head_;
};

}  // namespace tpk
