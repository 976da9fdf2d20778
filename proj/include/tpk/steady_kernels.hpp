#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpk/errors.hpp"
#include "tpk/quadrature.hpp"
#include "tpk/special_functions.hpp"

namespace tpk {

using Point = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

struct KernelParams {
    int n = 3;
    double lambda = 0.0;
    double period = 2.0 * std::numbers::pi;

    void validate() const {
        if (n < 2) throw DomainError("KernelParams: n must be >= 2");
        if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("KernelParams: period must be > 0");
        if (!std::isfinite(lambda)) throw DomainError("KernelParams: lambda must be finite");
    }
    double beta() const { return 2.0 * std::numbers::pi / period; }
    bool is_stokes() const { return lambda == 0.0; }
};

inline double unit_sphere_area(int n) {
    if (n < 2) throw DomainError("unit_sphere_area: n must be >= 2");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace detail {

inline void check_point(const Point& x, const KernelParams& p, const char* who) {
    if (x.size() != p.n) throw ContractError(std::string(who) + ": point dimension does not match n");
    if (x.norm() == 0.0) throw SingularPointError(std::string(who) + ": x = 0");
}

inline Point reflect1(Point x) {
    x(0) = -x(0);
    return x;
}

template <class M>
M reflect1(M m) {
    m.row(0) *= -1.0;
    m.col(0) *= -1.0;
    return m;
}

// Gradient and Hessian of Gamma_L.
inline Point laplace_gradient(const Point& x, int n) {
    double r = x.norm();
    return -x / (unit_sphere_area(n) * std::pow(r, n));
}

inline RealMatrix laplace_hessian(const Point& x, int n) {
    double r2 = x.squaredNorm();
    double c = 1.0 / (unit_sphere_area(n) * std::pow(r2, 0.5 * n + 1.0));
    RealMatrix h = (n * c) * (x * x.transpose());
    h.diagonal().array() -= c * r2;
    return h;
}

// Oseen potential u(x) = e^{k x_1} (2 pi)^{-n/2} k^nu r^{-nu} K_nu(k r), k = lambda/2 > 0,
// the fundamental solution of -Delta + lambda d_1. Value, gradient and Hessian.
struct OseenPotential {
    int n;
    double kappa;
    HalfIntegerOrder nu;
    double c;

    OseenPotential(int n_, double lambda) : n(n_), kappa(0.5 * lambda), nu(HalfIntegerOrder::from_dimension(n_)) {
        c = std::pow(2.0 * std::numbers::pi, -0.5 * n) * std::pow(kappa, nu.value());
    }

    // Y, Y', Y'' of the radial Yukawa part, each times e^{k x_1}.
    void radial(const Point& x, double& y0, double& y1, double& y2) const {
        double r = x.norm();
        double damp = std::exp(kappa * (x(0) - r));
        double rn = std::pow(r, -nu.value());
        y0 = c * rn * bessel_k_scaled(nu, kappa * r) * damp;
        y1 = -c * kappa * rn * bessel_k_scaled(nu.plus_one(), kappa * r) * damp;
        y2 = kappa * kappa * y0 - (n - 1) * y1 / r;
    }

    double value(const Point& x) const {
        double a, b, d;
        radial(x, a, b, d);
        return a;
    }

    Point gradient(const Point& x) const {
        double y0, y1, y2;
        radial(x, y0, y1, y2);
        Point g = (y1 / x.norm()) * x;
        g(0) += kappa * y0;
        return g;
    }

    RealMatrix hessian(const Point& x) const {
        double y0, y1, y2;
        radial(x, y0, y1, y2);
        double r = x.norm();
        Point e = x / r;
        RealMatrix h = (y2 - y1 / r) * (e * e.transpose());
        h.diagonal().array() += y1 / r;
        Point gy = y1 * e;
        h.row(0) += kappa * gy.transpose();
        h.col(0) += kappa * gy;
        h(0, 0) += kappa * kappa * y0;
        return h;
    }
};

// D_ij = int_{x_1}^inf dd_ij (Gamma_L - u) dy_1 for i, j >= 2, by quadrature.
inline RealMatrix oseen_trailing_block_quadrature(const Point& x, int n, double lambda) {
    OseenPotential u(n, lambda);
    const int m = n - 1;
    double rho = x.tail(m).norm();
    auto integrand = [&](double y1) -> RealMatrix {
        Point y = x;
        y(0) = y1;
        RealMatrix h = laplace_hessian(y, n) - u.hessian(y);
        return h.bottomRightCorner(m, m);
    };
    // Breakpoints: geometric around the closest approach y_1 = 0 at scale rho,
    // then outward far beyond the wake length 1/lambda.
    double scale = rho > 0.0 ? rho : x(0);
    double far = 1e10 * std::max({scale, 1.0 / lambda, std::abs(x(0)), 1.0});
    std::vector<double> bp;
    for (double s = 0.25 * scale; s < far; s *= 2.0) {
        bp.push_back(s);
        if (s < -x(0)) bp.push_back(-s);
    }
    bp.push_back(0.0);
    std::erase_if(bp, [&](double v) { return v <= x(0); });
    bp.push_back(x(0));
    std::sort(bp.begin(), bp.end());

    double ref = 1.0 / (unit_sphere_area(n) * std::pow(std::max(rho, 1e-3 * x.norm()), n - 1));
    RealMatrix acc = RealMatrix::Zero(m, m);
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double a = bp[i], b = bp[i + 1];
        if (b <= a) continue;
        acc += integrate_adaptive(integrand, a, b, 1e-14 * ref, 1e-12, 200);
    }
    // Algebraic tail beyond the last breakpoint.
    double yb = bp.back();
    RealMatrix fb = integrand(yb), fh = integrand(0.5 * yb);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double a = fb(i, j), b = fh(i, j);
            if (a == 0.0 || b == 0.0 || a * b < 0.0) continue;
            double p = std::log2(b / a);
            if (p > 1.0) acc(i, j) += a * yb / (p - 1.0);
        }
    return acc;
}

// n = 3: Phi = Ein(lambda s / 2) / (4 pi) with s = |x| - x_1, differentiated in closed form.
inline RealMatrix oseen_hessian_3d(const Point& x, double lambda) {
    const double a = 0.5 * lambda, c = 1.0 / (4.0 * std::numbers::pi);
    double r = x.norm(), rho2 = x.tail(2).squaredNorm();
    double s = x(0) > 0.0 ? rho2 / (r + x(0)) : r - x(0);
    double z = a * s;
    double f1, f2;  // F'(s), F''(s)
    if (z < 0.5) {
        // (1 - e^{-z}) / z = sum_{m>=1} (-1)^{m+1} z^{m-1} / m!
        // (z e^{-z} - (1 - e^{-z})) / z^2 = sum_{m>=2} (-1)^m (1 - m) z^{m-2} / m!
        double e1 = 0.0, e2 = 0.0, fact = 1.0;
        double p1 = 1.0, p2 = 0.0;  // z^{m-1}, z^{m-2}
        for (int m = 1; m <= 26; ++m) {
            fact *= m;
            double sg = (m % 2) ? -1.0 : 1.0;  // (-1)^m
            e1 -= sg * p1 / fact;
            if (m >= 2) e2 += sg * (1.0 - m) * p2 / fact;
            p2 = p1;
            p1 *= z;
        }
        f1 = c * a * e1;
        f2 = c * a * a * e2;
    } else {
        double em = std::exp(-z);
        f1 = c * (-std::expm1(-z)) / s;
        f2 = c * (z * em + std::expm1(-z)) / (s * s);
    }
    Point ds = x / r;
    ds(0) = -s / r;
    RealMatrix dds = -(x * x.transpose()) / (r * r * r);
    dds.diagonal().array() += 1.0 / r;
    return f2 * ds * ds.transpose() + f1 * dds;
}

// Oseen tensor for lambda > 0.
inline RealMatrix gamma_oseen_positive(const Point& x, int n, double lambda) {
    OseenPotential u(n, lambda);
    double rho = x.tail(n - 1).norm();
    if (rho == 0.0 && x(0) <= 0.0)
        throw SingularSegmentError("gamma_oseen: integration ray through the origin (x' = 0, x_1 <= 0)");

    RealMatrix d(n, n);
    Point g = laplace_gradient(x, n) - u.gradient(x);
    for (int j = 0; j < n; ++j) {
        d(0, j) = -g(j);
        d(j, 0) = -g(j);
    }
    if (n == 2) {
        // Delta Phi = lambda u away from the origin
        d(1, 1) = lambda * u.value(x) - d(0, 0);
    } else if (n == 3) {
        d.bottomRightCorner(2, 2) = oseen_hessian_3d(x, lambda).bottomRightCorner(2, 2);
    } else {
        d.bottomRightCorner(n - 1, n - 1) = oseen_trailing_block_quadrature(x, n, lambda);
    }

    RealMatrix g0 = -d;
    g0.diagonal().array() += d.trace();
    return g0 / lambda;
}

}  // namespace detail

/// Gamma_L: -(1/2pi) log|x| (n = 2), |x|^{2-n}/((n-2) omega_n) (n > 2). Satisfies -Delta Gamma_L = delta.
inline double gamma_laplace(const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "gamma_laplace");
    double r = x.norm();
    if (p.n == 2) return -std::log(r) / (2.0 * std::numbers::pi);
    return std::pow(r, 2.0 - p.n) / ((p.n - 2) * unit_sphere_area(p.n));
}

inline RealMatrix gamma_stokes(const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "gamma_stokes");
    const int n = p.n;
    double r = x.norm();
    double w = unit_sphere_area(n);
    RealMatrix g = (x * x.transpose()) / (2.0 * w * std::pow(r, n));
    double diag = n == 2 ? -std::log(r) / (4.0 * std::numbers::pi) : std::pow(r, 2.0 - n) / (2.0 * w * (n - 2));
    g.diagonal().array() += diag;
    return g;
}

/// Psi(x) = -(1/2pi) (lambda/(4 pi |x|))^nu K_nu(lambda |x|/2) e^{-lambda x_1/2}; lambda < 0 by reflection.
inline double psi_oseen(const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "psi_oseen");
    if (p.lambda == 0.0) throw DomainError("psi_oseen: lambda must be nonzero");
    if (p.lambda < 0.0) {
        KernelParams q = p;
        q.lambda = -p.lambda;
        return psi_oseen(detail::reflect1(x), q);
    }
    detail::OseenPotential u(p.n, p.lambda);
    return -u.value(detail::reflect1(x));
}

/// Steady Oseen tensor. lambda < 0 by reflection x_1 -> -x_1.
inline RealMatrix gamma_oseen(const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "gamma_oseen");
    if (p.lambda == 0.0) throw DomainError("gamma_oseen: lambda must be nonzero");
    if (p.lambda < 0.0) return detail::reflect1(detail::gamma_oseen_positive(detail::reflect1(x), p.n, -p.lambda));
    return detail::gamma_oseen_positive(x, p.n, p.lambda);
}

/// Steady velocity kernel: Stokes for lambda = 0, Oseen otherwise.
inline RealMatrix gamma_steady(const Point& x, const KernelParams& p) {
    return p.is_stokes() ? gamma_stokes(x, p) : gamma_oseen(x, p);
}

inline Point pressure_kernel(const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "pressure_kernel");
    return x / (unit_sphere_area(p.n) * std::pow(x.norm(), p.n));
}

}  // namespace tpk
