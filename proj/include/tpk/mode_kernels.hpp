#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <list>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "tpk/errors.hpp"
#include "tpk/quadrature.hpp"
#include "tpk/special_functions.hpp"
#include "tpk/steady_kernels.hpp"
#include "tpk/unsteady_kernel.hpp"

namespace tpk {

/// alpha(k) = (lambda/2)^2 + i beta k and its upper-half-plane root of -alpha.
struct Alpha {
    int k = 0;
    cplx value;
    cplx root;
};

inline Alpha alpha(int k, const KernelParams& p) {
    p.validate();
    Alpha a;
    a.k = k;
    a.value = cplx(0.25 * p.lambda * p.lambda, p.beta() * k);
    a.root = sqrt_upper(-a.value);
    return a;
}

/// g(k) = |lambda|/2 - Im sqrt(-alpha(k)) < 0.
inline double spectral_gap(int k, const KernelParams& p) {
    if (k == 0) throw DomainError("spectral_gap: k = 0");
    return 0.5 * std::abs(p.lambda) - alpha(k, p).root.imag();
}

/// Same quantity through the real closed formula for Im sqrt(-alpha).
inline double spectral_gap_closed_form(int k, const KernelParams& p) {
    if (k == 0) throw DomainError("spectral_gap_closed_form: k = 0");
    p.validate();
    double bk = p.beta() * std::abs(k);
    double im;
    if (p.lambda == 0.0) {
        im = std::sqrt(0.5 * bk);
    } else {
        double h = 0.5 * std::abs(p.lambda);
        double ratio = bk / (h * h);
        im = h * std::sqrt(0.5) * std::sqrt(std::sqrt(1.0 + ratio * ratio) + 1.0);
    }
    return 0.5 * std::abs(p.lambda) - im;
}

namespace detail {

// Radial Helmholtz kernel f(r) = (i/4)(kappa/(2 pi r))^nu H_nu(kappa r) with f', f''.
struct HelmholtzRadial {
    cplx f, d1, d2;
};

inline HelmholtzRadial helmholtz_radial(const Alpha& a, double r, int n) {
    const cplx I(0.0, 1.0);
    auto nu = HalfIntegerOrder::from_dimension(n);
    cplx kap = a.root;
    cplx z = kap * r;
    cplx pre = 0.25 * I * std::pow(kap / (2.0 * std::numbers::pi * r), nu.value());
    HelmholtzRadial out;
    out.f = pre * hankel1(nu, z);
    out.d1 = -pre * kap * hankel1(nu.plus_one(), z);
    out.d2 = a.value * out.f - double(n - 1) * out.d1 / r;
    return out;
}

// Hessian of a radial function with profile derivatives (d1, d2).
template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> radial_hessian(const Point& x, S d1, S d2) {
    double r = x.norm();
    Point e = x / r;
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> h = (d2 - d1 / r) * (e * e.transpose()).template cast<S>();
    h.diagonal().array() += d1 / r;
    return h;
}

inline void check_mode(int k, const char* who) {
    if (k == 0) throw DomainError(std::string(who) + ": k = 0");
}

}  // namespace detail

/// Gamma^alpha_H(x) = (i/4)(sqrt(-alpha)/(2 pi |x|))^nu H^(1)_nu(sqrt(-alpha)|x|).
inline cplx gamma_helmholtz(const Alpha& a, const Point& x, const KernelParams& p) {
    p.validate();
    detail::check_point(x, p, "gamma_helmholtz");
    if (a.value.imag() == 0.0 && !(a.value.real() > 0.0))
        throw DomainError("gamma_helmholtz: alpha must be non-real or real positive");
    return detail::helmholtz_radial(a, x.norm(), p.n).f;
}

/// Gamma^{k,lambda}_H(x) = Gamma^alpha_H(x) e^{lambda x_1/2}: fundamental solution of -Delta + lambda d_1 + i beta k.
inline cplx gamma_mode(int k, const Point& x, const KernelParams& p) {
    detail::check_mode(k, "gamma_mode");
    cplx v = gamma_helmholtz(alpha(k, p), x, p);
    if (p.lambda == 0.0) return v;
    return v * std::exp(0.5 * p.lambda * x(0));
}

enum class ConvMethod { partial_fractions, grid_fft, quadrature };

inline const char* to_string(ConvMethod m) {
    switch (m) {
        case ConvMethod::partial_fractions: return "partial_fractions";
        case ConvMethod::grid_fft: return "grid_fft";
        case ConvMethod::quadrature: return "quadrature";
    }
    return "?";
}

struct ConvResult {
    cplx value;
    ConvMethod method;
    bool off_grid = false;  // grid_fft: point not on a node, evaluated by direct trigonometric sum
};

/// Periodic box for the grid_fft backend. The Laplace factor is the truncated Green's function
/// Gamma_L 1_{|y| < truncation}, which makes the periodic result equal the free-space one inside
/// |x| < box - truncation - (decay length of the Helmholtz factor).
struct GridFftConfig {
    double box = 48.0;
    int points = 192;
    double truncation = 24.0;

    static GridFftConfig for_mode(int k, const KernelParams& p, double max_radius = 4.0, double spacing = 0.25) {
        double decay = 14.0 / std::abs(spectral_gap(k, p));  // e^{-14} ~ 1e-6
        // Dyadic refinement keeps coarse nodes on the grid while resolving the Helmholtz scale.
        for (double kr = std::abs(alpha(k, p).root); kr > std::sqrt(2.0) + 1e-12; kr *= 0.5) spacing *= 0.5;
        GridFftConfig c;
        c.truncation = max_radius + decay;
        c.box = 2.0 * c.truncation;
        c.points = 2 * int(std::ceil(0.5 * c.box / spacing));
        c.box = c.points * spacing;
        return c;
    }
    double spacing() const { return box / points; }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Fourier transform of Gamma_L restricted to |y| < D.
inline double truncated_laplace_symbol(double rho, double D, int n) {
    if (n == 2) {
        if (rho == 0.0) return 0.25 * D * D * (1.0 - 2.0 * std::log(D));
        return (1.0 - std::cyl_bessel_j(0.0, D * rho)) / (rho * rho) - D * std::log(D) * std::cyl_bessel_j(1.0, D * rho) / rho;
    }
    if (n == 3) {
        if (rho == 0.0) return 0.5 * D * D;
        return (1.0 - std::cos(D * rho)) / (rho * rho);
    }
    throw MethodUnavailableError("grid_fft: only n = 2, 3 are supported");
}

class GridFftTable {
public:
    GridFftTable(int k, const KernelParams& p, const GridFftConfig& c) : k_(k), p_(p), c_(c) {
        const int n = p.n, N = c.points;
        if (N < 4 || N % 2) throw DomainError("grid_fft: points must be even and >= 4");
        std::size_t total = 1;
        for (int i = 0; i < n; ++i) total *= N;
        data_.resize(total);
        std::vector<int> idx(n, 0);
        for (std::size_t q = 0; q < total; ++q) {
            std::size_t rem = q;
            for (int i = n - 1; i >= 0; --i) {
                idx[i] = int(rem % N);
                rem /= N;
            }
            data_[q] = symbol(idx) / std::pow(c.box, n);
        }
        std::vector<int> dims(n, N);
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            auto* ptr = reinterpret_cast<fftw_complex*>(data_.data());
            plan = fftw_plan_dft(n, dims.data(), ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
    }

    bool matches(int k, const KernelParams& p, const GridFftConfig& c) const {
        return k == k_ && p.n == p_.n && p.lambda == p_.lambda && p.period == p_.period && c.box == c_.box &&
               c.points == c_.points && c.truncation == c_.truncation;
    }

    ConvResult value(const Point& x) const {
        const int n = p_.n, N = c_.points;
        const double h = c_.spacing();
        std::size_t q = 0;
        bool on_grid = true;
        for (int i = 0; i < n; ++i) {
            double m = x(i) / h;
            double mr = std::round(m);
            if (std::abs(m - mr) > 1e-9 || std::abs(mr) >= N / 2) {
                on_grid = false;
                break;
            }
            int id = int(mr);
            if (id < 0) id += N;
            q = q * N + id;
        }
        if (on_grid) return {data_[q], ConvMethod::grid_fft, false};
        // Direct evaluation of the trigonometric interpolant.
        std::size_t total = data_.size();
        std::vector<int> idx(n, 0);
        cplx sum = 0.0;
        for (std::size_t s = 0; s < total; ++s) {
            std::size_t rem = s;
            double phase = 0.0;
            for (int i = n - 1; i >= 0; --i) {
                idx[i] = int(rem % N);
                rem /= N;
                int m = idx[i] < N / 2 ? idx[i] : idx[i] - N;
                phase += 2.0 * std::numbers::pi * m / c_.box * x(i);
            }
            sum += symbol(idx) * std::polar(1.0, phase);
        }
        return {sum / std::pow(c_.box, n), ConvMethod::grid_fft, true};
    }

private:
    cplx symbol(const std::vector<int>& idx) const {
        const int N = c_.points;
        double rho2 = 0.0, xi1 = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            int m = idx[i] < N / 2 ? idx[i] : idx[i] - N;
            double xi = 2.0 * std::numbers::pi * m / c_.box;
            rho2 += xi * xi;
            if (i == 0) xi1 = xi;
        }
        double tl = truncated_laplace_symbol(std::sqrt(rho2), c_.truncation, p_.n);
        return tl / cplx(rho2, p_.beta() * k_ + p_.lambda * xi1);
    }

    int k_;
    KernelParams p_;
    GridFftConfig c_;
    std::vector<cplx> data_;
};

// Small shared cache; tables are immutable once built.
inline std::shared_ptr<const GridFftTable> grid_fft_table(int k, const KernelParams& p, const GridFftConfig& c) {
    static std::mutex mu;
    static std::list<std::shared_ptr<const GridFftTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    for (auto& t : cache)
        if (t->matches(k, p, c)) return t;
    auto t = std::make_shared<const GridFftTable>(k, p, c);
    cache.push_front(t);
    if (cache.size() > 2) cache.pop_back();
    return t;
}

// Real-space quadrature of (Gamma_L * Gamma^{k,lambda}_H)(x), polar coordinates (u = |y|, theta)
// about the axis through 0 and x. In 3D the azimuth integral of e^{lambda y_1/2} is 2 pi e^{ka} I_0(kb)
// and the variable rho = |x - y| absorbs the Laplace singularity.
inline cplx conv_quadrature(int k, const Point& x, const KernelParams& p) {
    const int n = p.n;
    if (n != 2 && n != 3) throw MethodUnavailableError("conv quadrature: only n = 2, 3 are supported");
    Alpha a = alpha(k, p);
    const double pi = std::numbers::pi;
    const double d = x.norm();
    const double kap = 0.5 * p.lambda;
    Point e = x / d;
    double e1 = e(0);                                  // e . e_1
    double e1perp = std::sqrt(std::max(0.0, 1.0 - e1 * e1));  // |e_1 - (e.e_1) e|
    const double umax = d + 34.0 / std::abs(spectral_gap(k, p));
    double wave = 2.0 * pi / std::max(std::abs(a.root.real()), 1e-3);
    double step = std::min({1.0, 0.5 * wave, 0.5 * d});

    std::vector<double> ub{0.0};
    // Grade toward u = 0 (Helmholtz singularity) and u = d where the kernels' singular points meet.
    for (double s = 1e-6 * d; s < 0.25 * d; s *= 4.0) ub.push_back(s);
    for (double s = 0.5 * d; s > 1e-4 * d; s *= 0.5) ub.push_back(d - s);
    ub.push_back(d);
    for (double s = 1e-4 * d; s < 0.5 * d; s *= 2.0) ub.push_back(d + s);
    for (double u = 1.5 * d; u < umax; u += step) ub.push_back(u);
    ub.push_back(umax);
    std::sort(ub.begin(), ub.end());

    const GaussRule& gu = gauss_legendre(12);
    cplx total = 0.0;
    if (n == 3) {
        const GaussRule& gr = gauss_legendre(24);
        for (std::size_t i = 0; i + 1 < ub.size(); ++i) {
            double ua = ub[i], ubb = ub[i + 1], uc = 0.5 * (ua + ubb), uh = 0.5 * (ubb - ua);
            for (int iu = 0; iu < 12; ++iu) {
                double u = uc + uh * gu.nodes[iu];
                cplx fh = detail::helmholtz_radial(a, u, 3).f;
                double rlo = std::abs(u - d), rhi = u + d, rc = 0.5 * (rlo + rhi), rh = 0.5 * (rhi - rlo);
                double inner = 0.0;
                cplx inner_c = 0.0;
                for (int ir = 0; ir < 24; ++ir) {
                    double rho = rc + rh * gr.nodes[ir];
                    double ye = (u * u + d * d - rho * rho) / (2.0 * d);
                    double q = std::sqrt(std::max(0.0, u * u - ye * ye));
                    // (rho u / d) Gamma_L(rho) = u/(4 pi d)
                    double az = kap == 0.0 ? 2.0 * pi
                                           : 2.0 * pi * std::exp(kap * ye * e1) * std::cyl_bessel_i(0.0, kap * q * e1perp);
                    inner += rh * gr.weights[ir] * az;
                }
                inner_c = inner * u / (4.0 * pi * d);
                total += uh * gu.weights[iu] * fh * inner_c;
            }
        }
        return total;
    }
    // n = 2: y = u(cos t e + sin t e_perp); graded theta panels toward t = 0 where y = x.
    Point eperp(2);
    eperp << -e(1), e(0);
    std::vector<double> tb{0.0};
    for (double s = 1e-6; s < pi / 4; s *= 2.0) tb.push_back(s);
    tb.push_back(pi / 4);
    tb.push_back(pi / 2);
    tb.push_back(pi);
    const GaussRule& gt = gauss_legendre(12);
    for (std::size_t i = 0; i + 1 < ub.size(); ++i) {
        double ua = ub[i], ubb = ub[i + 1], uc = 0.5 * (ua + ubb), uh = 0.5 * (ubb - ua);
        for (int iu = 0; iu < 12; ++iu) {
            double u = uc + uh * gu.nodes[iu];
            cplx fh = detail::helmholtz_radial(a, u, 2).f;
            double inner = 0.0;
            for (std::size_t j = 0; j + 1 < tb.size(); ++j) {
                double tc = 0.5 * (tb[j] + tb[j + 1]), th = 0.5 * (tb[j + 1] - tb[j]);
                for (int it = 0; it < 12; ++it) {
                    double t = tc + th * gt.nodes[it];
                    double rho2 = u * u + d * d - 2.0 * u * d * std::cos(t);
                    double gl = -std::log(rho2) / (4.0 * pi);
                    double c = std::cos(t), s = std::sin(t);
                    // mirror points +-t
                    double y1p = u * (c * e(0) + s * eperp(0)), y1m = u * (c * e(0) - s * eperp(0));
                    double w = kap == 0.0 ? 2.0 : std::exp(kap * y1p) + std::exp(kap * y1m);
                    inner += th * gt.weights[it] * gl * w;
                }
            }
            total += uh * gu.weights[iu] * fh * inner * u;
        }
    }
    return total;
}

// G^k for lambda = 0, k > 0: [-dd Gamma_L - delta alpha Gamma_H + dd Gamma_H]/(i beta k).
inline ComplexMatrix mode_tensor_stokes(int k, const Point& x, const KernelParams& p) {
    Alpha a = alpha(k, p);
    auto hr = helmholtz_radial(a, x.norm(), p.n);
    ComplexMatrix hh = radial_hessian<cplx>(x, hr.d1, hr.d2);
    ComplexMatrix g = hh - laplace_hessian(x, p.n).cast<cplx>();
    g.diagonal().array() -= a.value * hr.f;
    return g / cplx(0.0, p.beta() * k);
}

}  // namespace detail

/// (Gamma_L * Gamma^{k,lambda}_H)(x).
inline ConvResult conv_laplace_mode(int k, const Point& x, const KernelParams& p, ConvMethod method,
                                    const GridFftConfig* config = nullptr) {
    p.validate();
    detail::check_mode(k, "conv_laplace_mode");
    detail::check_point(x, p, "conv_laplace_mode");
    if (k < 0) {
        ConvResult r = conv_laplace_mode(-k, x, p, method, config);
        r.value = std::conj(r.value);
        return r;
    }
    switch (method) {
        case ConvMethod::partial_fractions: {
            if (p.lambda != 0.0) throw MethodUnavailableError("partial_fractions requires lambda = 0");
            cplx v = (gamma_laplace(x, p) - gamma_helmholtz(alpha(k, p), x, p)) / cplx(0.0, p.beta() * k);
            return {v, method, false};
        }
        case ConvMethod::grid_fft: {
            GridFftConfig c = config ? *config : GridFftConfig::for_mode(k, p, std::max(4.0, x.norm()));
            return detail::grid_fft_table(k, p, c)->value(x);
        }
        case ConvMethod::quadrature:
            return {detail::conv_quadrature(k, x, p), method, false};
    }
    throw MethodUnavailableError("conv_laplace_mode: unknown method");
}

/// G^k(x) = (delta Delta - dd)(Gamma_L * Gamma^{k,lambda}_H)(x), optionally with its spatial gradient.
/// lambda = 0: closed form (gradient by Richardson-extrapolated differences);
/// lambda != 0: G^k = -M_k with M_k the semigroup integral (gradient under the integral).
inline KernelDerivs mode_tensor_derivs(int k, const Point& x, const KernelParams& p, bool with_gradient) {
    p.validate();
    detail::check_mode(k, "mode_tensor");
    detail::check_point(x, p, "mode_tensor");
    if (k < 0) {
        KernelDerivs d = mode_tensor_derivs(-k, x, p, with_gradient);
        d.value = d.value.conjugate();
        for (auto& g : d.gradient) g = g.conjugate();
        return d;
    }
    KernelDerivs out;
    if (p.lambda == 0.0) {
        out.value = detail::mode_tensor_stokes(k, x, p);
        if (with_gradient) {
            double h = 1e-2 * x.norm();
            out.gradient.resize(p.n);
            for (int m = 0; m < p.n; ++m) {
                auto cd = [&](double s) {
                    Point a = x, b = x;
                    a(m) += s;
                    b(m) -= s;
                    return ComplexMatrix((detail::mode_tensor_stokes(k, a, p) - detail::mode_tensor_stokes(k, b, p)) / (2 * s));
                };
                ComplexMatrix d1 = cd(h), d2 = cd(h / 2), d4 = cd(h / 4);
                ComplexMatrix r1 = (4.0 * d2 - d1) / 3.0, r2 = (4.0 * d4 - d2) / 3.0;
                out.gradient[m] = (16.0 * r2 - r1) / 15.0;
            }
        }
        return out;
    }
    KernelDerivs m = semigroup_mode(k, x, p, with_gradient);
    out.value = -m.value;
    for (auto& g : m.gradient) out.gradient.push_back(-g);
    return out;
}

inline ComplexMatrix mode_tensor(int k, const Point& x, const KernelParams& p) {
    return mode_tensor_derivs(k, x, p, false).value;
}

struct ModeKernelSample {
    int k = 0;
    Point x;
    cplx conv;
    ComplexMatrix second_derivs;
    ComplexMatrix g;
};

/// Full sample. conv by partial fractions (lambda = 0) or real-space quadrature (lambda != 0).
inline ModeKernelSample mode_kernel(int k, const Point& x, const KernelParams& p) {
    ModeKernelSample s;
    s.k = k;
    s.x = x;
    s.g = mode_tensor(k, x, p);
    const int n = p.n;
    // g = delta tr D - D  =>  tr D = tr g/(n - 1), D = delta tr D - g
    cplx trd = s.g.trace() / double(n - 1);
    s.second_derivs = -s.g;
    s.second_derivs.diagonal().array() += trd;
    ConvMethod m = p.lambda == 0.0 ? ConvMethod::partial_fractions : ConvMethod::quadrature;
    s.conv = conv_laplace_mode(k, x, p, m).value;
    return s;
}

}  // namespace tpk
