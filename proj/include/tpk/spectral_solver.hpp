#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpk/errors.hpp"
#include "tpk/mode_kernels.hpp"
#include "tpk/parallel.hpp"
#include "tpk/periodic_kernel.hpp"
#include "tpk/quadrature.hpp"
#include "tpk/steady_kernels.hpp"

namespace tpk {

using ComplexVector = Eigen::VectorXcd;

enum class Representation { physical, fourier };

inline const char* to_string(Representation r) { return r == Representation::physical ? "physical" : "fourier"; }

/// Uniform grid on [0, T) x [-L/2, L/2)^n.
struct GridSpec {
    double period = 2.0 * std::numbers::pi;
    double box_edge = 16.0;
    int n_t = 8;
    int n_x = 32;
    int n = 3;

    void validate() const {
        if (n < 2 || n > 8) throw DomainError("GridSpec: n must be in [2, 8]");
        if (n_t < 4 || n_t % 2) throw DomainError("GridSpec: n_t must be even and >= 4");
        if (n_x < 4 || n_x % 2) throw DomainError("GridSpec: n_x must be even and >= 4");
        if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("GridSpec: period must be > 0");
        if (!(box_edge > 0.0) || !std::isfinite(box_edge)) throw DomainError("GridSpec: box_edge must be > 0");
    }
    double spacing() const { return box_edge / n_x; }
    double time_step() const { return period / n_t; }
    std::size_t spatial_points() const {
        std::size_t s = 1;
        for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(n_x);
        return s;
    }
    // signed index of FFT slot i
    static int wrap(int i, int N) { return i < N / 2 ? i : i - N; }
    double wavenumber(int i) const { return 2.0 * std::numbers::pi * wrap(i, n_x) / box_edge; }
    double coordinate(int i) const { return -0.5 * box_edge + i * spacing(); }
    int frequency_index(int it) const { return wrap(it, n_t); }

    /// Multi-index of a row-major spatial slot (axis 0 slowest).
    void unravel(std::size_t s, int* idx) const {
        for (int a = n - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(s % n_x);
            s /= n_x;
        }
    }
    Point position(std::size_t s) const {
        std::array<int, 8> idx{};
        unravel(s, idx.data());
        Point x(n);
        for (int a = 0; a < n; ++a) x(a) = coordinate(idx[a]);
        return x;
    }
    Point xi(std::size_t s) const {
        std::array<int, 8> idx{};
        unravel(s, idx.data());
        Point v(n);
        for (int a = 0; a < n; ++a) v(a) = wavenumber(idx[a]);
        return v;
    }
    bool is_nyquist(int it, std::size_t s) const {
        if (it == n_t / 2) return true;
        std::array<int, 8> idx{};
        unravel(s, idx.data());
        for (int a = 0; a < n; ++a)
            if (idx[a] == n_x / 2) return true;
        return false;
    }
};

/// Values laid out row-major as (n_t, n_x, ..., n_x, components).
struct TPField {
    int n = 0;
    int n_t = 0;
    int n_x = 0;
    int components = 0;
    Representation representation = Representation::physical;
    std::vector<cplx> values;

    static TPField zeros(const GridSpec& g, int components, Representation r = Representation::physical) {
        g.validate();
        if (components < 1) throw ContractError("TPField: components must be >= 1");
        TPField f;
        f.n = g.n;
        f.n_t = g.n_t;
        f.n_x = g.n_x;
        f.components = components;
        f.representation = r;
        f.values.assign(static_cast<std::size_t>(g.n_t) * g.spatial_points() * components, cplx(0.0));
        return f;
    }

    std::size_t spatial_points() const {
        std::size_t s = 1;
        for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(n_x);
        return s;
    }
    std::size_t offset(int it, std::size_t s, int c = 0) const {
        return (static_cast<std::size_t>(it) * spatial_points() + s) * components + c;
    }
    cplx& at(int it, std::size_t s, int c = 0) { return values[offset(it, s, c)]; }
    const cplx& at(int it, std::size_t s, int c = 0) const { return values[offset(it, s, c)]; }

    void check(const GridSpec& g, const char* who) const {
        if (n != g.n || n_t != g.n_t || n_x != g.n_x)
            throw ContractError(std::string(who) + ": field shape does not match grid");
        if (values.size() != static_cast<std::size_t>(n_t) * spatial_points() * components)
            throw ContractError(std::string(who) + ": value count does not match shape");
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double max_imag() const {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v.imag()));
        return m;
    }
};

/// Time-independent field on the spatial grid, (n_x, ..., n_x, components).
struct SpatialField {
    int n = 0;
    int n_x = 0;
    int components = 0;
    std::vector<cplx> values;
    cplx& at(std::size_t s, int c) { return values[s * components + c]; }
    const cplx& at(std::size_t s, int c) const { return values[s * components + c]; }
};

namespace detail {

// Unnormalized multi-dimensional DFT over (t, x_1..x_n), one transform per component.
inline void fft_inplace(std::vector<cplx>& data, const GridSpec& g, int components, int sign) {
    std::vector<int> dims(g.n + 1, g.n_x);
    dims[0] = g.n_t;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_many_dft(g.n + 1, dims.data(), components, buf, nullptr, components, 1, buf, nullptr,
                                  components, 1, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft_inplace: FFTW planning failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

inline int parity_sign(const GridSpec& g, std::size_t s) {
    std::array<int, 8> idx{};
    g.unravel(s, idx.data());
    int sum = 0;
    for (int a = 0; a < g.n; ++a) sum += idx[a];
    return sum % 2 ? -1 : 1;
}

inline void check_params(const KernelParams& p, const GridSpec& g, const char* who) {
    p.validate();
    g.validate();
    if (p.n != g.n) throw ContractError(std::string(who) + ": params.n does not match grid.n");
    if (std::abs(p.period - g.period) > 1e-12 * g.period)
        throw ContractError(std::string(who) + ": params.period does not match grid.period");
}

template <class ModeFn>
void for_each_mode(const GridSpec& g, ModeFn&& fn) {
    const std::size_t ns = g.spatial_points();
    parallel_for(static_cast<std::size_t>(g.n_t), [&](std::size_t it) {
        for (std::size_t s = 0; s < ns; ++s) fn(static_cast<int>(it), s);
    });
}

}  // namespace detail

/// Forward transform: normalized time mean and h^n-weighted spatial sum with e^{-i x.xi}.
inline TPField dft_forward(const TPField& field, const GridSpec& g) {
    g.validate();
    field.check(g, "dft_forward");
    if (field.representation != Representation::physical) throw ContractError("dft_forward: field is not physical");
    TPField out = field;
    detail::fft_inplace(out.values, g, out.components, FFTW_FORWARD);
    const double scale = std::pow(g.spacing(), g.n) / g.n_t;
    const std::size_t ns = g.spatial_points();
    for (int it = 0; it < g.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s) {
            // x_i = -L/2 + i h contributes e^{i pi m}
            double f = scale * detail::parity_sign(g, s);
            for (int c = 0; c < out.components; ++c) out.at(it, s, c) *= f;
        }
    out.representation = Representation::fourier;
    return out;
}

/// Exact inverse of dft_forward.
inline TPField dft_inverse(const TPField& field, const GridSpec& g) {
    g.validate();
    field.check(g, "dft_inverse");
    if (field.representation != Representation::fourier) throw ContractError("dft_inverse: field is not in Fourier form");
    TPField out = field;
    const double scale = 1.0 / std::pow(g.box_edge, g.n);
    const std::size_t ns = g.spatial_points();
    for (int it = 0; it < g.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s) {
            double f = scale * detail::parity_sign(g, s);
            for (int c = 0; c < out.components; ++c) out.at(it, s, c) *= f;
        }
    detail::fft_inplace(out.values, g, out.components, FFTW_BACKWARD);
    out.representation = Representation::physical;
    return out;
}

inline cplx full_resolvent(int k, const Point& xi, const KernelParams& p) {
    double xx = xi.squaredNorm();
    if (k == 0 && xx == 0.0) throw ZeroModeError("full_resolvent: (k, xi) = (0, 0)");
    return 1.0 / cplx(xx, p.beta() * k + p.lambda * xi(0));
}

inline cplx multiplier_m(int k, const Point& xi, const KernelParams& p) {
    if (k == 0) return 0.0;
    return full_resolvent(k, xi, p);
}

struct Projection {
    ComplexVector value;
    bool zero_mode = false;
};

inline Projection helmholtz_project(const Point& xi, const ComplexVector& v) {
    if (xi.size() != v.size()) throw ContractError("helmholtz_project: dimension mismatch");
    double xx = xi.squaredNorm();
    if (xx == 0.0) return {v, true};
    cplx d = 0.0;
    for (int i = 0; i < xi.size(); ++i) d += xi(i) * v(i);
    ComplexVector out = v - xi.cast<cplx>() * (d / xx);
    return {out, false};
}

struct ZeroModeReport {
    std::vector<double> mean_force;  // spatial and time mean of f
    bool velocity_mode_zeroed = true;
    bool pressure_mean_zeroed = true;
    double nyquist_energy_fraction = 0.0;  // removed before solving
    std::string policy = "u(0,0) = 0, spatial mean of p = 0, Nyquist modes of f removed";
};

struct SolveResult {
    TPField u;
    TPField p;
    double residual_linf = 0.0;    // max |A(u,p) - f'| / max |f'|, f' = f without zero and Nyquist modes
    double divergence_linf = 0.0;  // max |div u| / (xi_Nyquist max |u|)
    ZeroModeReport zero_mode_report;
};

namespace detail {

// A(u, p) on Fourier coefficients.
inline TPField apply_symbol(const TPField& U, const TPField& P, const KernelParams& p, const GridSpec& g) {
    TPField out = TPField::zeros(g, g.n, Representation::fourier);
    for_each_mode(g, [&](int it, std::size_t s) {
        Point xi = g.xi(s);
        cplx sym(xi.squaredNorm(), p.beta() * g.frequency_index(it) + p.lambda * xi(0));
        for (int c = 0; c < g.n; ++c) out.at(it, s, c) = sym * U.at(it, s, c) + cplx(0.0, xi(c)) * P.at(it, s);
    });
    return out;
}

inline void drop_imaginary(TPField& f) {
    for (auto& v : f.values) v = v.real();
}

}  // namespace detail

inline TPField operator_apply(const TPField& u, const TPField& pr, const KernelParams& p, const GridSpec& g) {
    detail::check_params(p, g, "operator_apply");
    u.check(g, "operator_apply");
    pr.check(g, "operator_apply");
    if (u.components != g.n || pr.components != 1) throw ContractError("operator_apply: need n velocity and 1 pressure component");
    if (u.representation != pr.representation) throw ContractError("operator_apply: representations differ");
    if (u.representation == Representation::fourier) return detail::apply_symbol(u, pr, p, g);
    return dft_inverse(detail::apply_symbol(dft_forward(u, g), dft_forward(pr, g), p, g), g);
}

inline SolveResult solve_tp(const TPField& f, const KernelParams& p, const GridSpec& g) {
    detail::check_params(p, g, "solve_tp");
    f.check(g, "solve_tp");
    if (f.representation != Representation::physical) throw ContractError("solve_tp: forcing must be physical");
    if (f.components != g.n) throw ContractError("solve_tp: forcing must have n components");
    double fmax = f.max_abs();
    if (f.max_imag() > 1e-12 * fmax) throw ContractError("solve_tp: forcing is not real-valued");

    SolveResult res;
    TPField F = dft_forward(f, g);
    const std::size_t ns = g.spatial_points();
    double total = 0.0, removed = 0.0;
    for (int it = 0; it < g.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s)
            for (int c = 0; c < g.n; ++c) {
                double e = std::norm(F.at(it, s, c));
                total += e;
                if (g.is_nyquist(it, s)) {
                    removed += e;
                    F.at(it, s, c) = 0.0;
                }
            }
    res.zero_mode_report.nyquist_energy_fraction = total > 0.0 ? removed / total : 0.0;
    const double vol = std::pow(g.box_edge, g.n);
    res.zero_mode_report.mean_force.resize(g.n);
    for (int c = 0; c < g.n; ++c) {
        res.zero_mode_report.mean_force[c] = F.at(0, 0, c).real() / vol;
        F.at(0, 0, c) = 0.0;
    }

    TPField U = TPField::zeros(g, g.n, Representation::fourier);
    TPField P = TPField::zeros(g, 1, Representation::fourier);
    TPField D = TPField::zeros(g, 1, Representation::fourier);
    detail::for_each_mode(g, [&](int it, std::size_t s) {
        int k = g.frequency_index(it);
        Point xi = g.xi(s);
        double xx = xi.squaredNorm();
        if (k == 0 && xx == 0.0) return;
        ComplexVector v(g.n);
        for (int c = 0; c < g.n; ++c) v(c) = F.at(it, s, c);
        cplx r = full_resolvent(k, xi, p);
        ComplexVector w = r * helmholtz_project(xi, v).value;
        cplx div = 0.0, xv = 0.0;
        for (int c = 0; c < g.n; ++c) {
            U.at(it, s, c) = w(c);
            div += cplx(0.0, xi(c)) * w(c);
            xv += xi(c) * v(c);
        }
        D.at(it, s) = div;
        if (xx > 0.0) P.at(it, s) = cplx(0.0, -1.0) * xv / xx;
    });

    res.u = dft_inverse(U, g);
    res.p = dft_inverse(P, g);
    detail::drop_imaginary(res.u);
    detail::drop_imaginary(res.p);

    double umax = res.u.max_abs();
    double dmax = dft_inverse(D, g).max_abs();
    double xi_nyq = std::numbers::pi * g.n_x / g.box_edge;
    res.divergence_linf = umax > 0.0 ? dmax / (xi_nyq * umax) : 0.0;

    TPField target = dft_inverse(F, g);
    TPField applied = operator_apply(res.u, res.p, p, g);
    double tmax = target.max_abs(), rmax = 0.0;
    for (std::size_t i = 0; i < target.values.size(); ++i)
        rmax = std::max(rmax, std::abs(applied.values[i].real() - target.values[i].real()));
    res.residual_linf = tmax > 0.0 ? rmax / tmax : rmax;
    return res;
}

struct SteadyPeriodicSplit {
    SpatialField steady;
    TPField periodic;
};

inline SteadyPeriodicSplit split_steady_periodic(const TPField& u) {
    if (u.representation != Representation::physical) throw ContractError("split_steady_periodic: field is not physical");
    SteadyPeriodicSplit out;
    const std::size_t ns = u.spatial_points();
    out.steady = SpatialField{u.n, u.n_x, u.components, std::vector<cplx>(ns * u.components, cplx(0.0))};
    for (int it = 0; it < u.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s)
            for (int c = 0; c < u.components; ++c) out.steady.at(s, c) += u.at(it, s, c);
    for (auto& v : out.steady.values) v /= double(u.n_t);
    out.periodic = u;
    for (int it = 0; it < u.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s)
            for (int c = 0; c < u.components; ++c) out.periodic.at(it, s, c) -= out.steady.at(s, c);
    return out;
}

// ---------------------------------------------------------------------------
// Real-space convolution

/// Forcing sampler f(s, y), supported in the ball |y - center| <= radius and band-limited in time.
struct CompactForcing {
    std::function<Point(double, const Point&)> f;
    Point center;
    double radius = 1.0;
    int time_samples = 16;
};

struct RealspaceOptions {
    int radial_panels = 4;
    int radial_order = 16;
    int polar_order = 24;
    int azimuth_order = 24;
    bool solver_compatible = false;  // require zero spatial mean of the time-mean forcing
};

struct RealspaceValue {
    Point u;                             // at the requested time
    double p = 0.0;
    Point steady;                        // Gamma * (time mean of f)
    std::vector<ComplexVector> modes;    // k = 1..K coefficients of the periodic part
    double periodic_time_norm() const {  // L^2 over the normalized period
        double s = 0.0;
        for (const auto& m : modes) s += 2.0 * m.squaredNorm();
        return std::sqrt(s);
    }
};

namespace detail {

struct BallNode {
    Point y;
    double w;
};

// Quadrature for int_{|y - c| <= a} g(y) dy in polar coordinates about x, so the kernel singularity
// at y = x sits at rho = 0 and is absorbed by the Jacobian.
inline std::vector<BallNode> ball_nodes_about(const Point& x, const Point& c, double a, const RealspaceOptions& o) {
    const int n = static_cast<int>(x.size());
    const double pi = std::numbers::pi;
    Point axis = c - x;
    double d = axis.norm();
    if (d > 0.0) axis /= d;
    else axis = Point::Unit(n, 0);
    Eigen::MatrixXd frame(n, n);
    frame.col(0) = axis;
    for (int j = 1, e = 0; j < n; ++e) {
        Point v = Point::Unit(n, e);
        for (int i = 0; i < j; ++i) v -= frame.col(i).dot(v) * frame.col(i);
        if (v.norm() > 1e-3) frame.col(j++) = v.normalized();
    }

    double r0 = std::max(0.0, d - a), r1 = d + a;
    std::vector<double> breaks;
    if (r0 == 0.0) {
        // graded toward rho = 0 (log singularity of the 2D kernels)
        for (double s = 1e-6 * r1; s < 0.25 * r1; s *= 4.0) breaks.push_back(s);
        breaks.insert(breaks.begin(), 0.0);
        if (d > 0.0 && a - d > breaks.back()) breaks.push_back(a - d);  // theta_max jumps below pi here
    } else {
        breaks.push_back(r0);
    }
    double last = breaks.back();
    for (int i = 1; i <= o.radial_panels; ++i) breaks.push_back(last + (r1 - last) * i / o.radial_panels);

    GaussRule gr = gauss_legendre(o.radial_order), gt = gauss_legendre(o.polar_order);
    std::vector<BallNode> nodes;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        double lo = breaks[b], hi = breaks[b + 1], hr = 0.5 * (hi - lo);
        for (int i = 0; i < o.radial_order; ++i) {
            double rho = lo + hr * (1.0 + gr.nodes[i]);
            double wr = hr * gr.weights[i];
            double cmax;
            if (d == 0.0) cmax = rho <= a ? -1.0 : 2.0;
            else cmax = (d * d + rho * rho - a * a) / (2.0 * d * rho);
            if (cmax >= 1.0) continue;
            double tmax = cmax <= -1.0 ? pi : std::acos(cmax);
            if (n == 2) {
                for (int j = 0; j < o.polar_order; ++j) {
                    double th = tmax * gt.nodes[j], w = wr * tmax * gt.weights[j] * rho;
                    Point y = x + rho * (std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1));
                    nodes.push_back({y, w});
                }
            } else {
                double ht = 0.5 * tmax;
                for (int j = 0; j < o.polar_order; ++j) {
                    double th = ht * (1.0 + gt.nodes[j]);
                    double wt = ht * gt.weights[j] * std::sin(th);
                    for (int m = 0; m < o.azimuth_order; ++m) {
                        double ph = 2.0 * pi * m / o.azimuth_order;
                        Point dir = std::cos(th) * frame.col(0) + std::sin(th) * std::cos(ph) * frame.col(1) +
                                    std::sin(th) * std::sin(ph) * frame.col(2);
                        // higher dimensions: the remaining sphere directions are not sampled
                        double w = wr * wt * (2.0 * pi / o.azimuth_order) * rho * rho;
                        nodes.push_back({x + rho * dir, w});
                    }
                }
            }
        }
    }
    return nodes;
}

}  // namespace detail

inline RealspaceValue convolve_realspace(const CompactForcing& f, double t, const Point& x, const KernelParams& p,
                                         const TruncationSpec& trunc, const RealspaceOptions& opt = {}) {
    p.validate();
    trunc.validate();
    if (p.n > 3) throw MethodUnavailableError("convolve_realspace: n > 3 not supported");
    if (x.size() != p.n || f.center.size() != p.n) throw ContractError("convolve_realspace: dimension mismatch");
    if (!(f.radius > 0.0)) throw DomainError("convolve_realspace: support radius must be > 0");
    if (f.time_samples < 4 || f.time_samples % 2) throw DomainError("convolve_realspace: time_samples must be even and >= 4");
    if (!f.f) throw ContractError("convolve_realspace: empty forcing");

    const int n = p.n, ns = f.time_samples;
    const int K = std::min(ns / 2 - 1, trunc.k_max);
    const double beta = p.beta();
    auto nodes = detail::ball_nodes_about(x, f.center, f.radius, opt);

    std::vector<cplx> phase(static_cast<std::size_t>(ns) * (K + 1));
    for (int j = 0; j < ns; ++j)
        for (int k = 0; k <= K; ++k) phase[j * (K + 1) + k] = std::polar(1.0 / ns, -beta * k * p.period * j / ns);

    // per-node work in parallel, reduced afterwards in node order
    struct Acc {
        Point steady, mean_f, abs_f;
        std::vector<ComplexVector> modes;
        double pressure = 0.0;
    };
    const std::size_t chunks = std::min<std::size_t>(nodes.size(), 64);
    std::vector<Acc> acc(chunks);
    parallel_for(chunks, [&](std::size_t ch) {
        Acc a{Point::Zero(n), Point::Zero(n), Point::Zero(n), std::vector<ComplexVector>(K, ComplexVector::Zero(n)), 0.0};
        std::size_t lo = nodes.size() * ch / chunks, hi = nodes.size() * (ch + 1) / chunks;
        std::vector<ComplexVector> fk(K + 1, ComplexVector::Zero(n));
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& nd = nodes[i];
            for (auto& v : fk) v.setZero();
            bool any = false;
            for (int j = 0; j < ns; ++j) {
                Point v = f.f(p.period * j / ns, nd.y);
                if (v.size() != n) throw ContractError("convolve_realspace: forcing has wrong dimension");
                if (v.cwiseAbs().maxCoeff() == 0.0) continue;
                any = true;
                for (int k = 0; k <= K; ++k) fk[k] += phase[j * (K + 1) + k] * v.cast<cplx>();
            }
            Point fnow = f.f(t, nd.y);
            Point z = x - nd.y;
            if (fnow.cwiseAbs().maxCoeff() > 0.0) a.pressure += nd.w * pressure_kernel(z, p).dot(fnow);
            if (!any) continue;
            Point f0 = fk[0].real();
            a.mean_f += nd.w * f0;
            a.abs_f += nd.w * f0.cwiseAbs();
            a.steady += nd.w * (gamma_steady(z, p) * f0);
            for (int k = 1; k <= K; ++k) {
                if (fk[k].cwiseAbs().maxCoeff() == 0.0) continue;
                a.modes[k - 1] -= nd.w * (mode_tensor(k, z, p) * fk[k]);
            }
        }
        acc[ch] = std::move(a);
    });

    RealspaceValue out;
    out.steady = Point::Zero(n);
    out.modes.assign(K, ComplexVector::Zero(n));
    Point mean_f = Point::Zero(n), abs_f = Point::Zero(n);
    for (const auto& a : acc) {
        out.steady += a.steady;
        mean_f += a.mean_f;
        abs_f += a.abs_f;
        out.p += a.pressure;
        for (int k = 0; k < K; ++k) out.modes[k] += a.modes[k];
    }
    if (opt.solver_compatible && mean_f.cwiseAbs().maxCoeff() > 1e-8 * std::max(abs_f.maxCoeff(), 1e-300))
        throw DomainError("convolve_realspace: time-mean forcing has nonzero spatial mean");
    out.u = out.steady;
    for (int k = 1; k <= K; ++k) out.u += 2.0 * (std::polar(1.0, beta * k * t) * out.modes[k - 1]).real();
    return out;
}

// ---------------------------------------------------------------------------
// Sobolev ratio

namespace detail {

inline double lq_norm(const TPField& v, const GridSpec& g, double q) {
    const std::size_t ns = g.spatial_points();
    double acc = 0.0;
    for (int it = 0; it < g.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s) {
            double m2 = 0.0;
            for (int c = 0; c < v.components; ++c) m2 += std::norm(v.at(it, s, c));
            acc += std::pow(m2, 0.5 * q);
        }
    return std::pow(acc * std::pow(g.spacing(), g.n) / g.n_t, 1.0 / q);
}

// Multi-indices with |alpha| <= 2.
inline std::vector<std::vector<int>> low_order_multi_indices(int n) {
    std::vector<std::vector<int>> out;
    out.push_back(std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i) {
        std::vector<int> a(n, 0);
        a[i] = 1;
        out.push_back(a);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::vector<int> a(n, 0);
            a[i] += 1;
            a[j] += 1;
            out.push_back(a);
        }
    return out;
}

}  // namespace detail

/// ||Gamma_perp * f||_{W^{1,2,q}} / ||f||_q on the discrete torus. Nyquist modes of f are removed
/// first and both norms use the filtered field.
inline double sobolev_ratio(const TPField& f, const KernelParams& p, const GridSpec& g, double q) {
    detail::check_params(p, g, "sobolev_ratio");
    f.check(g, "sobolev_ratio");
    if (!(q >= 1.0) || !std::isfinite(q)) throw DomainError("sobolev_ratio: q must be >= 1");
    if (f.representation != Representation::physical) throw ContractError("sobolev_ratio: field is not physical");
    if (f.components != g.n) throw ContractError("sobolev_ratio: field must have n components");
    if (f.max_imag() > 1e-12 * f.max_abs()) throw ContractError("sobolev_ratio: field is not real-valued");

    TPField F = dft_forward(f, g);
    const std::size_t ns = g.spatial_points();
    for (int it = 0; it < g.n_t; ++it)
        for (std::size_t s = 0; s < ns; ++s)
            if (g.is_nyquist(it, s))
                for (int c = 0; c < g.n; ++c) F.at(it, s, c) = 0.0;
    TPField ff = dft_inverse(F, g);
    double denom = detail::lq_norm(ff, g, q);
    if (denom == 0.0) throw DegenerateInputError("sobolev_ratio: ||f||_q = 0");

    TPField U = TPField::zeros(g, g.n, Representation::fourier);
    detail::for_each_mode(g, [&](int it, std::size_t s) {
        int k = g.frequency_index(it);
        if (k == 0) return;
        Point xi = g.xi(s);
        ComplexVector v(g.n);
        for (int c = 0; c < g.n; ++c) v(c) = F.at(it, s, c);
        ComplexVector w = multiplier_m(k, xi, p) * helmholtz_project(xi, v).value;
        for (int c = 0; c < g.n; ++c) U.at(it, s, c) = w(c);
    });

    auto derived = [&](auto&& factor) {
        TPField D = U;
        detail::for_each_mode(g, [&](int it, std::size_t s) {
            cplx m = factor(it, s);
            for (int c = 0; c < g.n; ++c) D.at(it, s, c) *= m;
        });
        return dft_inverse(D, g);
    };
    double acc = std::pow(detail::lq_norm(derived([&](int it, std::size_t) {
                                              return cplx(0.0, p.beta() * g.frequency_index(it));
                                          }),
                                          g, q),
                          q);
    for (const auto& alpha : detail::low_order_multi_indices(g.n)) {
        acc += std::pow(detail::lq_norm(derived([&](int, std::size_t s) {
                                            Point xi = g.xi(s);
                                            cplx m = 1.0;
                                            for (int a = 0; a < g.n; ++a)
                                                for (int r = 0; r < alpha[a]; ++r) m *= cplx(0.0, xi(a));
                                            return m;
                                        }),
                                        g, q),
                        q);
    }
    return std::pow(acc, 1.0 / q) / denom;
}

/// Closed form of sobolev_ratio for a single real plane wave v cos(beta k t + xi.x).
inline double sobolev_ratio_plane_wave(int k, const Point& xi, const Point& v, const KernelParams& p, double q) {
    p.validate();
    if (xi.size() != p.n || v.size() != p.n) throw ContractError("sobolev_ratio_plane_wave: dimension mismatch");
    if (v.norm() == 0.0) throw DegenerateInputError("sobolev_ratio_plane_wave: v = 0");
    const int n = p.n;
    double sym = std::pow(std::abs(p.beta() * k), q);
    for (const auto& alpha : detail::low_order_multi_indices(n)) {
        double m = 1.0;
        for (int a = 0; a < n; ++a)
            for (int r = 0; r < alpha[a]; ++r) m *= xi(a);
        sym += std::pow(std::abs(m), q);
    }
    double pv = helmholtz_project(xi, v.cast<cplx>()).value.norm();
    return std::pow(sym, 1.0 / q) * std::abs(multiplier_m(k, xi, p)) * pv / v.norm();
}

}  // namespace tpk
