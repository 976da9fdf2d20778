#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tpk/errors.hpp"
#include "tpk/mode_kernels.hpp"
#include "tpk/parallel.hpp"
#include "tpk/steady_kernels.hpp"
#include "tpk/unsteady_kernel.hpp"

namespace tpk {

struct TruncationSpec {
    int k_max = 64;
    double tail_tol = 1e-8;

    void validate() const {
        if (k_max < 1) throw DomainError("TruncationSpec: k_max must be >= 1");
        if (!(tail_tol > 0.0)) throw DomainError("TruncationSpec: tail_tol must be > 0");
    }
};

struct TimePoint {
    double t = 0.0;

    static TimePoint reduce(double t, double period) {
        double r = std::fmod(t, period);
        if (r < 0.0) r += period;
        if (r >= period) r = 0.0;
        return {r};
    }
};

/// Modes G^1..G^K at a fixed x, K chosen by the truncation rule. Synthesis uses
/// Gamma_perp(t, x) = -sum_{k != 0} G^k(x) e^{i beta k t} (see mode sign convention).
class PerpExpansion {
public:
    PerpExpansion(const Point& x, const KernelParams& p, const TruncationSpec& trunc, bool with_gradient = false)
        : p_(p), x_(x), grad_(with_gradient) {
        p.validate();
        trunc.validate();
        detail::check_point(x, p, "gamma_perp");
        for (int k = 1; k <= trunc.k_max; ++k) {
            KernelDerivs d = mode_tensor_derivs(k, x, p, with_gradient);
            last_ = d.value.cwiseAbs().maxCoeff();
            modes_.push_back(std::move(d));
            if (last_ < trunc.tail_tol) break;
        }
        warning_ = last_ >= trunc.tail_tol;
    }

    int modes() const { return int(modes_.size()); }
    double last_mode() const { return last_; }
    bool truncation_warning() const { return warning_; }
    const KernelParams& params() const { return p_; }
    const KernelDerivs& mode(int k) const { return modes_.at(k - 1); }

    /// Complex partial sum over 1 <= |k| <= K; its imaginary part is the pairing residue.
    ComplexMatrix synthesize(double t, int deriv = -1) const {
        const int n = p_.n;
        ComplexMatrix s = ComplexMatrix::Zero(n, n);
        for (int k = 1; k <= modes(); ++k) {
            const ComplexMatrix& g = deriv < 0 ? modes_[k - 1].value : modes_[k - 1].gradient.at(deriv);
            cplx e = std::polar(1.0, p_.beta() * k * t);
            s -= g * e + g.conjugate() * std::conj(e);
        }
        return s;
    }

    RealMatrix value(double t) const { return synthesize(t).real(); }
    RealMatrix gradient(double t, int m) const { return synthesize(t, m).real(); }

    /// Componentwise-max L^r(T) norm with the normalized time measure. deriv < 0: the kernel,
    /// otherwise max over spatial derivative directions as well.
    double time_norm(double r, bool gradient = false) const {
        if (r < 1.0) throw DomainError("gamma_perp_time_norm: r must be >= 1");
        if (gradient && !grad_) throw ContractError("gamma_perp_time_norm: expansion built without gradient");
        const int n = p_.n;
        std::vector<int> blocks;
        if (gradient)
            for (int m = 0; m < n; ++m) blocks.push_back(m);
        else
            blocks.push_back(-1);
        double best = 0.0;
        if (r == 2.0) {
            for (int b : blocks) {
                RealMatrix acc = RealMatrix::Zero(n, n);
                for (int k = 1; k <= modes(); ++k) {
                    const ComplexMatrix& g = b < 0 ? modes_[k - 1].value : modes_[k - 1].gradient[b];
                    acc += 2.0 * g.cwiseAbs2();
                }
                best = std::max(best, std::sqrt(acc.maxCoeff()));
            }
            return best;
        }
        const int nt = std::max(64, 8 * modes());
        for (int b : blocks) {
            RealMatrix acc = RealMatrix::Zero(n, n);
            for (int i = 0; i < nt; ++i) {
                RealMatrix v = synthesize(i * p_.period / nt, b).real();
                acc += v.cwiseAbs().array().pow(r).matrix() / double(nt);
            }
            best = std::max(best, std::pow(acc.maxCoeff(), 1.0 / r));
        }
        return best;
    }

    /// Parseval tail beyond K from the 1/k envelope of the last mode (r = 2, kernel only).
    double parseval_tail_estimate() const {
        int K = modes();
        double sum = 1.0 / K - 0.5 / (double(K) * K) + 1.0 / (6.0 * K * double(K) * K);
        RealMatrix head = RealMatrix::Zero(p_.n, p_.n);
        for (int k = 1; k <= K; ++k) head += 2.0 * modes_[k - 1].value.cwiseAbs2();
        RealMatrix tail = 2.0 * double(K) * K * sum * modes_[K - 1].value.cwiseAbs2();
        double with = std::sqrt((head + tail).maxCoeff()), without = std::sqrt(head.maxCoeff());
        return with - without;
    }

private:
    KernelParams p_;
    Point x_;
    bool grad_;
    std::vector<KernelDerivs> modes_;
    double last_ = 0.0;
    bool warning_ = false;
};

struct PerpValue {
    RealMatrix value;
    int modes = 0;
    double last_mode = 0.0;
    bool truncation_warning = false;
    double imag_residue = 0.0;
};

inline PerpValue gamma_perp(double t, const Point& x, const KernelParams& p, const TruncationSpec& trunc) {
    PerpExpansion e(x, p, trunc);
    ComplexMatrix s = e.synthesize(TimePoint::reduce(t, p.period).t);
    return {s.real(), e.modes(), e.last_mode(), e.truncation_warning(), s.imag().cwiseAbs().maxCoeff()};
}

struct TimeNorm {
    double value = 0.0;
    int modes = 0;
    bool truncation_warning = false;
    double tail_estimate = 0.0;  // r = 2 only
};

inline TimeNorm gamma_perp_time_norm(const Point& x, const KernelParams& p, const TruncationSpec& trunc, double r,
                                     int deriv_order = 0) {
    if (deriv_order != 0 && deriv_order != 1) throw DomainError("gamma_perp_time_norm: deriv_order must be 0 or 1");
    PerpExpansion e(x, p, trunc, deriv_order == 1);
    TimeNorm out{e.time_norm(r, deriv_order == 1), e.modes(), e.truncation_warning(), 0.0};
    if (r == 2.0 && deriv_order == 0) out.tail_estimate = e.parseval_tail_estimate();
    return out;
}

/// Pointwise Gamma_perp(t, x) from the time-image sum of the unsteady kernel (exact up to quadrature,
/// no mode truncation). At t = 0 mod T the midpoint of the jump is returned, which is also the limit
/// of the symmetric partial sums.
inline RealMatrix gamma_perp_time_domain(double t, const Point& x, const KernelParams& p) {
    return TimeImageKernel(x, p).at(TimePoint::reduce(t, p.period).t);
}

/// Full velocity kernel Gamma(x) + Gamma_perp(t, x).
inline RealMatrix gamma_tp_velocity(double t, const Point& x, const KernelParams& p, const TruncationSpec& trunc) {
    return gamma_steady(x, p) + gamma_perp(t, x, p, trunc).value;
}

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> radii;
    std::vector<double> norms;
    std::vector<int> modes;
    bool truncation_warning = false;
};

// Least-squares line through (log x, log y).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_fit: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_fit: nonpositive sample");
        double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return {slope, (sy - slope * sx) / m};
}

/// Slope of log ||Gamma_perp(., r e)||_{L^2(T)} (or of its gradient) against log r.
inline DecayFit decay_fit(const Point& direction, const std::vector<double>& radii, const KernelParams& p,
                          const TruncationSpec& trunc, int deriv_order = 0) {
    if (radii.size() < 2) throw DomainError("decay_fit: need at least two radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i + 1] > radii[i])) throw DomainError("decay_fit: radii must be strictly increasing");
    if (!(radii.front() > 0.0)) throw DomainError("decay_fit: radii must be positive");
    double dn = direction.norm();
    if (direction.size() != p.n) throw ContractError("decay_fit: direction dimension does not match n");
    if (!(dn > 0.0)) throw DomainError("decay_fit: zero direction");
    Point e = direction / dn;
    DecayFit out;
    out.radii = radii;
    out.norms.resize(radii.size());
    out.modes.resize(radii.size());
    std::vector<char> warn(radii.size(), 0);
    parallel_for(radii.size(), [&](std::size_t i) {
        TimeNorm tn = gamma_perp_time_norm(radii[i] * e, p, trunc, 2.0, deriv_order);
        out.norms[i] = tn.value;
        out.modes[i] = tn.modes;
        warn[i] = tn.truncation_warning;
    });
    out.truncation_warning = std::any_of(warn.begin(), warn.end(), [](char c) { return c != 0; });
    auto [s, b] = loglog_fit(out.radii, out.norms);
    out.slope = s;
    out.intercept = b;
    return out;
}

struct LqProbeOptions {
    double outer_radius = 1.0;
    int radial_order = 8;
    int time_order = 8;
    int angular_order = 16;
};

struct LqProbeResult {
    double q = 0.0;
    std::vector<double> eps;
    std::vector<double> integrals;
    double slope = 0.0;
};

/// Partial integrals of |Gamma_perp|^q (Frobenius norm) over {|x| < R, t in T} minus the parabolic
/// boxes {|x| < eps, dist(t, 0) < eps^2}. |Gamma_perp| is evaluated once on a node set whose panel
/// boundaries contain every eps and eps^2, then reused for each q.
class LqProbe {
public:
    LqProbe(const KernelParams& p, std::vector<double> eps, const LqProbeOptions& opt = {}) : p_(p), eps_(std::move(eps)) {
        p.validate();
        if (eps_.empty()) throw DomainError("lq_probe: no shells");
        std::sort(eps_.begin(), eps_.end(), std::greater<double>());
        const double R = opt.outer_radius, half = 0.5 * p.period;
        for (double e : eps_) {
            if (!(e > 0.0) || e >= R) throw DomainError("lq_probe: shells must lie in (0, outer_radius)");
            if (e * e >= half) throw DomainError("lq_probe: eps^2 must be below T/2");
        }
        const double emin = eps_.back();
        if (emin < 1e-6) throw QuadratureResolutionError("lq_probe: shells finer than the sampling grid (eps < 1e-6)");

        rb_ = breakpoints(emin / 64.0, R, [&](double e) { return e; });
        tb_ = breakpoints(emin * emin / 64.0, half, [&](double e) { return e * e; });

        // Spatial nodes: radius x (angle if the kernel is anisotropic).
        const int n = p.n;
        const bool iso = p.lambda == 0.0;
        const GaussRule& gr = gauss_legendre(opt.radial_order);
        const GaussRule& gt = gauss_legendre(opt.time_order);
        const GaussRule& ga = gauss_legendre(opt.angular_order);
        const double pi = std::numbers::pi;
        struct XNode {
            Point x;
            double w;
            int rpanel;
        };
        std::vector<XNode> xs;
        for (std::size_t i = 0; i + 1 < rb_.size(); ++i) {
            double c = 0.5 * (rb_[i] + rb_[i + 1]), h = 0.5 * (rb_[i + 1] - rb_[i]);
            for (int a = 0; a < opt.radial_order; ++a) {
                double r = c + h * gr.nodes[a];
                double wr = h * gr.weights[a] * std::pow(r, n - 1);
                if (iso) {
                    Point x = Point::Zero(n);
                    x(0) = r;
                    xs.push_back({x, wr * unit_sphere_area(n), int(i)});
                    continue;
                }
                for (int b = 0; b < opt.angular_order; ++b) {
                    double th = 0.5 * pi * (1.0 + ga.nodes[b]);
                    double wa = 0.5 * pi * ga.weights[b];
                    Point x = Point::Zero(n);
                    x(0) = r * std::cos(th);
                    x(1) = r * std::sin(th);
                    // n = 2: both half planes; n >= 3: rotation about e_1 (surface of S^{n-2} times sin^{n-2})
                    double wang = n == 2 ? 2.0 * wa : wa * unit_sphere_area(n - 1) * std::pow(std::sin(th), n - 2);
                    xs.push_back({x, wr * wang, int(i)});
                }
            }
        }
        // Time nodes on (-T/2, T/2), both sides of t = 0 share the panel list.
        struct TNode {
            double t;
            double w;
            int tpanel;
        };
        std::vector<TNode> ts;
        for (int side : {-1, 1})
            for (std::size_t i = 0; i + 1 < tb_.size(); ++i) {
                double c = 0.5 * (tb_[i] + tb_[i + 1]), h = 0.5 * (tb_[i + 1] - tb_[i]);
                for (int a = 0; a < opt.time_order; ++a)
                    ts.push_back({side * (c + h * gt.nodes[a]), h * gt.weights[a] / p.period, int(i)});
            }

        nr_ = rb_.size() - 1;
        nt_ = tb_.size() - 1;
        values_.assign(xs.size() * ts.size(), 0.0);
        weights_.resize(values_.size());
        cell_.resize(values_.size());
        parallel_for(xs.size(), [&](std::size_t i) {
            TimeImageKernel tk(xs[i].x, p);
            for (std::size_t j = 0; j < ts.size(); ++j) {
                std::size_t q = i * ts.size() + j;
                double t = ts[j].t < 0.0 ? ts[j].t + p.period : ts[j].t;
                values_[q] = tk.at(t).norm();
                weights_[q] = xs[i].w * ts[j].w;
                cell_[q] = xs[i].rpanel * nt_ + ts[j].tpanel;
            }
        });
    }

    LqProbeResult integrals(double q) const {
        if (!(q >= 1.0)) throw DomainError("lq_probe: q must be >= 1");
        // Integral per (r panel, |t| panel) cell, then excluded-box sums.
        std::vector<double> cells(nr_ * nt_, 0.0);
        for (std::size_t i = 0; i < values_.size(); ++i) cells[cell_[i]] += weights_[i] * std::pow(values_[i], q);
        LqProbeResult out;
        out.q = q;
        out.eps = eps_;
        for (double e : eps_) {
            double total = 0.0;
            for (std::size_t a = 0; a < nr_; ++a)
                for (std::size_t b = 0; b < nt_; ++b) {
                    bool inside = rb_[a + 1] <= e * (1 + 1e-12) && tb_[b + 1] <= e * e * (1 + 1e-12);
                    if (!inside) total += cells[a * nt_ + b];
                }
            out.integrals.push_back(total);
        }
        out.slope = loglog_fit(out.eps, out.integrals).first;
        return out;
    }

private:
    template <class Map>
    std::vector<double> breakpoints(double lo, double hi, Map map) const {
        std::vector<double> b{0.0};
        for (double s = lo; s < hi; s *= 2.0) b.push_back(s);
        for (double e : eps_) b.push_back(map(e));
        b.push_back(hi);
        std::sort(b.begin(), b.end());
        std::vector<double> u;
        for (double v : b)
            if (u.empty() || v > u.back() * (1 + 1e-9)) u.push_back(v);
        // Drop slivers created by merging the geometric grid with the shell values.
        std::vector<double> keep{u.front()};
        for (std::size_t i = 1; i < u.size(); ++i) {
            bool shell = std::any_of(eps_.begin(), eps_.end(), [&](double e) { return std::abs(map(e) - u[i]) < 1e-12 * u[i]; });
            if (!shell && i + 1 < u.size() && u[i] < keep.back() * 1.25) continue;
            keep.push_back(u[i]);
        }
        return keep;
    }

    KernelParams p_;
    std::vector<double> eps_;
    std::vector<double> rb_, tb_;
    std::size_t nr_ = 0, nt_ = 0;
    std::vector<double> values_, weights_;
    std::vector<std::size_t> cell_;
};

inline LqProbeResult lq_probe(double q, const KernelParams& p, const std::vector<double>& eps,
                              const LqProbeOptions& opt = {}) {
    return LqProbe(p, eps, opt).integrals(q);
}

}  // namespace tpk
