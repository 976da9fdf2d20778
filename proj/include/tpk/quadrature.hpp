#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "tpk/errors.hpp"

namespace tpk {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

namespace detail {

inline GaussRule make_gauss_legendre(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0, p1 = x;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(std::complex<double> v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Gauss-Legendre rule of order n on [-1, 1]; rules are cached and immutable.
inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    if (n < 1) throw DomainError("gauss_legendre: order must be >= 1");
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussRule>(detail::make_gauss_legendre(n));
    return *slot;
}

/// Fixed-order Gauss-Legendre on [a, b].
template <class F>
auto integrate_gl(F&& f, double a, double b, int order) {
    const GaussRule& g = gauss_legendre(order);
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    using R = std::decay_t<decltype(f(c))>;
    R sum = f(c + h * g.nodes[0]) * g.weights[0];
    for (int i = 1; i < order; ++i) sum += f(c + h * g.nodes[i]) * g.weights[i];
    return R(sum * h);
}

namespace detail {

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F, class R>
void gk15(F& f, double a, double b, R& value, double& err) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    R fc = f(c);
    R kron = fc * kWgk[7];
    R gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        double dx = h * kXgk[j];
        R s = f(c - dx) + f(c + dx);
        kron += s * kWgk[j];
        if (j % 2 == 1) gauss += s * kWg[j / 2];
    }
    value = kron * h;
    err = magnitude(R((kron - gauss) * h));
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15): bisect the segment with the largest error estimate
/// until the summed estimate is below max(abs_tol, rel_tol * |I|) or the segment budget is spent.
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol = 1e-13,
                        int max_segments = 2000) {
    using R = std::decay_t<decltype(f(a))>;
    struct Segment {
        double a, b;
        R value;
        double err;
    };
    auto less = [](const Segment& x, const Segment& y) { return x.err < y.err; };
    std::vector<Segment> heap;
    Segment s0{a, b, R{}, 0.0};
    detail::gk15(f, a, b, s0.value, s0.err);
    R total = s0.value;
    double err = s0.err;
    heap.push_back(std::move(s0));
    while (err > std::max(abs_tol, rel_tol * detail::magnitude(total)) && int(heap.size()) < max_segments) {
        std::pop_heap(heap.begin(), heap.end(), less);
        Segment worst = std::move(heap.back());
        heap.pop_back();
        double m = 0.5 * (worst.a + worst.b);
        Segment l{worst.a, m, R{}, 0.0}, r{m, worst.b, R{}, 0.0};
        detail::gk15(f, l.a, l.b, l.value, l.err);
        detail::gk15(f, r.a, r.b, r.value, r.err);
        total += l.value + r.value - worst.value;
        err += l.err + r.err - worst.err;
        heap.push_back(std::move(l));
        std::push_heap(heap.begin(), heap.end(), less);
        heap.push_back(std::move(r));
        std::push_heap(heap.begin(), heap.end(), less);
    }
    // Re-sum to shed the drift of the incremental updates.
    R exact = heap.front().value;
    for (std::size_t i = 1; i < heap.size(); ++i) exact += heap[i].value;
    return exact;
}

}  // namespace tpk
