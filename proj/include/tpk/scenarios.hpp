#pragma once

#include <cmath>
#include <random>

#include "tpk/spectral_solver.hpp"

namespace tpk {

/// Random real field with Fourier content on |k| <= k_max, |m_a| <= m_max.
inline TPField random_band_limited(const GridSpec& g, int components, std::mt19937_64& rng, int k_max, int m_max,
                                   bool divergence_free, bool include_zero_mode = true) {
    g.validate();
    if (k_max >= g.n_t / 2 || m_max >= g.n_x / 2) throw DomainError("random_band_limited: band exceeds grid");
    if (divergence_free && components != g.n) throw ContractError("random_band_limited: divergence-free needs n components");
    std::normal_distribution<double> N(0.0, 1.0);
    TPField F = TPField::zeros(g, components, Representation::fourier);
    const std::size_t ns = g.spatial_points();
    const double vol = std::pow(g.box_edge, g.n);
    std::array<int, 8> idx{};
    for (int it = 0; it < g.n_t; ++it) {
        int k = g.frequency_index(it);
        if (std::abs(k) > k_max) continue;
        for (std::size_t s = 0; s < ns; ++s) {
            g.unravel(s, idx.data());
            bool in = true, zero = k == 0;
            for (int a = 0; a < g.n; ++a) {
                int m = GridSpec::wrap(idx[a], g.n_x);
                in = in && std::abs(m) <= m_max;
                zero = zero && m == 0;
            }
            if (!in || (zero && !include_zero_mode)) continue;
            ComplexVector v(components);
            for (int c = 0; c < components; ++c) v(c) = cplx(N(rng), N(rng)) * vol;
            if (divergence_free) v = helmholtz_project(g.xi(s), v).value;
            for (int c = 0; c < components; ++c) F.at(it, s, c) = v(c);
        }
    }
    TPField f = dft_inverse(F, g);
    for (auto& v : f.values) v = v.real();
    return f;
}

struct Manufactured {
    TPField u, p, f;
};

/// Divergence-free band-limited u*, band-limited p*, f = A(u*, p*). u* has no (0, 0) mode.
inline Manufactured manufactured_solution(const KernelParams& prm, const GridSpec& g, std::uint64_t seed,
                                          int k_max = 2, int m_max = 3) {
    std::mt19937_64 rng(seed);
    Manufactured m;
    m.u = random_band_limited(g, g.n, rng, k_max, m_max, true, false);
    m.p = random_band_limited(g, 1, rng, k_max, m_max, false);
    m.f = operator_apply(m.u, m.p, prm, g);
    for (auto& v : m.f.values) v = v.real();
    return m;
}

/// psi(y) = (1 - |y - c|^2 / a^2)^8 on the ball, zero outside.
struct Bump {
    Point center;
    double radius = 1.0;

    double s(const Point& y) const { return 1.0 - (y - center).squaredNorm() / (radius * radius); }
    double value(const Point& y) const {
        double v = s(y);
        return v > 0.0 ? std::pow(v, 8) : 0.0;
    }
    Point gradient(const Point& y) const {
        double v = s(y);
        if (v <= 0.0) return Point::Zero(y.size());
        return -16.0 * std::pow(v, 7) / (radius * radius) * (y - center);
    }
    double d2(const Point& y, int i, int j) const {
        double v = s(y);
        if (v <= 0.0) return 0.0;
        double a2 = radius * radius;
        Point z = y - center;
        return 224.0 * std::pow(v, 6) * z(i) * z(j) / (a2 * a2) - (i == j ? 16.0 * std::pow(v, 7) / a2 : 0.0);
    }
};

/// Samples a forcing on the solver grid.
inline TPField sample_forcing(const GridSpec& g, const std::function<Point(double, const Point&)>& f) {
    TPField out = TPField::zeros(g, g.n);
    const std::size_t ns = g.spatial_points();
    parallel_for(static_cast<std::size_t>(g.n_t), [&](std::size_t it) {
        double t = it * g.time_step();
        for (std::size_t s = 0; s < ns; ++s) {
            Point v = f(t, g.position(s));
            for (int c = 0; c < g.n; ++c) out.at(static_cast<int>(it), s, c) = v(c);
        }
    });
    return out;
}

}  // namespace tpk
