#include <gtest/gtest.h>

#include <cmath>

#include "tpk/periodic_kernel.hpp"

using namespace tpk;

namespace {

const double pi = std::numbers::pi;

Point pt(std::initializer_list<double> v) {
    Point x(v.size());
    int i = 0;
    for (double c : v) x(i++) = c;
    return x;
}

KernelParams params(int n, double lambda = 0.0) { return KernelParams{n, lambda, 2.0 * pi}; }

TruncationSpec trunc(int k_max, double tol = 1e-12) { return TruncationSpec{k_max, tol}; }

std::vector<double> radii_2_to_8() {
    std::vector<double> r;
    for (double v = 2.0; v <= 8.0 + 1e-9; v *= std::pow(2.0, 0.25)) r.push_back(v);
    return r;
}

}  // namespace

TEST(GammaPerp, ZeroTimeMeanAndReal) {
    for (double lam : {0.0, 1.0}) {
        auto p = params(3, lam);
        Point x = pt({1.0, -1.5, 0.5});
        PerpExpansion e(x, p, trunc(12));
        const int nt = 64;
        RealMatrix mean = RealMatrix::Zero(3, 3);
        double imag = 0.0;
        for (int i = 0; i < nt; ++i) {
            ComplexMatrix s = e.synthesize(i * p.period / nt);
            mean += s.real() / nt;
            imag = std::max(imag, s.imag().cwiseAbs().maxCoeff());
        }
        EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT(imag, 1e-10);
    }
    EXPECT_THROW(gamma_perp(0.0, pt({0, 0, 0}), params(3), trunc(4)), SingularPointError);
}

TEST(GammaPerp, MatchesPartialFractionSynthesis) {
    // Independent path: G^k from Richardson second differences of the partial-fraction convolution.
    auto p = params(3);
    Point x = pt({0, 3, 0});
    const int K = 10;
    const double t = 1.1;
    ComplexMatrix ref = ComplexMatrix::Zero(3, 3);
    for (int k = 1; k <= K; ++k) {
        auto c = [&](const Point& y) { return conv_laplace_mode(k, y, p, ConvMethod::partial_fractions).value; };
        ComplexMatrix d(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                auto dd = [&](double h) {
                    Point a = x, b = x, c2 = x, e = x;
                    a(i) += h; a(j) += h;
                    b(i) += h; b(j) -= h;
                    c2(i) -= h; c2(j) += h;
                    e(i) -= h; e(j) -= h;
                    return (c(a) - c(b) - c(c2) + c(e)) / (4 * h * h);
                };
                double h = 0.03;
                cplx r1 = (4.0 * dd(h / 2) - dd(h)) / 3.0, r2 = (4.0 * dd(h / 4) - dd(h / 2)) / 3.0;
                d(i, j) = (16.0 * r2 - r1) / 15.0;
            }
        ComplexMatrix g = -d;
        g.diagonal().array() += d.trace();
        cplx e = std::polar(1.0, p.beta() * k * t);
        ref -= g * e + g.conjugate() * std::conj(e);
    }
    PerpValue v = gamma_perp(t, x, p, trunc(K));
    EXPECT_EQ(v.modes, K);
    EXPECT_TRUE(v.truncation_warning);
    EXPECT_LT((v.value - ref.real()).cwiseAbs().maxCoeff(), 1e-6 * v.value.cwiseAbs().maxCoeff());
}

TEST(GammaPerp, TruncationRuleStopsAtTolerance) {
    auto p = params(3);
    Point x = pt({2, 0, 0});
    double g1 = mode_tensor(1, x, p).cwiseAbs().maxCoeff();
    PerpValue v = gamma_perp(0.3, x, p, TruncationSpec{1000, 0.3 * g1});
    EXPECT_FALSE(v.truncation_warning);
    EXPECT_LT(v.last_mode, 0.3 * g1);
    EXPECT_GT(mode_tensor(v.modes - 1, x, p).cwiseAbs().maxCoeff(), 0.3 * g1);
}

TEST(GammaPerp, TimeImageAgreesWithSynthesis) {
    for (int n : {2, 3}) {
        auto p = params(n);
        Point x = Point::Zero(n);
        x(0) = 1.0;
        x(1) = 1.0;
        double t = p.period / 3.0;
        RealMatrix a = gamma_perp_time_domain(t, x, p);
        // partial sums converge like 1/K away from t = 0
        RealMatrix b = gamma_perp(t, x, p, trunc(4000)).value;
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 2e-3 * a.cwiseAbs().maxCoeff()) << n;
    }
}

TEST(GammaPerp, DivergenceFree) {
    for (double lam : {0.0, 1.0}) {
        auto p = params(3, lam);
        for (double r : {2.0, 4.0, 6.0}) {
            Point x = r * pt({0.48, 0.6, 0.64});
            const double t = 0.7, h = 1e-2 * r;
            auto G = [&](const Point& y) { return gamma_perp(t, y, p, trunc(8)).value; };
            RealMatrix div = RealMatrix::Zero(1, 3);
            for (int j = 0; j < 3; ++j) {
                Point a = x, b = x, a2 = x, b2 = x;
                a(j) += h;
                b(j) -= h;
                a2(j) += 2 * h;
                b2(j) -= 2 * h;
                div += ((8.0 * (G(a) - G(b)) - (G(a2) - G(b2))) / (12 * h)).row(j);
            }
            double scale = G(x).cwiseAbs().maxCoeff() / r;
            EXPECT_LT(div.cwiseAbs().maxCoeff(), 1e-3 * scale) << lam << " " << r;
        }
    }
}

TEST(TimeNorm, ParsevalMatchesQuadrature) {
    auto p = params(3);
    PerpExpansion e(pt({0, 0, 2}), p, trunc(16));
    double pars = e.time_norm(2.0);
    // r = 2 by time quadrature through the generic path
    const int nt = 256;
    RealMatrix acc = RealMatrix::Zero(3, 3);
    for (int i = 0; i < nt; ++i) acc += e.value(i * p.period / nt).cwiseAbs2() / double(nt);
    EXPECT_NEAR(pars, std::sqrt(acc.maxCoeff()), 1e-6 * pars);
    EXPECT_NEAR(e.time_norm(2.000001), pars, 1e-5 * pars);
}

TEST(TimeNorm, MonotoneInTruncation) {
    auto p = params(3, 1.0);
    Point x = pt({1.0, 2.0, 0.0});
    double prev = 0.0;
    for (int K = 1; K <= 9; K += 2) {
        double v = gamma_perp_time_norm(x, p, trunc(K), 2.0).value;
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(TimeNorm, ScalingProbe) {
    auto p = params(3);
    double a = gamma_perp_time_norm(pt({0, 2, 0}), p, trunc(64), 2.0).value;
    double b = gamma_perp_time_norm(pt({0, 4, 0}), p, trunc(64), 2.0).value;
    EXPECT_NEAR(b / a, 0.125, 0.35 * 0.125);
    EXPECT_THROW(gamma_perp_time_norm(pt({0, 2, 0}), p, trunc(4), 0.5), DomainError);
}

TEST(DecayFit, StokesValue3D) {
    auto f = decay_fit(pt({0, 1, 0}), radii_2_to_8(), params(3), trunc(64));
    EXPECT_GE(f.slope, -3.3);
    EXPECT_LE(f.slope, -2.7);
}

TEST(DecayFit, StokesGradient3D) {
    auto f = decay_fit(pt({0, 1, 0}), radii_2_to_8(), params(3), trunc(64), 1);
    EXPECT_GE(f.slope, -4.3);
    EXPECT_LE(f.slope, -3.7);
}

TEST(DecayFit, Oseen2DAlongDrift) {
    // Known failure at T = 2 pi: the k = 1 wake term ~ e^{-0.30 |x|} still dominates on 2..8.
    auto f = decay_fit(pt({1, 0}), radii_2_to_8(), params(2, 1.0), trunc(64));
    EXPECT_GE(f.slope, -2.3);
    EXPECT_LE(f.slope, -1.7);
}

TEST(DecayFit, RejectsBadRadii) {
    EXPECT_THROW(decay_fit(pt({1, 0, 0}), {2.0}, params(3), trunc(4)), DomainError);
    EXPECT_THROW(decay_fit(pt({1, 0, 0}), {3.0, 2.0}, params(3), trunc(4)), DomainError);
    EXPECT_THROW(decay_fit(pt({0, 0, 0}), {2.0, 3.0}, params(3), trunc(4)), DomainError);
}

TEST(VelocityKernel, TimeMeanIsSteady) {
    for (double lam : {0.0, 1.0}) {
        auto p = params(3, lam);
        Point x = pt({1, 0, 0.5});
        const int nt = 32;
        RealMatrix mean = RealMatrix::Zero(3, 3);
        PerpExpansion e(x, p, trunc(8));
        RealMatrix st = gamma_steady(x, p);
        for (int i = 0; i < nt; ++i) mean += (st + e.value(i * p.period / nt)) / nt;
        EXPECT_LT((mean - st).cwiseAbs().maxCoeff(), 1e-9);
        RealMatrix v = gamma_tp_velocity(0.4, x, p, trunc(8));
        EXPECT_LT((v - st - gamma_perp(0.4, x, p, trunc(8)).value).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(VelocityKernel, PeriodicPartSmallInFarField) {
    auto p = params(3);
    Point x = pt({8, 0, 0});
    for (double t : {0.3, 2.0, 5.0}) {
        RealMatrix v = gamma_tp_velocity(t, x, p, trunc(64));
        RealMatrix st = gamma_stokes(x, p);
        EXPECT_LT((v - st).norm(), st.norm());
    }
}

TEST(LqProbe, WindowIn2D) {
    std::vector<double> eps;
    for (int m = 3; m <= 9; ++m) eps.push_back(std::ldexp(1.0, -m));
    LqProbe probe(params(2), eps);
    EXPECT_GE(probe.integrals(1.5).slope, -0.15);
    EXPECT_LE(probe.integrals(2.5).slope, -0.35);
}

TEST(LqProbe, BoundedBelowCriticalIn3D) {
    std::vector<double> eps;
    for (int m = 3; m <= 9; ++m) eps.push_back(std::ldexp(1.0, -m));
    LqProbe probe(params(3, 1.0), eps);
    auto r = probe.integrals(1.0);
    EXPECT_GE(r.slope, -0.15);
    for (std::size_t i = 1; i < r.integrals.size(); ++i) EXPECT_GE(r.integrals[i], r.integrals[i - 1]);
    EXPECT_LE(probe.integrals(2.1).slope, -0.35);
}

TEST(LqProbe, Preconditions) {
    EXPECT_THROW(LqProbe(params(2), {1e-7}), QuadratureResolutionError);
    EXPECT_THROW(LqProbe(params(2), {2.0}), DomainError);
    LqProbe probe(params(2), {0.25, 0.125});
    EXPECT_THROW(probe.integrals(0.5), DomainError);
}
