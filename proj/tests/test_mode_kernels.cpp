#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "tpk/mode_kernels.hpp"

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

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

// <Gamma^{k,lambda}_H, (-Delta - lambda d_1 + i beta k) phi>, phi = e^{-|y|^2}, polar coordinates.
cplx delta_pairing(int k, const KernelParams& p) {
    const int n = p.n;
    const double bk = p.beta() * k, lam = p.lambda;
    auto adj = [&](const Point& y) {
        double r2 = y.squaredNorm();
        return cplx(2.0 * n - 4.0 * r2 + 2.0 * lam * y(0), bk) * std::exp(-r2);
    };
    std::vector<double> rb{0.0};
    for (double s = 1e-8; s < 0.5; s *= 4.0) rb.push_back(s);
    for (double s = 0.5; s <= 7.0; s += 0.5) rb.push_back(s);
    const int na = 64;
    cplx total = 0.0;
    for (std::size_t i = 0; i + 1 < rb.size(); ++i) {
        total += integrate_gl(
            [&](double r) {
                cplx shell = 0.0;
                if (n == 2) {
                    for (int j = 0; j < na; ++j) {
                        double th = 2.0 * pi * j / na;
                        Point y = pt({r * std::cos(th), r * std::sin(th)});
                        shell += gamma_mode(k, y, p) * adj(y);
                    }
                    return cplx(shell * (2.0 * pi / na) * r);
                }
                // n = 3: GL in cos(theta), azimuth trivial since the integrand depends on y_1 and r only
                const GaussRule& g = gauss_legendre(48);
                for (int j = 0; j < 48; ++j) {
                    double c = g.nodes[j];
                    Point y = pt({r * c, r * std::sqrt(1.0 - c * c), 0.0});
                    shell += g.weights[j] * gamma_mode(k, y, p) * adj(y);
                }
                return cplx(shell * 2.0 * pi * r * r);
            },
            rb[i], rb[i + 1], 20);
    }
    return total;
}

}  // namespace

TEST(Alpha, Examples) {
    Alpha a = alpha(0, KernelParams{3, 2.0, 2 * pi});
    EXPECT_EQ(a.value, cplx(1.0, 0.0));
    Alpha b = alpha(1, params(3));
    EXPECT_NEAR(b.value.imag(), 1.0, 1e-15);
    EXPECT_NEAR(b.root.real(), -std::sqrt(0.5), 1e-14);
    EXPECT_NEAR(b.root.imag(), std::sqrt(0.5), 1e-14);
    for (int k : {1, 3, 17})
        for (double lam : {0.0, 0.7}) {
            auto p = params(3, lam);
            EXPECT_EQ(alpha(-k, p).value, std::conj(alpha(k, p).value));
            Alpha c = alpha(k, p);
            EXPECT_GE(c.root.imag(), 0.0);
            EXPECT_LT(std::abs(c.root * c.root + c.value), 1e-14 * std::abs(c.value));
        }
}

TEST(SpectralGap, Examples) {
    EXPECT_NEAR(spectral_gap(1, params(3)), -0.70711, 1e-5);
    EXPECT_NEAR(spectral_gap(1, params(3, 2.0)), -0.09868, 1e-5);
    double g = spectral_gap_closed_form(1000000, params(3, 1.0));
    EXPECT_NEAR(g / 1000.0, -std::sqrt(0.5), 0.01 * std::sqrt(0.5));
    EXPECT_THROW(spectral_gap(0, params(3)), DomainError);
}

TEST(SpectralGap, NegativeAndClosedFormAgrees) {
    for (double T : {1.0, 2 * pi})
        for (double lam : {0.0, 0.5, 1.0, 2.0})
            for (int k = -10000; k <= 10000; k += 7) {
                if (k == 0) continue;
                KernelParams p{3, lam, T};
                double a = spectral_gap(k, p);
                ASSERT_LT(a, 0.0);
                if (lam != 0.0) {
                    double b = spectral_gap_closed_form(k, p);
                    double im_a = 0.5 * lam - a, im_b = 0.5 * lam - b;
                    ASSERT_NEAR(im_a, im_b, 1e-12 * im_b);
                }
            }
}

TEST(Helmholtz, Examples) {
    auto p = params(3);
    cplx v = gamma_helmholtz(alpha(1, p), pt({1, 0, 0}), p);
    EXPECT_NEAR(v.real(), 0.02983, 1e-5);
    EXPECT_NEAR(v.imag(), -0.02549, 1e-5);
    Alpha yuk{0, cplx(1.0, 0.0), sqrt_upper(cplx(-1.0, 0.0))};
    EXPECT_NEAR(gamma_helmholtz(yuk, pt({0, 1, 0}), p).real(), std::exp(-1.0) / (4 * pi), 1e-15);
    EXPECT_EQ(gamma_mode(2, pt({0.3, 1, 0}), p), gamma_helmholtz(alpha(2, p), pt({0.3, 1, 0}), p));
    EXPECT_THROW(gamma_helmholtz(alpha(1, p), pt({0, 0, 0}), p), SingularPointError);
    Alpha bad{0, cplx(-1.0, 0.0), sqrt_upper(cplx(1.0, 0.0))};
    EXPECT_THROW(gamma_helmholtz(bad, pt({1, 0, 0}), p), DomainError);
}

TEST(Helmholtz, HalfOrderClosedForm) {
    auto p = params(3);
    for (int k : {1, 2, 5})
        for (double r : {0.1, 1.0, 3.7}) {
            Alpha a = alpha(k, p);
            cplx exact = std::exp(cplx(0, 1) * a.root * r) / (4 * pi * r);
            EXPECT_LT(std::abs(gamma_helmholtz(a, pt({0, 0, r}), p) - exact), 1e-13 * std::abs(exact));
        }
}

TEST(ModeKernel, DeltaIdentity) {
    for (int n : {2, 3})
        for (double lam : {0.0, 1.0})
            for (int k : {1, 4}) {
                cplx v = delta_pairing(k, params(n, lam));
                EXPECT_NEAR(v.real(), 1.0, 1e-5) << n << " " << lam << " " << k;
                EXPECT_NEAR(v.imag(), 0.0, 1e-5) << n << " " << lam << " " << k;
            }
}

TEST(ModeKernel, Envelope) {
    auto p = params(3, 1.0);
    const int k = 4;
    double gap = -spectral_gap(k, p);
    for (double r = 1.0; r <= 6.0; r += 0.25) {
        for (Point e : {pt({1, 0, 0}), pt({0, 1, 0}), pt({-0.6, 0.8, 0}), pt({0.6, 0, 0.8})}) {
            double ratio = std::abs(gamma_mode(k, r * e, p)) * r * std::exp(gap * r);
            EXPECT_LE(ratio, (1 + 1e-12) / (4 * pi));
            if (e(0) == 1.0) {
                EXPECT_NEAR(ratio, 1 / (4 * pi), 1e-13);
            }
        }
    }
}

TEST(Conv, PartialFractionsFormula) {
    auto p = params(3);
    Point x = pt({1.2, -0.4, 0.9});
    for (int k : {1, 3}) {
        cplx expect = (gamma_laplace(x, p) - gamma_helmholtz(alpha(k, p), x, p)) / cplx(0, p.beta() * k);
        EXPECT_EQ(conv_laplace_mode(k, x, p, ConvMethod::partial_fractions).value, expect);
        EXPECT_EQ(conv_laplace_mode(-k, x, p, ConvMethod::partial_fractions).value, std::conj(expect));
    }
    EXPECT_THROW(conv_laplace_mode(1, x, params(3, 1.0), ConvMethod::partial_fractions), MethodUnavailableError);
    EXPECT_THROW(conv_laplace_mode(0, x, p, ConvMethod::partial_fractions), DomainError);
}

TEST(Conv, QuadratureMatchesPartialFractions) {
    for (int n : {2, 3})
        for (int k : {1, 2, 5})
            for (double r : {0.5, 2.0, 4.0}) {
                auto p = params(n);
                Point x = Point::Zero(n);
                x(0) = 0.6 * r;
                x(1) = -0.8 * r;
                cplx a = conv_laplace_mode(k, x, p, ConvMethod::partial_fractions).value;
                cplx b = conv_laplace_mode(k, x, p, ConvMethod::quadrature).value;
                EXPECT_LT(std::abs(a - b), 1e-9 * std::abs(a)) << n << " " << k << " " << r;
            }
}

TEST(Conv, GridFftMatchesPartialFractions) {
    auto p = params(3);
    Point x = pt({2, 0, 0});
    cplx a = conv_laplace_mode(1, x, p, ConvMethod::partial_fractions).value;
    ConvResult g = conv_laplace_mode(1, x, p, ConvMethod::grid_fft);
    EXPECT_FALSE(g.off_grid);
    EXPECT_LT(std::abs(a - g.value), 1e-3 * std::abs(a));
    ConvResult off = conv_laplace_mode(1, pt({1.1, 1.05, 0.3}), p, ConvMethod::grid_fft);
    EXPECT_TRUE(off.off_grid);
    cplx b = conv_laplace_mode(1, pt({1.1, 1.05, 0.3}), p, ConvMethod::partial_fractions).value;
    EXPECT_LT(std::abs(b - off.value), 1e-3 * std::abs(b));
    EXPECT_EQ(conv_laplace_mode(-1, x, p, ConvMethod::grid_fft).value, std::conj(g.value));
}

TEST(Conv, OseenQuadratureSolvesModeEquation) {
    // (-Delta + lambda d_1 + i beta k) conv = Gamma_L off the origin
    for (int n : {2, 3}) {
        auto p = params(n, 1.0);
        Point x = Point::Zero(n);
        x(0) = 1.3;
        x(1) = 0.7;
        const int k = 1;
        auto c = [&](const Point& y) { return conv_laplace_mode(k, y, p, ConvMethod::quadrature).value; };
        auto apply = [&](double h) {
            cplx lap = 0.0, d1;
            for (int i = 0; i < n; ++i) {
                Point a = x, b = x;
                a(i) += h;
                b(i) -= h;
                lap += (c(a) + c(b) - 2.0 * c(x)) / (h * h);
                if (i == 0) d1 = (c(a) - c(b)) / (2 * h);
            }
            return -lap + p.lambda * d1 + cplx(0, p.beta() * k) * c(x);
        };
        cplx v = (4.0 * apply(0.025) - apply(0.05)) / 3.0;
        double gl = gamma_laplace(x, p);
        EXPECT_LT(std::abs(v - gl), 1e-5 * std::abs(gl)) << n;
    }
}

TEST(Semigroup, StokesModesMatchPartialFractions) {
    for (int n : {2, 3})
        for (int k : {1, 2, 5}) {
            auto p = params(n);
            Point x = Point::Zero(n);
            x(0) = 2.0;
            x(1) = 1.0;
            ComplexMatrix closed = mode_tensor(k, x, p);
            ComplexMatrix semi = -semigroup_mode(k, x, p).value;
            EXPECT_LT(rel(semi, closed), 1e-7) << n << " " << k;
        }
}

TEST(Semigroup, SteadyLimit) {
    Point x = pt({2, 1, 0.5});
    RealMatrix st = gamma_stokes(x, params(3));
    EXPECT_LT(rel(semigroup_mode(0, x, params(3)).value, st.cast<cplx>()), 1e-10);
    for (int n : {2, 3}) {
        Point y = Point::Zero(n);
        y(0) = 2.0;
        y(1) = 1.0;
        RealMatrix os = gamma_oseen(y, params(n, 1.0));
        EXPECT_LT(rel(semigroup_mode(0, y, params(n, 1.0)).value, os.cast<cplx>()), 1e-8);
    }
    EXPECT_THROW(semigroup_mode(0, pt({1, 0}), params(2)), DomainError);
}

TEST(Semigroup, GradientMatchesDifferences) {
    for (int n : {2, 3}) {
        auto p = params(n, 1.0);
        Point x = Point::Zero(n);
        x(0) = -1.0;
        x(1) = 1.5;
        KernelDerivs d = semigroup_mode(2, x, p, true);
        for (int m = 0; m < n; ++m) {
            auto at = [&](double h) {
                Point a = x, b = x;
                a(m) += h;
                b(m) -= h;
                return ComplexMatrix((semigroup_mode(2, a, p).value - semigroup_mode(2, b, p).value) / (2 * h));
            };
            ComplexMatrix fd = (4.0 * at(0.01) - at(0.02)) / 3.0;
            EXPECT_LT((fd - d.gradient[m]).cwiseAbs().maxCoeff(), 1e-6 * d.value.cwiseAbs().maxCoeff()) << n << m;
        }
    }
}

TEST(LowerGamma, MatchesQuadrature) {
    for (int ta : {1, 2, 3, 5, 7, 10})
        for (double u : {0.0, 0.3, 1.9, 2.1, 7.5, 40.0}) {
            double a = 0.5 * ta;
            // int_0^1 t^{a-1} e^{-ut} dt with t = w^2 to tame the endpoint
            double ref = integrate_adaptive(
                [&](double w) { return 2.0 * std::pow(w, 2.0 * a - 1.0) * std::exp(-u * w * w); }, 0.0, 1.0, 1e-16,
                1e-14);
            EXPECT_NEAR(lower_gamma_scaled(ta, u), ref, 1e-13 * ref) << ta << " " << u;
        }
    EXPECT_NEAR(lower_gamma_scaled(4, 3.0), std::tgamma(2.0) * (1 - std::exp(-3.0) * 4.0) / 9.0, 1e-15);
}

TEST(ModeTensor, SampleInvariants) {
    for (double lam : {0.0, 1.0}) {
        auto p = params(3, lam);
        Point x = pt({0.8, -1.1, 0.4});
        ModeKernelSample s = mode_kernel(2, x, p);
        ComplexMatrix g = -s.second_derivs;
        g.diagonal().array() += s.second_derivs.trace();
        EXPECT_LT(rel(g, s.g), 1e-14);
        EXPECT_LT(std::abs(s.g.trace() - 2.0 * s.second_derivs.trace()), 1e-14 * s.g.cwiseAbs().maxCoeff());
        ModeKernelSample c = mode_kernel(-2, x, p);
        EXPECT_LT(rel(c.g, s.g.conjugate()), 1e-15);
        EXPECT_EQ(c.conv, std::conj(s.conv));
        // second derivatives against Richardson differences of conv
        ConvMethod m = lam == 0.0 ? ConvMethod::partial_fractions : ConvMethod::quadrature;
        auto cv = [&](const Point& y) { return conv_laplace_mode(2, y, p, m).value; };
        double h0 = 1e-2 * x.norm();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                auto dd = [&](double h) {
                    Point a = x, b = x, c2 = x, e = x;
                    a(i) += h; a(j) += h;
                    b(i) += h; b(j) -= h;
                    c2(i) -= h; c2(j) += h;
                    e(i) -= h; e(j) -= h;
                    return (cv(a) - cv(b) - cv(c2) + cv(e)) / (4 * h * h);
                };
                cplx r1 = (4.0 * dd(h0 / 2) - dd(h0)) / 3.0, r2 = (4.0 * dd(h0 / 4) - dd(h0 / 2)) / 3.0;
                cplx fd = (16.0 * r2 - r1) / 15.0;
                EXPECT_LT(std::abs(fd - s.second_derivs(i, j)), 1e-6 * s.second_derivs.cwiseAbs().maxCoeff())
                    << lam << " " << i << j;
            }
    }
}

TEST(ModeTensor, ModeEquationAndDivergence) {
    for (int n : {2, 3})
        for (double lam : {0.0, 1.0})
            for (int k : {1, 3}) {
                auto p = params(n, lam);
                Point x = Point::Zero(n);
                x(0) = -0.9;
                x(1) = 1.4;
                const double h = 0.02;
                auto G = [&](const Point& y) { return mode_tensor(k, y, p); };
                auto apply = [&](double s) {
                    ComplexMatrix lap = ComplexMatrix::Zero(n, n), d1;
                    for (int i = 0; i < n; ++i) {
                        Point a = x, b = x;
                        a(i) += s;
                        b(i) -= s;
                        lap += (G(a) + G(b) - 2.0 * G(x)) / (s * s);
                        if (i == 0) d1 = (G(a) - G(b)) / (2 * s);
                    }
                    return ComplexMatrix(-lap + lam * d1 + cplx(0, p.beta() * k) * G(x));
                };
                ComplexMatrix lhs = (4.0 * apply(h / 2) - apply(h)) / 3.0;
                ComplexMatrix rhs = -detail::laplace_hessian(x, n).cast<cplx>();
                EXPECT_LT(rel(lhs, rhs), 1e-3) << n << " " << lam << " " << k;

                KernelDerivs d = mode_tensor_derivs(k, x, p, true);
                for (int l = 0; l < n; ++l) {
                    cplx div = 0.0;
                    for (int j = 0; j < n; ++j) div += d.gradient[j](j, l);
                    EXPECT_LT(std::abs(div), 1e-6 * d.value.cwiseAbs().maxCoeff() / x.norm()) << n << lam << k;
                }
            }
}

TEST(ModeTensor, DecayBoundStokes) {
    auto p = params(3);
    for (int k = 1; k <= 8; ++k) {
        double lo = 1e300, hi = 0.0;
        for (double r = 2.0; r <= 6.0; r += 0.5) {
            double v = mode_tensor(k, r * pt({0.6, 0.8, 0}), p).cwiseAbs().maxCoeff() * k * r * r * r;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        EXPECT_LT(hi / lo, 3.0) << k;
        EXPECT_LT(hi, 1.0);
    }
}

TEST(TimeImage, ZeroMeanAndFourierCoefficients) {
    for (int n : {2, 3})
        for (double lam : {0.0, 1.0}) {
            auto p = params(n, lam);
            Point x = Point::Zero(n);
            x(0) = 1.5;
            x(1) = 1.0;
            TimeImageKernel tk(x, p);
            auto coeff_err = [&](int nt, int k, double& mean_rel) {
                ComplexMatrix c = ComplexMatrix::Zero(n, n);
                RealMatrix mean = RealMatrix::Zero(n, n);
                double scale = 0.0;
                for (int i = 0; i < nt; ++i) {
                    double t = i * p.period / nt;
                    RealMatrix v = tk.at(t);
                    mean += v / nt;
                    scale = std::max(scale, v.cwiseAbs().maxCoeff());
                    c += v.cast<cplx>() * std::polar(1.0, -p.beta() * k * t) / double(nt);
                }
                mean_rel = mean.cwiseAbs().maxCoeff() / scale;
                return rel(c, semigroup_mode(k, x, p).value);
            };
            double m1, m2;
            double e1 = coeff_err(64, 1, m1), e2 = coeff_err(128, 1, m2);
            EXPECT_LT(m2, 1e-4);
            EXPECT_LT(e2, 1e-3);
            EXPECT_NEAR(e1 / e2, 4.0, 0.6) << n << " " << lam;  // second order in the time step
        }
}
