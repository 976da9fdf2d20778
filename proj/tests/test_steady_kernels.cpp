#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "tpk/steady_kernels.hpp"

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

// Composite Gauss-Legendre on [a, b] with m panels.
double composite(const std::function<double(double)>& f, double a, double b, int m) {
    double s = 0.0, h = (b - a) / m;
    for (int i = 0; i < m; ++i) s += integrate_gl(f, a + i * h, a + (i + 1) * h, 20);
    return s;
}

// Ein(z) = int_0^z (1 - e^{-t})/t dt.
double ein(double z) {
    if (z < 1.0) {
        double s = 0.0, term = 1.0;
        for (int k = 1; k < 40; ++k) {
            term *= (k == 1 ? z : -z / k);
            s += term / k;
        }
        return s;
    }
    return 0.57721566490153286061 + std::log(z) - std::expint(-z);
}

// Independent n = 3 Oseen oracle: Phi = Ein(k(|x| - x_1))/(4 pi), Gamma = (delta Delta - dd) Phi / lambda, by FD.
RealMatrix oseen3_oracle(const Point& x, double lambda) {
    auto phi = [&](const Point& y) { return ein(0.5 * lambda * (y.norm() - y(0))) / (4.0 * pi); };
    const double h = 1e-3;
    RealMatrix d(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            auto second = [&](double s) {
                Point a = x, b = x, c = x, e = x;
                a(i) += s; a(j) += s;
                b(i) += s; b(j) -= s;
                c(i) -= s; c(j) += s;
                e(i) -= s; e(j) -= s;
                return (phi(a) - phi(b) - phi(c) + phi(e)) / (4 * s * s);
            };
            d(i, j) = (4.0 * second(h / 2) - second(h)) / 3.0;
        }
    RealMatrix g = -d;
    g.diagonal().array() += d.trace();
    return g / lambda;
}

// Matrix-valued central second difference along axis m (Richardson).
template <class F>
RealMatrix d2(F&& f, const Point& x, int m, double h) {
    auto c = [&](double s) {
        Point a = x, b = x;
        a(m) += s;
        b(m) -= s;
        return RealMatrix((f(a) - 2.0 * f(x) + f(b)) / (s * s));
    };
    return (4.0 * c(h / 2) - c(h)) / 3.0;
}

template <class F>
auto d1(F&& f, const Point& x, int m, double h) {
    auto c = [&](double s) {
        Point a = x, b = x;
        a(m) += s;
        b(m) -= s;
        return decltype(f(x))((f(a) - f(b)) / (2 * s));
    };
    return decltype(f(x))((4.0 * c(h / 2) - c(h)) / 3.0);
}

}  // namespace

TEST(UnitSphere, Examples) {
    EXPECT_NEAR(unit_sphere_area(2), 2 * pi, 1e-14);
    EXPECT_NEAR(unit_sphere_area(3), 4 * pi, 1e-14);
    EXPECT_NEAR(unit_sphere_area(4), 2 * pi * pi, 1e-13);
    EXPECT_THROW(unit_sphere_area(1), DomainError);
}

TEST(Laplace, Examples) {
    EXPECT_NEAR(gamma_laplace(pt({1, 0, 0}), params(3)), 1.0 / (4 * pi), 1e-15);
    EXPECT_NEAR(gamma_laplace(pt({0.6, 0.8}), params(2)), 0.0, 1e-15);
    EXPECT_THROW(gamma_laplace(pt({0, 0, 0}), params(3)), SingularPointError);
}

TEST(Laplace, DeltaIdentityAgainstGaussian) {
    // phi = exp(-r^2): -Delta phi = (2n - 4 r^2) e^{-r^2}; substitute r = s^2 to tame the origin.
    for (int n : {2, 3}) {
        auto p = params(n);
        double w = unit_sphere_area(n);
        auto f = [&](double s) {
            double r = s * s;
            if (r == 0.0) return 0.0;
            Point x = Point::Zero(n);
            x(0) = r;
            return gamma_laplace(x, p) * (2.0 * n - 4.0 * r * r) * std::exp(-r * r) * w * std::pow(r, n - 1) * 2 * s;
        };
        EXPECT_NEAR(composite(f, 0.0, 3.5, 200), 1.0, 1e-6) << n;
    }
}

TEST(Laplace, Homogeneity) {
    auto p2 = params(2);
    Point x = pt({0.3, -1.1});
    EXPECT_NEAR(gamma_laplace(3.0 * x, p2), gamma_laplace(x, p2) - std::log(3.0) / (2 * pi), 1e-15);
}

TEST(Stokes, ExamplesAndSymmetry) {
    auto p = params(3);
    RealMatrix g = gamma_stokes(pt({1, 0, 0}), p);
    EXPECT_NEAR(g(0, 0), 0.0795775, 1e-7);
    EXPECT_NEAR(g(0, 1), 0.0, 1e-16);
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int n : {2, 3, 4}) {
        for (int i = 0; i < 20; ++i) {
            Point x(n);
            for (int j = 0; j < n; ++j) x(j) = nd(rng);
            RealMatrix s = gamma_stokes(x, params(n));
            EXPECT_EQ((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
            if (n >= 3) {
                RealMatrix t = gamma_stokes(2.5 * x, params(n));
                EXPECT_LT((t - std::pow(2.5, 2 - n) * s).cwiseAbs().maxCoeff(), 1e-15 * s.cwiseAbs().maxCoeff() * 10);
            }
        }
    }
}

TEST(Stokes, SolvesSteadyStokesAwayFromOrigin) {
    for (int n : {2, 3}) {
        auto p = params(n);
        Point x = n == 2 ? pt({1.2, -0.7}) : pt({1.2, -0.7, 0.4});
        auto G = [&](const Point& y) { return gamma_stokes(y, p); };
        RealMatrix lap = RealMatrix::Zero(n, n);
        for (int m = 0; m < n; ++m) lap += d2(G, x, m, 1e-2);
        // -Delta Gamma_{.j} + grad gamma_j = 0
        RealMatrix gradp(n, n);
        for (int m = 0; m < n; ++m) {
            Point gm = d1([&](const Point& y) { return Point(pressure_kernel(y, p)); }, x, m, 1e-3);
            gradp.row(m) = gm.transpose();
        }
        EXPECT_LT((-lap + gradp).cwiseAbs().maxCoeff(), 1e-6);
        Eigen::RowVectorXd div = Eigen::RowVectorXd::Zero(n);
        for (int m = 0; m < n; ++m) div += RealMatrix(d1(G, x, m, 1e-3)).row(m);
        EXPECT_LT(div.cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(PsiOseen, Examples) {
    auto p = params(3, 1.0);
    EXPECT_NEAR(psi_oseen(pt({1, 0, 0}), p), -std::exp(-1.0) / (4 * pi), 1e-15);
    EXPECT_NEAR(psi_oseen(pt({1, 0, 0}), p), -0.02927, 1e-5);
    EXPECT_NEAR(psi_oseen(pt({-1, 0, 0}), p), -1.0 / (4 * pi), 1e-15);
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    for (int n : {2, 3}) {
        for (int i = 0; i < 50; ++i) {
            Point x(n);
            for (int j = 0; j < n; ++j) x(j) = 3 * nd(rng);
            EXPECT_LT(psi_oseen(x, params(n, 1.0)), 0.0);
            EXPECT_EQ(psi_oseen(x, params(n, -0.7)), psi_oseen(detail::reflect1(x), params(n, 0.7)));
        }
    }
    EXPECT_THROW(psi_oseen(pt({0, 0, 0}), p), SingularPointError);
}

TEST(Oseen, MatchesClosedFormPotentialIn3D) {
    for (Point x : {pt({2, 1, 0}), pt({-1.5, 0.3, 0.8}), pt({4, 0.2, -0.1}), pt({0.5, 0.05, 0}), pt({1, 2, 3})}) {
        RealMatrix g = gamma_oseen(x, params(3, 1.0));
        RealMatrix ref = oseen3_oracle(x, 1.0);
        EXPECT_LT((g - ref).cwiseAbs().maxCoeff(), 1e-6 * ref.cwiseAbs().maxCoeff()) << x.transpose();
    }
}

TEST(Oseen, DownstreamAxisClosedForm) {
    // On x' = 0, x_1 > 0: Gamma = diag(1/(4 pi x1), 1/(8 pi x1), 1/(8 pi x1)).
    RealMatrix g = gamma_oseen(pt({0.5, 0, 0}), params(3, 1.0));
    EXPECT_NEAR(g(0, 0), 1.0 / (2 * pi), 1e-12);
    EXPECT_NEAR(g(1, 1), 1.0 / (4 * pi), 1e-12);
    EXPECT_NEAR(g(0, 1), 0.0, 1e-14);
}

TEST(Oseen, SmallLambdaApproachesStokes) {
    Point x = pt({2, 1, 0});
    RealMatrix g = gamma_oseen(x, params(3, 1e-6));
    RealMatrix s = gamma_stokes(x, params(3));
    EXPECT_LT((g - s).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Oseen, DivergenceAndResidual) {
    for (int n : {2, 3}) {
        for (double lambda : {1.0, -0.5}) {
            auto p = params(n, lambda);
            std::vector<Point> xs = n == 3 ? std::vector<Point>{pt({2, 1, 0}), pt({-1, 1.5, 0.5}), pt({0.3, -0.8, 2})}
                                           : std::vector<Point>{pt({2, 1}), pt({-1, 1.5}), pt({3, -0.6})};
            for (const Point& x : xs) {
                auto G = [&](const Point& y) { return gamma_oseen(y, p); };
                double h = 2e-2;
                RealMatrix lap = RealMatrix::Zero(n, n);
                for (int m = 0; m < n; ++m) lap += d2(G, x, m, h);
                RealMatrix dx1 = d1(G, x, 0, h);
                RealMatrix gradp(n, n);
                Eigen::RowVectorXd div = Eigen::RowVectorXd::Zero(n);
                for (int m = 0; m < n; ++m) {
                    gradp.row(m) = d1([&](const Point& y) { return Point(pressure_kernel(y, p)); }, x, m, h).transpose();
                    div += RealMatrix(d1(G, x, m, h)).row(m);
                }
                RealMatrix res = -lap + lambda * dx1 + gradp;
                double scale = G(x).cwiseAbs().maxCoeff();
                EXPECT_LT(res.cwiseAbs().maxCoeff(), 1e-4) << n << " " << lambda << " " << x.transpose();
                EXPECT_LT(div.cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, scale));
            }
        }
    }
}

TEST(Oseen, ReflectionForNegativeLambda) {
    Point x = pt({1.3, -0.4, 0.9});
    RealMatrix a = gamma_oseen(x, params(3, -1.0));
    RealMatrix b = detail::reflect1(gamma_oseen(detail::reflect1(x), params(3, 1.0)));
    EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Oseen, WakeAnisotropy) {
    auto p = params(3, 1.0);
    for (double r : {4.0, 8.0, 16.0}) {
        double down = gamma_oseen(pt({r, 0, 0}), p).norm();
        double up = gamma_oseen(pt({-r, 0.001, 0}), p).norm();
        EXPECT_GT(down, 2.0 * up) << r;
    }
}

TEST(Oseen, ClosedFormBlocksMatchQuadrature) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> N;
    for (int n : {2, 3})
        for (double lam : {0.3, 1.0, 4.0})
            for (int i = 0; i < 40; ++i) {
                Point x(n);
                for (int a = 0; a < n; ++a) x(a) = 3.0 * N(rng);
                if (i < 5) {
                    x.tail(n - 1) *= 1e-4;
                    x(0) = std::abs(x(0));
                }
                RealMatrix q = detail::oseen_trailing_block_quadrature(x, n, lam);
                RealMatrix d = lam * gamma_oseen(x, params(n, lam));
                // D = delta tr D - lambda Gamma, tr D = tr(lambda Gamma) / (n - 1)
                double tr = d.trace() / (n - 1);
                RealMatrix D = -d;
                D.diagonal().array() += tr;
                double err = (D.bottomRightCorner(n - 1, n - 1) - q).cwiseAbs().maxCoeff() / q.cwiseAbs().maxCoeff();
                EXPECT_LT(err, n == 3 ? 1e-11 : 1e-6) << n << " " << lam << " " << x.transpose();
            }
}

TEST(Oseen, SingularSet) {
    EXPECT_THROW(gamma_oseen(pt({-1, 0, 0}), params(3, 1.0)), SingularSegmentError);
    EXPECT_THROW(gamma_oseen(pt({0, 0, 0}), params(3, 1.0)), SingularPointError);
    EXPECT_THROW(gamma_oseen(pt({1, 0, 0}), params(3, -1.0)), SingularSegmentError);
    EXPECT_NO_THROW(gamma_oseen(pt({1, 0, 0}), params(3, 1.0)));
}

TEST(Pressure, Examples) {
    Point g = pressure_kernel(pt({1, 0, 0}), params(3));
    EXPECT_NEAR(g(0), 0.0795775, 1e-7);
    EXPECT_EQ(g(1), 0.0);
    Point x = pt({0.4, -1.3, 2.2});
    EXPECT_EQ((pressure_kernel(-x, params(3)) + pressure_kernel(x, params(3))).norm(), 0.0);
    EXPECT_NEAR(pressure_kernel(pt({2, 0}), params(2)).norm(), 1.0 / (4 * pi), 1e-15);
}
