// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "sdpm/stats/kmeans.hpp"
#include "sdpm/stats/samplers.hpp"
#include "sdpm/stats/skew.hpp"
#include "sdpm/stats/sniw.hpp"
#include "support/oracles.hpp"

using namespace sdpm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

SpdMatrix random_spd(Eigen::Index d, RngStream& rng) {
    Mat a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
    return SpdMatrix(a * a.transpose() + Mat::Identity(d, d) * 0.5);
}

SkewNormalParams random_re(Eigen::Index d, RngStream& rng) {
    return SkewNormalParams(rnorm_vec(d, rng), rnorm_vec(d, rng), random_spd(d, rng));
}

double log_phi(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi); }

// Skew-normal density from its random-effects representation
//   y | s ~ N(xi + psi s, Sigma), s ~ N+(0, 1),
// integrated over s numerically.
double sn_density_by_quadrature(const Vec& y, const SkewNormalParams& p) {
    auto integrand = [&](double s) {
        const Vec r = y - p.xi - s * p.psi;
        const double d = static_cast<double>(y.size());
        const double lq = -0.5 * p.sigma.mahalanobis(r) - 0.5 * p.sigma.logdet() - 0.5 * d * std::log(2.0 * std::numbers::pi);
        return 2.0 * std::exp(log_phi(s) + lq);
    };
    return oracle::integrate(integrand, 0.0, kInf);
}

}  // namespace

// ---------------------------------------------------------------------------
// SpdMatrix and RNG

TEST(SpdMatrix, RejectsBadInput) {
    EXPECT_THROW(SpdMatrix(Mat::Zero(2, 2)), NumericalError);
    Mat ns(2, 2);
    ns << 1, 0.5, 0.2, 1;
    EXPECT_THROW(SpdMatrix{ns}, NumericalError);
    EXPECT_THROW(SpdMatrix(Mat::Identity(2, 3)), ArgumentError);
    Mat ill = Mat::Identity(2, 2);
    ill(1, 1) = 1e-14;
    EXPECT_THROW(SpdMatrix{ill}, NumericalError);
    Mat nan = Mat::Identity(2, 2);
    nan(0, 0) = std::nan("");
    EXPECT_THROW(SpdMatrix{nan}, NumericalError);
}

TEST(SpdMatrix, SolveAndLogdet) {
    Mat m(2, 2);
    m << 4, 1, 1, 3;
    SpdMatrix s(m);
    EXPECT_NEAR(s.logdet(), std::log(11.0), 1e-14);
    const Vec b = vec({1, 2});
    EXPECT_LT((m * s.solve(b) - b).norm(), 1e-14);
    EXPECT_NEAR(s.mahalanobis(b), b.dot(m.inverse() * b), 1e-14);
    EXPECT_LT((s.inverse() - m.inverse()).norm(), 1e-14);
}

TEST(Rng, DeterministicAndStreamSeparated) {
    RngStream a(42, 3, 7), b(42, 3, 7), c(42, 3, 8), d(42, 4, 7);
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        (void)c;
    }
    RngStream a2(42, 3, 7), c2(42, 3, 8), d2(42, 4, 7);
    EXPECT_NE(a2.uniform(), c2.uniform());
    RngStream a3(42, 3, 7);
    EXPECT_NE(a3.uniform(), d2.uniform());
    (void)d;
}

TEST(Rng, SamplersDeterministicUnderFixedStream) {
    RngStream a(9), b(9);
    const SpdMatrix scale = SpdMatrix::identity(3);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(rtruncnorm_pos(0.3, 2.0, a), rtruncnorm_pos(0.3, 2.0, b));
        EXPECT_EQ(rinvwishart(6.0, scale, a).matrix(), rinvwishart(6.0, scale, b).matrix());
        EXPECT_EQ(a.gamma(2.5, 1.5), b.gamma(2.5, 1.5));
    }
}

// ---------------------------------------------------------------------------
// Special functions

TEST(StudentCdf, Examples) {
    EXPECT_EQ(student_cdf(0.0, 3.7), 0.5);
    EXPECT_NEAR(student_cdf(1.0, 1.0), 0.75, 1e-15);
    for (double x : {-4.0, -1.3, -0.2, 0.5, 2.0, 6.0}) {
        EXPECT_NEAR(student_cdf(x, 1e6), boost::math::cdf(boost::math::normal(), x), 1e-6);
        for (double nu : {1.5, 3.0, 12.0}) {
            EXPECT_NEAR(student_cdf(x, nu), boost::math::cdf(boost::math::students_t(nu), x), 1e-14);
        }
    }
    EXPECT_THROW(student_cdf(1.0, 0.0), ArgumentError);
}

TEST(StudentCdf, LogTailIsFinite) {
    for (double x : {-1e3, -1e8, -1e150}) {
        const double v = log_student_cdf(x, 4.0);
        EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_NEAR(log_student_cdf(-30.0, 5.0), std::log(boost::math::cdf(boost::math::students_t(5.0), -30.0)), 1e-10);
    // 30-digit reference value of log Phi(-40)
    EXPECT_NEAR(log_normal_cdf(-40.0), -804.608442013753788, 1e-9);
}

// ---------------------------------------------------------------------------
// Parametrizations

TEST(Convert, Examples) {
    const auto c0 = convert_re_to_canonical(SkewNormalParams(Vec::Zero(2), Vec::Zero(2), SpdMatrix::identity(2)));
    EXPECT_EQ(c0.xi(), Vec::Zero(2));
    EXPECT_LT((c0.omega_mat().matrix() - Mat::Identity(2, 2)).norm(), 1e-15);
    EXPECT_EQ(c0.eta(), Vec::Zero(2));

    const auto c1 = convert_re_to_canonical(SkewNormalParams(vec({0}), vec({1}), SpdMatrix::scalar(1)));
    EXPECT_NEAR(c1.omega_mat()(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(c1.omega()(0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(c1.eta()(0), 1.0, 1e-15);

    const auto r0 = convert_canonical_to_re(SkewNormalCanonical(Vec::Zero(2), SpdMatrix::identity(2), Vec::Zero(2)));
    EXPECT_EQ(r0.psi, Vec::Zero(2));
    EXPECT_LT((r0.sigma.matrix() - Mat::Identity(2, 2)).norm(), 1e-15);

    const auto r1 = convert_canonical_to_re(SkewNormalCanonical(vec({0}), SpdMatrix::scalar(2), vec({1})));
    EXPECT_NEAR(r1.psi(0), 1.0, 1e-15);
    EXPECT_NEAR(r1.sigma(0, 0), 1.0, 1e-15);
}

TEST(Convert, RoundTripRandom) {
    RngStream rng(11);
    for (Eigen::Index d : {1, 2, 5}) {
        for (int t = 0; t < 50; ++t) {
            const SkewNormalParams p = random_re(d, rng);
            const SkewNormalParams q = convert_canonical_to_re(convert_re_to_canonical(p));
            EXPECT_LT((p.xi - q.xi).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT((p.psi - q.psi).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT((p.sigma.matrix() - q.sigma.matrix()).cwiseAbs().maxCoeff(), 1e-10);
            const SkewNormalCanonical c = convert_re_to_canonical(p);
            const SkewNormalCanonical c2 = convert_re_to_canonical(convert_canonical_to_re(c));
            EXPECT_LT((c.eta() - c2.eta()).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Convert, DimensionErrors) {
    EXPECT_THROW(SkewNormalParams(vec({0, 0}), vec({0}), SpdMatrix::identity(2)), ArgumentError);
    const auto c = convert_re_to_canonical(SkewNormalParams(vec({0, 0}), vec({1, 0}), SpdMatrix::identity(2)));
    EXPECT_THROW(sn_logpdf(vec({1}), c), ArgumentError);
    EXPECT_THROW(st_logpdf(vec({1, 2, 3}), c, 4.0), ArgumentError);
}

// ---------------------------------------------------------------------------
// Densities

TEST(SnLogpdf, Examples) {
    const auto c = SkewNormalCanonical(vec({0.7}), SpdMatrix::scalar(1), vec({3.0}));
    EXPECT_NEAR(sn_logpdf(vec({0.7}), c), std::log(0.398942280401433), 1e-12);
    const auto c2 = SkewNormalCanonical(vec({0}), SpdMatrix::scalar(1), vec({1}));
    const double phi1 = boost::math::pdf(boost::math::normal(), 1.0);
    const double cdf1 = boost::math::cdf(boost::math::normal(), 1.0);
    EXPECT_NEAR(sn_logpdf(vec({1}), c2), std::log(2.0 * phi1 * cdf1), 1e-12);
    EXPECT_NEAR(std::exp(sn_logpdf(vec({1}), c2)), 0.4071616, 1e-6);
}

TEST(SnLogpdf, ZeroSkewIsNormal) {
    RngStream rng(3);
    for (Eigen::Index d : {1, 3}) {
        const SpdMatrix om = random_spd(d, rng);
        const Vec xi = rnorm_vec(d, rng);
        const SkewNormalCanonical c(xi, om, Vec::Zero(d));
        for (int i = 0; i < 10; ++i) {
            const Vec y = rnorm_vec(d, rng) * 2.0;
            EXPECT_NEAR(sn_logpdf(y, c), mvn_logpdf(y, xi, om), 1e-12);
            EXPECT_NEAR(st_logpdf(y, c, 4.5), mvt_logpdf(y, xi, om, 4.5), 1e-12);
        }
    }
}

TEST(SnLogpdf, MatchesRandomEffectsQuadrature) {
    RngStream rng(17);
    for (Eigen::Index d : {1, 2, 3}) {
        for (int t = 0; t < 5; ++t) {
            const SkewNormalParams p = random_re(d, rng);
            const auto c = convert_re_to_canonical(p);
            const Vec y = p.xi + rnorm_vec(d, rng);
            const double q = sn_density_by_quadrature(y, p);
            EXPECT_NEAR(std::exp(sn_logpdf(y, c)), q, 1e-10 * std::max(1.0, q));
        }
    }
}

TEST(StLogpdf, MatchesScaleMixtureQuadrature) {
    // y | w ~ SN(xi, psi / sqrt(w), Sigma / w) with w ~ Gamma(nu/2, nu/2).
    RngStream rng(23);
    for (Eigen::Index d : {1, 2}) {
        for (double nu : {2.5, 7.0}) {
            const SkewNormalParams p = random_re(d, rng);
            const Vec y = p.xi + rnorm_vec(d, rng);
            auto integrand = [&](double w) {
                if (w <= 0.0) return 0.0;
                const SkewNormalParams pw(p.xi, p.psi / std::sqrt(w), SpdMatrix(p.sigma.matrix() / w));
                const double lg = 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu) + (0.5 * nu - 1.0) * std::log(w) -
                                  0.5 * nu * w;
                return std::exp(lg + sn_logpdf(y, convert_re_to_canonical(pw)));
            };
            const double q = oracle::integrate(integrand, 0.0, kInf, 1e-13);
            EXPECT_NEAR(std::exp(st_logpdf(y, SkewTParams(p, nu))), q, 1e-9 * std::max(1.0, q));
        }
    }
}

TEST(StLogpdf, Examples) {
    const auto c = SkewNormalCanonical(vec({2.0}), SpdMatrix::scalar(1), vec({-1.7}));
    EXPECT_NEAR(st_logpdf(vec({2.0}), c, 1.0), std::log(1.0 / std::numbers::pi), 1e-13);
    EXPECT_NEAR(mvt_logpdf(vec({0.0}), vec({0.0}), SpdMatrix::scalar(1), 1.0), std::log(1.0 / std::numbers::pi), 1e-13);
    EXPECT_THROW(mvt_logpdf(vec({0.0}), vec({0.0}), SpdMatrix::scalar(1), 0.0), ArgumentError);
}

TEST(StLogpdf, LargeNuLimit) {
    RngStream rng(5);
    for (Eigen::Index d : {1, 3}) {
        const auto c = convert_re_to_canonical(random_re(d, rng));
        for (int i = 0; i < 20; ++i) {
            const Vec y = c.xi() + 1.5 * rnorm_vec(d, rng);
            EXPECT_NEAR(st_logpdf(y, c, 1e6), sn_logpdf(y, c), 1e-4);
            // typical points: the gap grows like q^2 / (4 nu) in the Mahalanobis distance q
            Vec z = rnorm_vec(d, rng);
            if (z.norm() > 3.0) z *= 3.0 / z.norm();
            const Vec x = c.xi() + c.omega_mat().lower() * z;
            EXPECT_NEAR(mvt_logpdf(x, c.xi(), c.omega_mat(), 1e6), mvn_logpdf(x, c.xi(), c.omega_mat()), 1e-5);
        }
    }
}

TEST(Densities, OneDimensionalNormalization) {
    const double xi = 0.4, om = 1.7;
    for (double eta : {0.0, 0.8, -3.0, 10.0}) {
        const SkewNormalCanonical c(vec({xi}), SpdMatrix::scalar(om), vec({eta}));
        auto sn = [&](double y) { return std::exp(sn_logpdf(vec({y}), c)); };
        EXPECT_NEAR(oracle::integrate(sn, -kInf, xi, 1e-12) + oracle::integrate(sn, xi, kInf, 1e-12), 1.0, 1e-6);
        const double lo = xi - 50.0 * std::sqrt(om), hi = xi + 50.0 * std::sqrt(om);
        EXPECT_NEAR(oracle::integrate(sn, lo, hi), 1.0, 1e-6);
        for (double nu : {1.0, 3.0, 30.0}) {
            auto st = [&](double y) { return std::exp(st_logpdf(vec({y}), c, nu)); };
            auto mt = [&](double y) { return std::exp(mvt_logpdf(vec({y}), vec({xi}), SpdMatrix::scalar(om), nu)); };
            EXPECT_NEAR(oracle::integrate(st, -kInf, xi, 1e-12) + oracle::integrate(st, xi, kInf, 1e-12), 1.0, 1e-6)
                << "nu=" << nu << " eta=" << eta;
            EXPECT_NEAR(oracle::integrate(mt, -kInf, xi, 1e-12) + oracle::integrate(mt, xi, kInf, 1e-12), 1.0, 1e-6);
        }
    }
}

// ---------------------------------------------------------------------------
// Samplers

TEST(TruncNorm, HalfNormalMoments) {
    RngStream rng(101);
    std::vector<double> x(100000);
    for (auto& v : x) v = rtruncnorm_pos(0.0, 1.0, rng);
    const auto m = oracle::moments(x);
    EXPECT_LT(std::abs(m.mean - std::sqrt(2.0 / std::numbers::pi)), 3.0 * m.se);
    EXPECT_LT(std::abs(m.var - (1.0 - 2.0 / std::numbers::pi)), 3.0 * oracle::variance_se(x));
    for (double v : x) ASSERT_GE(v, 0.0);
}

TEST(TruncNorm, TailRegimeMoments) {
    // mean/sd < -4 uses the rejection sampler; E = mu + sd * phi(a) / (1 - Phi(a)), a = -mu / sd.
    for (double mu : {-2.0, -5.0, -9.0}) {
        const double sd = 0.5;
        RngStream rng(202);
        std::vector<double> x(100000);
        for (auto& v : x) v = rtruncnorm_pos(mu, sd * sd, rng);
        const double a = -mu / sd;
        const boost::math::normal n01;
        const double lam = boost::math::pdf(n01, a) / boost::math::cdf(boost::math::complement(n01, a));
        const double mean = mu + sd * lam;
        const double var = sd * sd * (1.0 + a * lam - lam * lam);
        const auto m = oracle::moments(x);
        EXPECT_LT(std::abs(m.mean - mean), 3.0 * m.se) << "mu=" << mu;
        EXPECT_LT(std::abs(m.var - var), 3.0 * oracle::variance_se(x)) << "mu=" << mu;
    }
    RngStream rng(1);
    EXPECT_THROW(rtruncnorm_pos(0.0, 0.0, rng), ArgumentError);
}

TEST(InvWishart, ScalarMean) {
    RngStream rng(303);
    std::vector<double> x(100000);
    for (auto& v : x) v = rinvwishart(5.0, SpdMatrix::scalar(3.0), rng)(0, 0);
    const auto m = oracle::moments(x);
    EXPECT_LT(std::abs(m.mean - 1.0), 3.0 * m.se);
    EXPECT_THROW(rinvwishart(0.0, SpdMatrix::scalar(1.0), rng), ArgumentError);
    EXPECT_THROW(rinvwishart(1.0, SpdMatrix::identity(2), rng), ArgumentError);
}

TEST(InvWishart, MatrixMean) {
    RngStream rng(404);
    const int n = 100000;
    std::vector<double> e00(n), e01(n), e11(n);
    for (int i = 0; i < n; ++i) {
        const SpdMatrix s = rinvwishart(10.0, SpdMatrix::identity(2), rng);
        e00[i] = s(0, 0);
        e01[i] = s(0, 1);
        e11[i] = s(1, 1);
    }
    const auto m00 = oracle::moments(e00), m01 = oracle::moments(e01), m11 = oracle::moments(e11);
    EXPECT_LT(std::abs(m00.mean - 1.0 / 7.0), 3.0 * m00.se);
    EXPECT_LT(std::abs(m01.mean), 3.0 * m01.se);
    EXPECT_LT(std::abs(m11.mean - 1.0 / 7.0), 3.0 * m11.se);
}

TEST(InvWishart, LogpdfMatchesInverseGamma) {
    // IW(dof, scale) in one dimension is InvGamma(dof / 2, scale / 2).
    for (double dof : {3.0, 7.5}) {
        for (double scale : {0.5, 4.0}) {
            const boost::math::inverse_gamma ig(0.5 * dof, 0.5 * scale);
            for (double s : {0.1, 0.8, 3.0}) {
                EXPECT_NEAR(invwishart_logpdf(SpdMatrix::scalar(s), dof, SpdMatrix::scalar(scale)),
                            std::log(boost::math::pdf(ig, s)), 1e-12);
            }
        }
    }
}

TEST(Dirichlet, MeanAndSum) {
    RngStream rng(5);
    std::vector<double> first(20000);
    for (auto& v : first) {
        const auto w = rdirichlet({2.0, 3.0, 5.0}, rng);
        EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
        v = w[0];
    }
    const auto m = oracle::moments(first);
    EXPECT_LT(std::abs(m.mean - 0.2), 3.0 * m.se);
}

// ---------------------------------------------------------------------------
// Structured Normal inverse-Wishart

namespace {
SNiWParams example_sniw(double b_scale = 1.0) {
    Mat b(2, 2);
    b << 0.5, 0.2, 0.2, 0.8;
    Mat l(2, 2);
    l << 2.0, 0.3, 0.3, 1.0;
    return SNiWParams(vec({1.0, -2.0}), vec({0.5, 0.0}), SpdMatrix(b * b_scale), SpdMatrix(l), 7.0);
}
}  // namespace

TEST(Sniw, Validation) {
    EXPECT_THROW(SNiWParams(vec({0, 0}), vec({0, 0}), SpdMatrix::identity(2), SpdMatrix::identity(2), 3.0), ArgumentError);
    EXPECT_THROW(SNiWParams(vec({0, 0}), vec({0}), SpdMatrix::identity(2), SpdMatrix::identity(2), 5.0), ArgumentError);
    EXPECT_THROW(SNiWParams(vec({0, 0}), vec({0, 0}), SpdMatrix::identity(3), SpdMatrix::identity(2), 5.0), ArgumentError);
    const auto h = example_sniw();
    EXPECT_THROW(sniw_logpdf(vec({0}), vec({0, 0}), SpdMatrix::identity(2), h), ArgumentError);
}

TEST(Sniw, DegenerateCovarianceConcentrates) {
    Mat l(2, 2);
    l << 2.0, 0.3, 0.3, 1.0;
    const SNiWParams h(vec({1.0, -2.0}), vec({0.5, 0.0}), SpdMatrix(Mat::Identity(2, 2) * 1e-12), SpdMatrix(l), 7.0);
    RngStream rng(6);
    for (int i = 0; i < 100; ++i) {
        const auto p = rsniw(h, rng);
        EXPECT_LT((p.xi - h.b_xi).cwiseAbs().maxCoeff(), 1e-4);
        EXPECT_LT((p.psi - h.b_psi).cwiseAbs().maxCoeff(), 1e-4);
    }
}

TEST(Sniw, MonteCarloMeanAndKroneckerCovariance) {
    const auto h = example_sniw();
    const Mat e_sigma = h.lambda_scale.matrix() / (h.lambda_dof - 2.0 - 1.0);
    Mat expected(4, 4);  // cov(vec[xi psi]) = B (x) E[Sigma]
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) expected.block(2 * a, 2 * b, 2, 2) = h.b_cov(a, b) * e_sigma;

    RngStream rng(7);
    const int n = 100000;
    std::vector<Vec> v(n);
    for (int i = 0; i < n; ++i) {
        const auto p = rsniw(h, rng);
        v[i] = Vec(4);
        v[i] << p.xi, p.psi;
    }
    Vec mean4(4);
    mean4 << h.b_xi, h.b_psi;
    for (int r = 0; r < 4; ++r) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = v[i](r);
        const auto m = oracle::moments(x);
        EXPECT_LT(std::abs(m.mean - mean4(r)), 3.0 * m.se) << "component " << r;
        for (int c = r; c < 4; ++c) {
            std::vector<double> prod(n);
            for (int i = 0; i < n; ++i) prod[i] = (v[i](r) - mean4(r)) * (v[i](c) - mean4(c));
            const auto mp = oracle::moments(prod);
            EXPECT_LT(std::abs(mp.mean - expected(r, c)), 3.5 * mp.se) << "cov " << r << "," << c;
        }
    }
}

TEST(Sniw, LocationIntegralGivesInverseWishartMarginal) {
    Mat b(2, 2);
    b << 0.6, -0.2, -0.2, 0.4;
    const SNiWParams h(vec({0.3}), vec({-0.4}), SpdMatrix(b), SpdMatrix::scalar(2.0), 4.0);
    for (double s : {0.3, 1.1, 2.5}) {
        const SpdMatrix sigma = SpdMatrix::scalar(s);
        // (xi, psi) | sigma is Gaussian; +-15 sd holds all but ~1e-50 of the mass
        const double sx = 15.0 * std::sqrt(b(0, 0) * s), sp = 15.0 * std::sqrt(b(1, 1) * s);
        auto inner = [&](double xi) {
            return oracle::integrate([&](double psi) { return std::exp(sniw_logpdf(vec({xi}), vec({psi}), sigma, h)); },
                                     h.b_psi(0) - sp, h.b_psi(0) + sp, 1e-10);
        };
        const double total = oracle::integrate(inner, h.b_xi(0) - sx, h.b_xi(0) + sx, 1e-9);
        const double marginal = std::exp(invwishart_logpdf(sigma, h.lambda_dof, h.lambda_scale));
        EXPECT_NEAR(total, marginal, 1e-5 * std::max(1.0, marginal)) << "sigma=" << s;
    }
}

TEST(Sniw, LocationModeAtPriorMean) {
    const auto h = example_sniw();
    RngStream rng(8);
    const SpdMatrix sigma = random_spd(2, rng);
    const double at_mode = sniw_logpdf(h.b_xi, h.b_psi, sigma, h);
    EXPECT_TRUE(std::isfinite(at_mode));
    for (int i = 0; i < 50; ++i) {
        EXPECT_LT(sniw_logpdf(h.b_xi + 0.1 * rnorm_vec(2, rng), h.b_psi + 0.1 * rnorm_vec(2, rng), sigma, h), at_mode);
    }
}

// ---------------------------------------------------------------------------

TEST(KMeans, SeparatesObviousGroups) {
    RngStream rng(12);
    Mat pts(2, 60);
    for (int i = 0; i < 60; ++i) {
        const double off = i < 30 ? -10.0 : 10.0;
        pts(0, i) = off + rng.normal();
        pts(1, i) = rng.normal();
    }
    const auto km = kmeans(pts, 2, rng);
    for (int i = 1; i < 30; ++i) EXPECT_EQ(km.labels[i], km.labels[0]);
    for (int i = 31; i < 60; ++i) EXPECT_EQ(km.labels[i], km.labels[30]);
    EXPECT_NE(km.labels[0], km.labels[30]);
}
