// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sdpm/stats/sniw.hpp"
#include "sdpm/stats/special.hpp"

namespace sdpm {

/// One (xi, psi, Sigma) triple used as an observation by the estimators.
struct SNiWDraw {
    Vec xi;
    Vec psi;
    SpdMatrix sigma;
};

namespace detail {

/// Draw with the quantities every estimator needs.
struct PreparedDraw {
    Mat loc;        ///< d x 2 [xi psi]
    Mat prec;       ///< Sigma^{-1}
    Mat prec_loc;   ///< Sigma^{-1} [xi psi]
    double logdet;  ///< log|Sigma|
};

inline std::vector<PreparedDraw> prepare(const std::vector<SNiWDraw>& draws) {
    std::vector<PreparedDraw> out;
    out.reserve(draws.size());
    const Eigen::Index d = draws.empty() ? 0 : draws.front().xi.size();
    for (const auto& x : draws) {
        if (x.xi.size() != d || x.psi.size() != d || x.sigma.dim() != d) {
            throw ArgumentError("sNiW estimator: inconsistent draw dimensions");
        }
        PreparedDraw p;
        p.loc.resize(d, 2);
        p.loc.col(0) = x.xi;
        p.loc.col(1) = x.psi;
        p.prec = x.sigma.inverse();
        p.prec_loc = p.prec * p.loc;
        p.logdet = x.sigma.logdet();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace detail

/// Inverse-Wishart degrees of freedom from the profile equation
///   h(lambda) = -1/2 sum_i r_i log|Sigma_i| - (N d / 2) log 2 - (N / 2) digamma_d(lambda / 2)
///               + (N / 2) [d log(N lambda + shift) - log|P|] - penalty = 0
/// where P = prior_prec + sum_i r_i Sigma_i^{-1}, N = sum_i r_i. h is strictly
/// decreasing. With shift = 0, penalty = 0 and prior_prec = 0 this is the
/// likelihood equation; the maximum a posteriori variant uses shift = 1,
/// penalty = 1.
struct LambdaEquation {
    int d = 1;
    double n_eff = 0.0;
    double sum_r_logdet = 0.0;
    double logdet_p = 0.0;
    double shift = 0.0;
    double penalty = 0.0;

    double operator()(double lambda) const {
        return -0.5 * sum_r_logdet - 0.5 * n_eff * d * kLogTwo - 0.5 * n_eff * mvdigamma(d, 0.5 * lambda) +
               0.5 * n_eff * (d * std::log(n_eff * lambda + shift) - logdet_p) - penalty;
    }
    double derivative(double lambda) const {
        return -0.25 * n_eff * mvtrigamma(d, 0.5 * lambda) + 0.5 * n_eff * d * n_eff / (n_eff * lambda + shift);
    }
    /// Residual on the per-observation scale (h * 2 / N).
    double residual(double lambda) const { return 2.0 * (*this)(lambda) / n_eff; }
};

inline constexpr double kLambdaUpper = 1e6;

/// Solve LambdaEquation on (d + 1 + 1e-6, 1e6): bisection, then Newton polish.
/// If h <= 0 already at the lower bound, `strict` raises ConstraintError and
/// otherwise the lower bound is returned. No root below 1e6 returns 1e6.
inline double solve_lambda(const LambdaEquation& eq, bool strict) {
    double lo = eq.d + 1.0 + 1e-6;
    double hi = kLambdaUpper;
    if (!(eq(lo) > 0.0)) {
        if (strict) throw ConstraintError("no solution for the inverse-Wishart degrees of freedom above d + 1");
        return lo;
    }
    if (eq(hi) > 0.0) return hi;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (eq(mid) > 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 20 && std::abs(eq.residual(x)) >= 1e-12; ++i) {
        const double next = x - eq(x) / eq.derivative(x);
        if (!(next > lo - 1e-9 * lo) || !(next < hi + 1e-9 * hi)) break;
        x = next;
    }
    return x;
}

struct NiWParams {
    Vec mu0;
    double kappa0 = 1.0;
    SpdMatrix lambda_scale;
    double lambda_dof = 0.0;
    double lambda_residual = 0.0;  ///< residual of the degrees-of-freedom equation
};

/// Maximum-likelihood Normal inverse-Wishart fit to (mu_i, Sigma_i) draws.
inline NiWParams mle_niw(const std::vector<Vec>& mu, const std::vector<SpdMatrix>& sigma) {
    const std::size_t n = mu.size();
    if (n < 2 || sigma.size() != n) throw ArgumentError("mle_niw: need n >= 2 matching draws");
    const Eigen::Index d = mu.front().size();
    Mat prec_sum = Mat::Zero(d, d);
    Vec prec_mu = Vec::Zero(d);
    double sum_logdet = 0.0;
    std::vector<Mat> prec(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (mu[i].size() != d || sigma[i].dim() != d) throw ArgumentError("mle_niw: inconsistent dimensions");
        prec[i] = sigma[i].inverse();
        prec_sum += prec[i];
        prec_mu += prec[i] * mu[i];
        sum_logdet += sigma[i].logdet();
    }
    const SpdMatrix s(prec_sum);
    NiWParams out;
    out.mu0 = s.solve(prec_mu);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec r = mu[i] - out.mu0;
        quad += r.dot(prec[i] * r);
    }
    const double nd = static_cast<double>(n) * static_cast<double>(d);
    out.kappa0 = quad > 0.0 ? nd / quad : std::numeric_limits<double>::infinity();

    LambdaEquation eq{static_cast<int>(d), static_cast<double>(n), sum_logdet, s.logdet(), 0.0, 0.0};
    out.lambda_dof = solve_lambda(eq, true);
    out.lambda_residual = out.lambda_dof < kLambdaUpper ? eq.residual(out.lambda_dof) : 0.0;
    out.lambda_scale = SpdMatrix(static_cast<double>(n) * out.lambda_dof * s.inverse());
    return out;
}

/// Maximum-likelihood structured Normal inverse-Wishart fit.
/// The returned b_cov is the 2 x 2 covariance factor, i.e. the inverse of the
/// precision-form estimate n d (sum_i R_i' Sigma_i^{-1} R_i)^{-1}.
inline SNiWParams mle_sniw(const std::vector<SNiWDraw>& draws, double* lambda_residual = nullptr) {
    const std::size_t n = draws.size();
    if (n < 2) throw ArgumentError("mle_sniw: need at least two draws");
    const auto prep = detail::prepare(draws);
    const Eigen::Index d = prep.front().loc.rows();
    Mat prec_sum = Mat::Zero(d, d);
    Mat prec_loc = Mat::Zero(d, 2);
    double sum_logdet = 0.0;
    for (const auto& p : prep) {
        prec_sum += p.prec;
        prec_loc += p.prec_loc;
        sum_logdet += p.logdet;
    }
    const SpdMatrix s(prec_sum);
    const double nd = static_cast<double>(n) * static_cast<double>(d);

    // The location estimate does not depend on B, so the alternation settles
    // after one pass; it is kept as a loop to confirm the fixed point.
    Mat m0 = s.solve(prec_loc);
    Mat quad = Mat::Zero(2, 2);
    for (int it = 0; it < 100; ++it) {
        quad.setZero();
        for (const auto& p : prep) {
            const Mat r = p.loc - m0;
            quad.noalias() += r.transpose() * p.prec * r;
        }
        const Mat next = s.solve(prec_loc);
        const double change = (next - m0).norm() / std::max(1.0, m0.norm());
        m0 = next;
        if (change < 1e-10) break;
    }
    SpdMatrix b_cov;
    try {
        b_cov = SpdMatrix(quad / nd);
    } catch (const NumericalError&) {
        throw DegenerateSampleError("mle_sniw: location draws carry no spread");
    }
    LambdaEquation eq{static_cast<int>(d), static_cast<double>(n), sum_logdet, s.logdet(), 0.0, 0.0};
    const double lambda = solve_lambda(eq, true);
    if (lambda_residual) *lambda_residual = lambda < kLambdaUpper ? eq.residual(lambda) : 0.0;
    return SNiWParams(m0.col(0), m0.col(1), std::move(b_cov), SpdMatrix(static_cast<double>(n) * lambda * s.inverse()),
                      lambda);
}

}  // namespace sdpm
