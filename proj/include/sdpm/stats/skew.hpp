// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>

#include "sdpm/stats/special.hpp"
#include "sdpm/stats/spd_matrix.hpp"

namespace sdpm {

/// Random-effects parametrization: Y = xi + psi Z + eps, Z ~ N+(0,1),
/// eps ~ N(0, sigma).
struct SkewNormalParams {
    Vec xi;
    Vec psi;
    SpdMatrix sigma;

    SkewNormalParams() = default;
    SkewNormalParams(Vec xi_, Vec psi_, SpdMatrix sigma_)
        : xi(std::move(xi_)), psi(std::move(psi_)), sigma(std::move(sigma_)) {
        if (xi.size() != psi.size() || xi.size() != sigma.dim() || xi.size() == 0) {
            throw ArgumentError("SkewNormalParams: inconsistent dimensions");
        }
    }
    Eigen::Index dim() const noexcept { return xi.size(); }
};

/// Canonical (xi, Omega, eta) parametrization with density
/// 2 phi(y - xi; Omega) Phi(eta' omega^{-1} (y - xi)), omega = sqrt(diag Omega).
class SkewNormalCanonical {
public:
    SkewNormalCanonical() = default;
    SkewNormalCanonical(Vec xi, SpdMatrix omega_mat, Vec eta)
        : xi_(std::move(xi)), omega_mat_(std::move(omega_mat)), eta_(std::move(eta)) {
        if (xi_.size() != eta_.size() || xi_.size() != omega_mat_.dim()) {
            throw ArgumentError("SkewNormalCanonical: inconsistent dimensions");
        }
        omega_ = omega_mat_.matrix().diagonal().cwiseSqrt();
        if ((omega_.array() <= 0.0).any()) throw NumericalError("SkewNormalCanonical: omega must be positive");
        slant_ = eta_.cwiseQuotient(omega_);
    }

    const Vec& xi() const noexcept { return xi_; }
    const SpdMatrix& omega_mat() const noexcept { return omega_mat_; }
    const Vec& eta() const noexcept { return eta_; }
    /// sqrt(diag(Omega))
    const Vec& omega() const noexcept { return omega_; }
    /// omega^{-1} eta, so that the skewing argument is slant()'(y - xi).
    const Vec& slant() const noexcept { return slant_; }
    Eigen::Index dim() const noexcept { return xi_.size(); }

private:
    Vec xi_;
    SpdMatrix omega_mat_;
    Vec eta_;
    Vec omega_;
    Vec slant_;
};

struct SkewTParams {
    SkewNormalParams base;
    double nu = std::numeric_limits<double>::infinity();

    SkewTParams() = default;
    SkewTParams(SkewNormalParams b, double nu_) : base(std::move(b)), nu(nu_) {
        if (!(nu > 1.0)) throw ArgumentError("SkewTParams: nu must exceed 1");
    }
};

inline SkewNormalCanonical convert_re_to_canonical(const SkewNormalParams& p) {
    SpdMatrix omega_mat(p.sigma.matrix() + p.psi * p.psi.transpose());
    const Vec omega_inv_psi = omega_mat.solve(p.psi);
    const double rest = 1.0 - p.psi.dot(omega_inv_psi);
    if (!(rest > 0.0)) throw NumericalError("convert_re_to_canonical: 1 - psi' Omega^-1 psi <= 0");
    const Vec omega = omega_mat.matrix().diagonal().cwiseSqrt();
    Vec eta = omega.cwiseProduct(omega_inv_psi) / std::sqrt(rest);
    return SkewNormalCanonical(p.xi, std::move(omega_mat), std::move(eta));
}

/// Inverse of convert_re_to_canonical: delta = Omega_bar eta / sqrt(1 + eta' Omega_bar eta),
/// psi = omega delta, sigma = Omega - psi psi'.
inline SkewNormalParams convert_canonical_to_re(const SkewNormalCanonical& p) {
    const Mat& om = p.omega_mat().matrix();
    const Vec scaled = p.slant();  // omega^{-1} eta
    const double q = scaled.dot(om * scaled);
    Vec psi = om * scaled / std::sqrt(1.0 + q);
    Mat sigma = om - psi * psi.transpose();
    try {
        return SkewNormalParams(p.xi(), std::move(psi), SpdMatrix(sigma));
    } catch (const NumericalError&) {
        throw NumericalError("convert_canonical_to_re: Omega - psi psi' is not SPD");
    }
}

inline void check_dim(const Vec& y, Eigen::Index d, const char* who) {
    if (y.size() != d) throw ArgumentError(std::string(who) + ": dimension mismatch");
}

inline double mvn_logpdf(const Vec& y, const Vec& mean, const SpdMatrix& cov) {
    check_dim(y, cov.dim(), "mvn_logpdf");
    check_dim(mean, cov.dim(), "mvn_logpdf");
    const double d = static_cast<double>(y.size());
    return -d * kLogSqrtTwoPi - 0.5 * cov.logdet() - 0.5 * cov.mahalanobis(y - mean);
}

/// Multivariate Student t log density with location xi, scale omega_mat and
/// nu degrees of freedom. nu = +inf gives the normal density.
inline double mvt_logpdf(const Vec& y, const Vec& xi, const SpdMatrix& omega_mat, double nu) {
    check_dim(y, omega_mat.dim(), "mvt_logpdf");
    check_dim(xi, omega_mat.dim(), "mvt_logpdf");
    if (!(nu > 0.0)) throw ArgumentError("mvt_logpdf: nu must be positive");
    if (std::isinf(nu)) return mvn_logpdf(y, xi, omega_mat);
    const double d = static_cast<double>(y.size());
    const double q = omega_mat.mahalanobis(y - xi);
    return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * (std::log(nu) + kLogPi) -
           0.5 * omega_mat.logdet() - 0.5 * (nu + d) * std::log1p(q / nu);
}

inline double sn_logpdf(const Vec& y, const SkewNormalCanonical& p) {
    check_dim(y, p.dim(), "sn_logpdf");
    const Vec r = y - p.xi();
    const double d = static_cast<double>(y.size());
    const double lphi = -d * kLogSqrtTwoPi - 0.5 * p.omega_mat().logdet() - 0.5 * p.omega_mat().mahalanobis(r);
    return kLogTwo + lphi + log_normal_cdf(p.slant().dot(r));
}

/// Skew-t log density in the canonical parametrization.
inline double st_logpdf(const Vec& y, const SkewNormalCanonical& p, double nu) {
    check_dim(y, p.dim(), "st_logpdf");
    if (!(nu > 0.0)) throw ArgumentError("st_logpdf: nu must be positive");
    if (std::isinf(nu)) return sn_logpdf(y, p);
    const Vec r = y - p.xi();
    const double d = static_cast<double>(y.size());
    const double q = p.omega_mat().mahalanobis(r);
    const double lt = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * (std::log(nu) + kLogPi) -
                      0.5 * p.omega_mat().logdet() - 0.5 * (nu + d) * std::log1p(q / nu);
    const double arg = p.slant().dot(r) * std::sqrt((nu + d) / (nu + q));
    return kLogTwo + lt + log_student_cdf(arg, nu + d);
}

inline double st_logpdf(const Vec& y, const SkewTParams& p) {
    return st_logpdf(y, convert_re_to_canonical(p.base), p.nu);
}

}  // namespace sdpm
