// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>

#include "sdpm/stats/samplers.hpp"
#include "sdpm/stats/skew.hpp"

namespace sdpm {

/// Structured Normal inverse-Wishart hyperparameters:
///   Sigma ~ InvWishart(lambda_dof, lambda_scale)
///   vec(xi, psi) | Sigma ~ N_2d(vec(b_xi, b_psi), b_cov (x) Sigma)
/// b_cov is the 2x2 covariance factor of the (xi, psi) block.
struct SNiWParams {
    Vec b_xi;
    Vec b_psi;
    SpdMatrix b_cov;
    SpdMatrix lambda_scale;
    double lambda_dof = 0.0;

    SNiWParams() = default;
    SNiWParams(Vec b_xi_, Vec b_psi_, SpdMatrix b_cov_, SpdMatrix lambda_scale_, double lambda_dof_)
        : b_xi(std::move(b_xi_)),
          b_psi(std::move(b_psi_)),
          b_cov(std::move(b_cov_)),
          lambda_scale(std::move(lambda_scale_)),
          lambda_dof(lambda_dof_) {
        const auto d = b_xi.size();
        if (d == 0 || b_psi.size() != d || lambda_scale.dim() != d) {
            throw ArgumentError("SNiWParams: inconsistent dimensions");
        }
        if (b_cov.dim() != 2) throw ArgumentError("SNiWParams: b_cov must be 2x2");
        if (!(lambda_dof > static_cast<double>(d) + 1.0)) {
            throw ArgumentError("SNiWParams: lambda_dof must exceed d + 1");
        }
    }

    Eigen::Index dim() const noexcept { return b_xi.size(); }

    /// d x 2 location matrix [b_xi  b_psi].
    Mat location() const {
        Mat m(dim(), 2);
        m.col(0) = b_xi;
        m.col(1) = b_psi;
        return m;
    }
};

/// Draw (xi, psi, Sigma) from a structured Normal inverse-Wishart.
inline SkewNormalParams rsniw(const SNiWParams& h, RngStream& rng) {
    SpdMatrix sigma = rinvwishart(h.lambda_dof, h.lambda_scale, rng);
    const Eigen::Index d = h.dim();
    Mat z(d, 2);
    for (Eigen::Index j = 0; j < 2; ++j)
        for (Eigen::Index i = 0; i < d; ++i) z(i, j) = rng.normal();
    // vec(L_S Z L_B') ~ N(0, (L_B L_B') (x) (L_S L_S'))
    const Mat m = h.location() + sigma.lower() * z * h.b_cov.lower().transpose();
    return SkewNormalParams(m.col(0), m.col(1), std::move(sigma));
}

/// log density of (xi, psi, Sigma) under the structured Normal inverse-Wishart.
inline double sniw_logpdf(const Vec& xi, const Vec& psi, const SpdMatrix& sigma, const SNiWParams& h) {
    const Eigen::Index d = h.dim();
    if (xi.size() != d || psi.size() != d || sigma.dim() != d) {
        throw ArgumentError("sniw_logpdf: dimension mismatch");
    }
    Mat r(d, 2);
    r.col(0) = xi - h.b_xi;
    r.col(1) = psi - h.b_psi;
    // vec(R)' (B (x) S)^{-1} vec(R) = tr(B^{-1} R' S^{-1} R)
    const Mat quad = r.transpose() * sigma.solve(r);
    const double mahal = h.b_cov.solve(quad).trace();
    const double dd = static_cast<double>(d);
    const double normal_part = -2.0 * dd * kLogSqrtTwoPi - 0.5 * (dd * h.b_cov.logdet() + 2.0 * sigma.logdet()) -
                               0.5 * mahal;
    return normal_part + invwishart_logpdf(sigma, h.lambda_dof, h.lambda_scale);
}

}  // namespace sdpm
