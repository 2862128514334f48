// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdpm/stats/rng.hpp"
#include "sdpm/stats/special.hpp"
#include "sdpm/stats/spd_matrix.hpp"

namespace sdpm {

/// Draw from N(mean, var) restricted to [0, +inf). Inverse-cdf on the upper
/// tail while mean/sd >= -4, exponential-proposal rejection (Robert 1995)
/// deeper in the tail.
inline double rtruncnorm_pos(double mean, double var, RngStream& rng) {
    if (!(var > 0.0) || !std::isfinite(var)) throw ArgumentError("rtruncnorm_pos: variance must be positive");
    const double sd = std::sqrt(var);
    const double lower = -mean / sd;  // standardized truncation point
    double z;
    if (lower <= 4.0) {
        // P(Z > z) = u * P(Z > lower)
        const double upper_mass = normal_cdf(-lower);
        const double p = rng.uniform_open() * upper_mass;
        z = -normal_quantile(p);
        if (z < lower) z = lower;
    } else {
        const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
        for (;;) {
            z = lower + rng.exponential(rate);
            const double diff = z - rate;
            if (rng.uniform() <= std::exp(-0.5 * diff * diff)) break;
        }
    }
    return std::max(0.0, mean + sd * z);
}

inline Vec rnorm_vec(Eigen::Index n, RngStream& rng) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

inline Vec rmvnorm(const Vec& mean, const SpdMatrix& cov, RngStream& rng) {
    return mean + cov.lower() * rnorm_vec(mean.size(), rng);
}

/// Wishart(dof, scale) via the Bartlett decomposition.
inline Mat rwishart_matrix(double dof, const SpdMatrix& scale, RngStream& rng) {
    const Eigen::Index d = scale.dim();
    if (!(dof > static_cast<double>(d) - 1.0)) throw ArgumentError("rwishart: dof must exceed d - 1");
    Mat a = Mat::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    const Mat la = scale.lower() * a;
    return la * la.transpose();
}

/// Inverse-Wishart(dof, scale): the inverse of a Wishart(dof, scale^{-1})
/// draw, with mean scale / (dof - d - 1).
inline SpdMatrix rinvwishart(double dof, const SpdMatrix& scale, RngStream& rng) {
    const Eigen::Index d = scale.dim();
    if (!(dof > static_cast<double>(d) - 1.0)) throw ArgumentError("rinvwishart: dof must exceed d - 1");
    // With scale = U U' and A the Bartlett factor, Sigma = U (A A')^{-1} U'.
    Mat a = Mat::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    const Mat t = a.triangularView<Eigen::Lower>().solve(scale.lower().transpose());
    return SpdMatrix(t.transpose() * t);
}

inline double invwishart_logpdf(const SpdMatrix& sigma, double dof, const SpdMatrix& scale) {
    const int d = static_cast<int>(scale.dim());
    if (sigma.dim() != scale.dim()) throw ArgumentError("invwishart_logpdf: dimension mismatch");
    const double tr = sigma.solve(scale.matrix()).trace();
    return 0.5 * dof * scale.logdet() - 0.5 * dof * d * kLogTwo - log_mvgamma(d, 0.5 * dof) -
           0.5 * (dof + d + 1.0) * sigma.logdet() - 0.5 * tr;
}

/// Dirichlet(shapes) as normalized gammas. Shapes must be positive.
inline std::vector<double> rdirichlet(const std::vector<double>& shapes, RngStream& rng) {
    std::vector<double> g(shapes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        g[i] = rng.gamma(shapes[i], 1.0);
        total += g[i];
    }
    if (!(total > 0.0)) {
        // every gamma underflowed: put all mass on the largest shape
        std::size_t best = 0;
        for (std::size_t i = 1; i < shapes.size(); ++i)
            if (shapes[i] > shapes[best]) best = i;
        std::fill(g.begin(), g.end(), 0.0);
        g[best] = 1.0;
        return g;
    }
    for (auto& v : g) v /= total;
    return g;
}

}  // namespace sdpm
