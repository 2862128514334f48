// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "sdpm/error.hpp"

namespace sdpm {

struct GammaFit {
    double shape = 1.0;
    double rate = 1.0;
    double score = 0.0;  ///< log a - digamma(a) - (log m - mean log x) at the solution
    int iterations = 0;
};

/// Method-of-moments start (m^2 / v, m / v).
inline GammaFit gamma_moment_start(double mean, double var) {
    if (!(var > 0.0)) throw DegenerateSampleError("gamma_moment_start: zero variance");
    return GammaFit{mean * mean / var, mean / var, 0.0, 0};
}

/// Maximum-likelihood Gamma(shape, rate) fit by Newton iteration on
/// log a - digamma(a) = log(mean) - mean(log x).
inline GammaFit fit_gamma_mle(const std::vector<double>& x) {
    if (x.size() < 10) throw ArgumentError("fit_gamma_mle: need at least 10 draws");
    double mean = 0.0, mean_log = 0.0;
    for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("fit_gamma_mle: draws must be positive and finite");
        mean += v;
        mean_log += std::log(v);
    }
    const double n = static_cast<double>(x.size());
    mean /= n;
    mean_log /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0.0)) throw DegenerateSampleError("fit_gamma_mle: draws have zero variance");

    const double target = std::log(mean) - mean_log;
    if (!(target > 0.0)) throw DegenerateSampleError("fit_gamma_mle: draws have zero log-spread");
    GammaFit fit = gamma_moment_start(mean, var);
    double a = fit.shape;
    double f = std::log(a) - boost::math::digamma(a) - target;
    int it = 0;
    for (; it < 200 && std::abs(f) >= 1e-10; ++it) {
        const double df = 1.0 / a - boost::math::trigamma(a);
        double next = a - f / df;
        if (!(next > 0.0)) next = 0.5 * a;
        a = next;
        f = std::log(a) - boost::math::digamma(a) - target;
    }
    if (!(std::abs(f) < 1e-10)) throw NumericalError("fit_gamma_mle: Newton iteration did not converge");
    fit.shape = a;
    fit.rate = a / mean;
    fit.score = f;
    fit.iterations = it;
    return fit;
}

}  // namespace sdpm
