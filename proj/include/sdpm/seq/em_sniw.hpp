// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sdpm/seq/niw_mle.hpp"
#include "sdpm/stats/kmeans.hpp"
#include "sdpm/stats/rng.hpp"

namespace sdpm {

enum class EmMode { mle, map };

/// Prior of the maximum a posteriori EM. Per component:
///   weights ~ Dirichlet(dirichlet_alpha)
///   (M_k, P_k) ~ Normal-Wishart(m, kappa0, C = c_scale I_2, 4), P_k = b_cov^{-1}
///   Lambda_k ~ Wishart(L, d + 2)
///   lambda_k - (d + 1) ~ Exp(lambda_rate)
/// with m the average draw location and L = (S_xi + S_psi) / 2 built from the
/// diagonal draw variances.
struct MapPriorConfig {
    double dirichlet_alpha = 2.0;
    double kappa0 = 0.01;
    double c_scale = 100.0;
    double lambda_rate = 1.0;
    std::uint64_t seed = 1;
    int restarts = 5;
    int max_iter = 500;
    double tol = 1e-8;

    void validate() const {
        if (!(dirichlet_alpha >= 1.0)) throw ConfigError("MapPriorConfig: dirichlet_alpha must be >= 1");
        if (!(kappa0 > 0.0) || !(c_scale > 0.0) || !(lambda_rate > 0.0)) {
            throw ConfigError("MapPriorConfig: kappa0, c_scale and lambda_rate must be positive");
        }
        if (restarts < 1 || max_iter < 1 || !(tol > 0.0)) throw ConfigError("MapPriorConfig: invalid EM controls");
    }
};

struct SNiWMixtureFit {
    std::vector<double> weights;
    std::vector<SNiWParams> components;
    std::vector<double> objective_trace;
    bool converged = false;
    double objective() const { return objective_trace.empty() ? -std::numeric_limits<double>::infinity() : objective_trace.back(); }
};

namespace detail {

/// Empirical-Bayes quantities of the MAP prior.
struct MapPriorData {
    Mat m;              ///< d x 2 mean location
    Mat s_prec;         ///< sum_i Sigma_i^{-1}
    Mat l_inv;          ///< L^{-1}
    Mat c_inv;          ///< C^{-1}
    double kappa_n = 0; ///< kappa0 / n
};

inline MapPriorData map_prior_data(const std::vector<SNiWDraw>& draws, const std::vector<PreparedDraw>& prep,
                                   const MapPriorConfig& cfg) {
    const Eigen::Index d = prep.front().loc.rows();
    const double n = static_cast<double>(prep.size());
    MapPriorData out;
    out.m = Mat::Zero(d, 2);
    out.s_prec = Mat::Zero(d, d);
    for (const auto& p : prep) {
        out.m += p.loc;
        out.s_prec += p.prec;
    }
    out.m /= n;
    Vec var_xi = Vec::Zero(d), var_psi = Vec::Zero(d);
    for (const auto& x : draws) {
        var_xi.array() += (x.xi - out.m.col(0)).array().square();
        var_psi.array() += (x.psi - out.m.col(1)).array().square();
    }
    const Vec l_diag = (var_xi + var_psi) / (2.0 * (n - 1.0));
    if ((l_diag.array() <= 0.0).any()) throw DegenerateSampleError("em_sniw: draw locations have zero variance");
    out.l_inv = l_diag.cwiseInverse().asDiagonal();
    out.c_inv = Mat::Identity(2, 2) / cfg.c_scale;
    out.kappa_n = cfg.kappa0 / n;
    return out;
}

inline double log_prior(const SNiWParams& h, double weight, const MapPriorData& pd, const MapPriorConfig& cfg) {
    const Eigen::Index d = h.dim();
    const Mat prec_b = h.b_cov.inverse();
    const Mat rm = h.location() - pd.m;
    const double logdet_prec_b = -h.b_cov.logdet();
    double v = (cfg.dirichlet_alpha - 1.0) * std::log(weight);
    v += 0.5 * static_cast<double>(d) * logdet_prec_b - 0.5 * pd.kappa_n * (prec_b * rm.transpose() * pd.s_prec * rm).trace();
    v += 0.5 * logdet_prec_b - 0.5 * (pd.c_inv * prec_b).trace();
    v += 0.5 * h.lambda_scale.logdet() - 0.5 * (pd.l_inv * h.lambda_scale.matrix()).trace();
    v += -cfg.lambda_rate * (h.lambda_dof - static_cast<double>(d) - 1.0);
    return v;
}

/// Weighted M-step for one component.
inline SNiWParams m_step_component(const std::vector<PreparedDraw>& prep, const std::vector<double>& r, EmMode mode,
                                   const MapPriorData* pd, double lambda_rate = 1.0) {
    const Eigen::Index d = prep.front().loc.rows();
    double n_k = 0.0, sum_r_logdet = 0.0;
    Mat prec_sum = Mat::Zero(d, d);
    Mat prec_loc = Mat::Zero(d, 2);
    for (std::size_t i = 0; i < prep.size(); ++i) {
        if (r[i] == 0.0) continue;
        n_k += r[i];
        sum_r_logdet += r[i] * prep[i].logdet;
        prec_sum += r[i] * prep[i].prec;
        prec_loc += r[i] * prep[i].prec_loc;
    }
    const double dd = static_cast<double>(d);

    Mat loc;
    if (mode == EmMode::map) {
        loc = SpdMatrix(prec_sum + pd->kappa_n * pd->s_prec).solve(Mat(prec_loc + pd->kappa_n * pd->s_prec * pd->m));
    } else {
        loc = SpdMatrix(prec_sum).solve(prec_loc);
    }
    Mat quad = Mat::Zero(2, 2);
    for (std::size_t i = 0; i < prep.size(); ++i) {
        if (r[i] == 0.0) continue;
        const Mat res = prep[i].loc - loc;
        quad.noalias() += r[i] * (res.transpose() * prep[i].prec * res);
    }
    SpdMatrix b_cov;
    SpdMatrix lambda_scale;
    double lambda = 0.0;
    if (mode == EmMode::map) {
        const Mat rm = loc - pd->m;
        const Mat b_scale = pd->c_inv + quad + pd->kappa_n * (rm.transpose() * pd->s_prec * rm);
        b_cov = SpdMatrix(b_scale / (n_k * dd + dd + 1.0));
        const SpdMatrix p(pd->l_inv + prec_sum);
        LambdaEquation eq{static_cast<int>(d), n_k, sum_r_logdet, p.logdet(), 1.0, lambda_rate};
        lambda = solve_lambda(eq, false);
        lambda_scale = SpdMatrix((n_k * lambda + 1.0) * p.inverse());
    } else {
        try {
            b_cov = SpdMatrix(quad / (n_k * dd));
        } catch (const NumericalError&) {
            throw ComponentCollapseError("em_sniw: component locations collapsed to a point");
        }
        const SpdMatrix p(prec_sum);
        LambdaEquation eq{static_cast<int>(d), n_k, sum_r_logdet, p.logdet(), 0.0, 0.0};
        lambda = solve_lambda(eq, true);
        lambda_scale = SpdMatrix(n_k * lambda * p.inverse());
    }
    return SNiWParams(loc.col(0), loc.col(1), std::move(b_cov), std::move(lambda_scale), lambda);
}

/// E-step. Fills responsibilities (n x K, row-major) and returns the
/// incomplete-data log likelihood.
inline double e_step(const std::vector<SNiWDraw>& draws, const std::vector<double>& weights,
                     const std::vector<SNiWParams>& comps, std::vector<std::vector<double>>& resp) {
    const std::size_t n = draws.size(), k = comps.size();
    resp.assign(k, std::vector<double>(n, 0.0));
    double ll = 0.0;
    std::vector<double> lw(k);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            lw[j] = std::log(weights[j]) + sniw_logpdf(draws[i].xi, draws[i].psi, draws[i].sigma, comps[j]);
            best = std::max(best, lw[j]);
        }
        if (!std::isfinite(best)) throw NumericalError("em_sniw: draw has zero density under every component");
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) total += std::exp(lw[j] - best);
        for (std::size_t j = 0; j < k; ++j) resp[j][i] = std::exp(lw[j] - best) / total;
        ll += best + std::log(total);
    }
    return ll;
}

inline SNiWMixtureFit em_from_responsibilities(const std::vector<SNiWDraw>& draws,
                                               const std::vector<PreparedDraw>& prep,
                                               std::vector<std::vector<double>> resp, EmMode mode,
                                               const MapPriorConfig& cfg, const MapPriorData* pd) {
    const std::size_t n = draws.size(), k = resp.size();
    SNiWMixtureFit fit;
    fit.weights.resize(k);
    fit.components.resize(k);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iter; ++it) {
        // M-step
        for (std::size_t j = 0; j < k; ++j) {
            double n_k = 0.0;
            for (double v : resp[j]) n_k += v;
            if (mode == EmMode::mle && n_k < 1e-8) throw ComponentCollapseError("em_sniw: empty component");
            if (mode == EmMode::map) {
                fit.weights[j] = (n_k + cfg.dirichlet_alpha - 1.0) /
                                 (static_cast<double>(n) + static_cast<double>(k) * (cfg.dirichlet_alpha - 1.0));
            } else {
                fit.weights[j] = n_k / static_cast<double>(n);
            }
            fit.components[j] = m_step_component(prep, resp[j], mode, pd, cfg.lambda_rate);
        }
        // E-step and objective
        double obj = e_step(draws, fit.weights, fit.components, resp);
        if (mode == EmMode::map)
            for (std::size_t j = 0; j < k; ++j) obj += log_prior(fit.components[j], fit.weights[j], *pd, cfg);
        if (!std::isfinite(obj)) throw NumericalError("em_sniw: non-finite objective");
        if (obj < prev - 1e-9 * (1.0 + std::abs(prev))) {
            throw NumericalError("em_sniw: objective decreased between iterations");
        }
        fit.objective_trace.push_back(obj);
        if (std::abs(obj - prev) < cfg.tol * std::max(1.0, std::abs(obj))) {
            fit.converged = true;
            break;
        }
        prev = obj;
    }
    return fit;
}

}  // namespace detail

/// Fit a K-component mixture of sNiW distributions to parameter draws by EM.
/// Each restart starts from a k-means partition of the stacked locations; the
/// run with the highest final objective is returned.
inline SNiWMixtureFit em_sniw(const std::vector<SNiWDraw>& draws, std::size_t k, EmMode mode,
                              const MapPriorConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = draws.size();
    if (k < 1 || n < k) throw ArgumentError("em_sniw: need n >= K >= 1");
    if (n < 2) throw ArgumentError("em_sniw: need at least two draws");
    const auto prep = detail::prepare(draws);
    std::optional<detail::MapPriorData> pd;
    if (mode == EmMode::map) pd = detail::map_prior_data(draws, prep, cfg);

    if (k == 1) {
        return detail::em_from_responsibilities(draws, prep, {std::vector<double>(n, 1.0)}, mode, cfg,
                                                pd ? &*pd : nullptr);
    }

    const Eigen::Index d = prep.front().loc.rows();
    Mat points(2 * d, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        points.col(static_cast<Eigen::Index>(i)).head(d) = draws[i].xi;
        points.col(static_cast<Eigen::Index>(i)).tail(d) = draws[i].psi;
    }
    std::optional<SNiWMixtureFit> best;
    std::optional<NumericalError> last_error;
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(restart), 0);
        const KMeansResult km = kmeans(points, k, rng, 100);
        std::vector<std::vector<double>> resp(k, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) resp[static_cast<std::size_t>(km.labels[i])][i] = 1.0;
        try {
            SNiWMixtureFit fit = detail::em_from_responsibilities(draws, prep, std::move(resp), mode, cfg,
                                                                  pd ? &*pd : nullptr);
            if (!best || fit.objective() > best->objective()) best = std::move(fit);
        } catch (const NumericalError& e) {
            last_error = e;
        }
    }
    if (!best) {
        if (mode == EmMode::mle) throw ComponentCollapseError(last_error ? last_error->what() : "em_sniw: all restarts failed");
        throw NumericalError(last_error ? last_error->what() : "em_sniw: all restarts failed");
    }
    return *best;
}

}  // namespace sdpm
