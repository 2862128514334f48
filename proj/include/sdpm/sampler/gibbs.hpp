// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sdpm/model/model.hpp"
#include "sdpm/sampler/parallel.hpp"
#include "sdpm/sampler/state.hpp"
#include "sdpm/stats/kmeans.hpp"
#include "sdpm/stats/samplers.hpp"
#include "sdpm/stats/skew.hpp"
#include "sdpm/stats/sniw.hpp"

namespace sdpm {

/// Random substreams of one sweep. Every per-observation or per-cluster unit
/// of work draws from its own stream keyed by (seed, iteration, phase, index).
enum class StreamPhase : std::uint64_t { main = 0, slice = 1, alloc = 2, skew = 3, cluster = 4, nu = 5, scale = 6, init = 7 };

struct SweepContext {
    std::uint64_t seed = 1;
    std::uint64_t iteration = 1;
    SamplerMode mode = SamplerMode::skew_t;
    AllocationKernel kernel = AllocationKernel::marginal;
    double jitter = 0.0;
    Executor exec{};

    RngStream stream(StreamPhase phase, std::uint64_t index) const {
        return RngStream(seed, iteration, (static_cast<std::uint64_t>(phase) << 56) | index);
    }
};

inline constexpr std::size_t kMaxAtoms = 1'000'000;

// ---------------------------------------------------------------------------
// Densities

/// Atom density with everything that does not depend on y precomputed.
class AtomDensity {
public:
    AtomDensity(const ClusterParams& p, SamplerMode mode)
        : canon_(convert_re_to_canonical(p.skew_normal())),
          nu_(mode == SamplerMode::skew_t ? p.nu : std::numeric_limits<double>::infinity()) {
        const double d = static_cast<double>(canon_.dim());
        const double logdet = canon_.omega_mat().logdet();
        sn_const_ = kLogTwo - d * kLogSqrtTwoPi - 0.5 * logdet;
        if (std::isfinite(nu_)) {
            st_const_ = kLogTwo + std::lgamma(0.5 * (nu_ + d)) - std::lgamma(0.5 * nu_) -
                        0.5 * d * (std::log(nu_) + kLogPi) - 0.5 * logdet;
            half_nu_log_half_nu_ = 0.5 * nu_ * std::log(0.5 * nu_) - std::lgamma(0.5 * nu_);
        }
    }

    /// Skew-normal density in skew-normal mode, skew-t density otherwise.
    double marginal(const Vec& y) const {
        const Vec r = y - canon_.xi();
        const double q = canon_.omega_mat().mahalanobis(r);
        const double t = canon_.slant().dot(r);
        if (!std::isfinite(nu_)) return sn_const_ - 0.5 * q + log_normal_cdf(t);
        const double d = static_cast<double>(r.size());
        return st_const_ - 0.5 * (nu_ + d) * std::log1p(q / nu_) +
               log_student_cdf(t * std::sqrt((nu_ + d) / (nu_ + q)), nu_ + d);
    }

    /// log[ Gamma(gamma; nu/2, nu/2) * SN(y; xi, Omega / gamma, eta) ].
    double scale_conditional(const Vec& y, double gamma) const {
        const Vec r = y - canon_.xi();
        const double q = canon_.omega_mat().mahalanobis(r);
        const double t = canon_.slant().dot(r);
        const double d = static_cast<double>(r.size());
        const double lg = std::log(gamma);
        double v = sn_const_ + 0.5 * d * lg - 0.5 * gamma * q + log_normal_cdf(std::sqrt(gamma) * t);
        if (std::isfinite(nu_)) v += half_nu_log_half_nu_ + (0.5 * nu_ - 1.0) * lg - 0.5 * nu_ * gamma;
        return v;
    }

    const SkewNormalCanonical& canonical() const noexcept { return canon_; }

private:
    SkewNormalCanonical canon_;
    double nu_;
    double sn_const_ = 0.0;
    double st_const_ = 0.0;
    double half_nu_log_half_nu_ = 0.0;
};

/// Density of one observation under an atom with the latent skew (and, in
/// skew-t mode, the latent scale) integrated out.
inline double cluster_marginal_logdensity(const Vec& y, const ClusterParams& cp, SamplerMode mode) {
    check_dim(y, cp.dim(), "cluster_marginal_logdensity");
    return AtomDensity(cp, mode).marginal(y);
}

// ---------------------------------------------------------------------------
// Step 1: concentration parameter

/// Two-component Gamma mixture of the augmented alpha update.
struct AlphaMixture {
    double odds;      ///< pi_x / (1 - pi_x)
    double weight;    ///< pi_x
    double shape_hi;  ///< a + K
    double shape_lo;  ///< a + K - 1
    double rate;      ///< b - log x
};

inline AlphaMixture alpha_mixture(const ConcentrationPrior& prior, std::size_t k, std::size_t n_obs, double x) {
    if (k < 1) throw ArgumentError("alpha_mixture: need at least one cluster");
    AlphaMixture m{};
    m.rate = prior.b - std::log(x);
    m.shape_hi = prior.a + static_cast<double>(k);
    m.shape_lo = prior.a + static_cast<double>(k) - 1.0;
    m.odds = m.shape_lo / (static_cast<double>(n_obs) * m.rate);
    m.weight = m.odds / (1.0 + m.odds);
    return m;
}

inline double update_alpha(ChainState& state, const ConcentrationPrior& prior, RngStream& rng) {
    const std::size_t k = state.num_clusters();
    const std::size_t n = state.num_obs();
    const double x = rng.beta(state.alpha + 1.0, static_cast<double>(n));
    const AlphaMixture m = alpha_mixture(prior, k, n, std::max(x, std::numeric_limits<double>::min()));
    const bool hi = rng.uniform() < m.weight;
    double a = rng.gamma(hi ? m.shape_hi : m.shape_lo, m.rate);
    if (!(a > 0.0)) a = std::numeric_limits<double>::min();
    state.alpha = a;
    return a;
}

// ---------------------------------------------------------------------------
// Label bookkeeping

/// Remove empty clusters and relabel in order of first appearance. Weights of
/// removed atoms are folded into the remainder mass.
inline void compact_labels(ChainState& s) {
    const std::size_t k = s.clusters.size();
    std::vector<int> remap(k, -1);
    int next = 0;
    for (int& l : s.alloc) {
        if (remap[l] < 0) remap[l] = next++;
        l = remap[l];
    }
    std::vector<ClusterParams> clusters(static_cast<std::size_t>(next));
    std::vector<double> weights(static_cast<std::size_t>(next), 0.0);
    std::vector<int> base(static_cast<std::size_t>(next), 0);
    const bool have_weights = s.weights.size() == k;
    for (std::size_t j = 0; j < k; ++j) {
        if (remap[j] < 0) {
            if (have_weights) s.weight_rest += s.weights[j];
            continue;
        }
        clusters[remap[j]] = std::move(s.clusters[j]);
        if (have_weights) weights[remap[j]] = s.weights[j];
        if (j < s.base_component_of.size()) base[remap[j]] = s.base_component_of[j];
    }
    s.clusters = std::move(clusters);
    s.weights = std::move(weights);
    s.base_component_of = std::move(base);
}

inline std::vector<std::vector<int>> members_of(const ChainState& s) {
    std::vector<std::vector<int>> m(s.num_clusters());
    for (std::size_t c = 0; c < s.alloc.size(); ++c) m[s.alloc[c]].push_back(static_cast<int>(c));
    return m;
}

/// Draw a new atom from the base measure.
inline ClusterParams draw_atom(const BaseMeasure& base, SamplerMode mode, RngStream& rng, int& component) {
    component = static_cast<int>(base.sample_component(rng));
    SkewNormalParams sn = rsniw(base.sniw(static_cast<std::size_t>(component)), rng);
    const double nu = mode == SamplerMode::skew_t ? base.nu_prior().sample(rng) : std::numeric_limits<double>::infinity();
    return ClusterParams(std::move(sn), nu);
}

// ---------------------------------------------------------------------------
// Step 2: weights, slice variables, stick extension, allocation

/// `data` holds one observation per column (d x C).
inline void update_sticks_and_alloc(ChainState& s, const Mat& data, const BaseMeasure& base, const SweepContext& ctx) {
    const std::size_t n = s.num_obs();
    const std::size_t k = s.num_clusters();
    RngStream rng = ctx.stream(StreamPhase::main, 1);

    // (a) weights of occupied atoms and the remainder
    const auto counts = s.counts();
    std::vector<double> shapes(k + 1);
    for (std::size_t j = 0; j < k; ++j) shapes[j] = static_cast<double>(counts[j]);
    shapes[k] = s.alpha;
    std::vector<double> w = rdirichlet(shapes, rng);
    s.weight_rest = w.back();
    w.pop_back();
    s.weights = std::move(w);

    // (b) slice variables
    std::vector<double> u(n);
    ctx.exec.for_each(n, [&](std::size_t c) {
        RngStream r = ctx.stream(StreamPhase::slice, c);
        u[c] = r.uniform() * s.weights[static_cast<std::size_t>(s.alloc[c])];
    });
    const double min_u = *std::min_element(u.begin(), u.end());

    // (c) extend the stick until the remaining mass falls below every u_c
    while (s.weight_rest > min_u) {
        if (s.clusters.size() >= kMaxAtoms) {
            throw DegenerateSliceError("stick extension exceeded 1e6 atoms (remainder mass underflow)");
        }
        const double frac = rng.beta(1.0, s.alpha);
        const double wj = s.weight_rest * frac;
        s.weight_rest *= (1.0 - frac);
        int comp = 0;
        s.clusters.push_back(draw_atom(base, ctx.mode, rng, comp));
        s.weights.push_back(wj);
        s.base_component_of.push_back(comp);
    }

    // (d) allocation restricted to atoms with w_k > u_c
    std::vector<AtomDensity> atoms;
    atoms.reserve(s.clusters.size());
    for (const auto& cp : s.clusters) atoms.emplace_back(cp, ctx.mode);
    const bool conditional = ctx.mode == SamplerMode::skew_t && ctx.kernel == AllocationKernel::scale_conditional;

    ctx.exec.for_each(n, [&](std::size_t c) {
        thread_local std::vector<int> eligible;
        thread_local std::vector<double> score;
        eligible.clear();
        for (std::size_t j = 0; j < s.weights.size(); ++j)
            if (s.weights[j] > u[c]) eligible.push_back(static_cast<int>(j));
        if (eligible.size() == 1) {
            s.alloc[c] = eligible.front();
            return;
        }
        const Vec y = data.col(static_cast<Eigen::Index>(c));
        score.resize(eligible.size());
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < eligible.size(); ++e) {
            const auto& atom = atoms[static_cast<std::size_t>(eligible[e])];
            score[e] = conditional ? atom.scale_conditional(y, s.scale_latent[c]) : atom.marginal(y);
            best = std::max(best, score[e]);
        }
        RngStream r = ctx.stream(StreamPhase::alloc, c);
        if (!std::isfinite(best)) {
            // every eligible density underflowed: fall back to a uniform pick
            s.alloc[c] = eligible[r.uniform_index(eligible.size())];
            return;
        }
        double total = 0.0;
        for (auto& v : score) {
            v = std::exp(v - best);
            total += v;
        }
        double x = r.uniform() * total;
        std::size_t pick = eligible.size() - 1;
        for (std::size_t e = 0; e < eligible.size(); ++e) {
            x -= score[e];
            if (x < 0.0) {
                pick = e;
                break;
            }
        }
        s.alloc[c] = eligible[pick];
    });

    compact_labels(s);
}

// ---------------------------------------------------------------------------
// Step 3: latent skews

/// Full conditional N+(mean, var) of s_c.
struct SkewConditional {
    double mean;
    double var;
};

inline SkewConditional skew_conditional(const Vec& y, const ClusterParams& cp, double gamma) {
    const Vec sinv_psi = cp.sigma.solve(cp.psi);
    const double q = cp.psi.dot(sinv_psi);
    return {sinv_psi.dot(y - cp.xi) / (1.0 + q), 1.0 / (gamma * (1.0 + q))};
}

inline void update_skew_latent(ChainState& s, const Mat& data, const SweepContext& ctx) {
    const std::size_t k = s.num_clusters();
    std::vector<Vec> sinv_psi(k);
    std::vector<double> q(k);
    for (std::size_t j = 0; j < k; ++j) {
        sinv_psi[j] = s.clusters[j].sigma.solve(s.clusters[j].psi);
        q[j] = s.clusters[j].psi.dot(sinv_psi[j]);
    }
    ctx.exec.for_each(s.num_obs(), [&](std::size_t c) {
        const auto j = static_cast<std::size_t>(s.alloc[c]);
        const double mean = sinv_psi[j].dot(data.col(static_cast<Eigen::Index>(c)) - s.clusters[j].xi) / (1.0 + q[j]);
        const double var = 1.0 / (s.scale_latent[c] * (1.0 + q[j]));
        RngStream r = ctx.stream(StreamPhase::skew, c);
        s.skew_latent[c] = rtruncnorm_pos(mean, var, r);
    });
}

// ---------------------------------------------------------------------------
// Step 4: cluster parameters

/// Conjugate structured Normal inverse-Wishart posterior for one cluster whose
/// members are the columns of `y` with latent skews `skew` and scale weights
/// `scale` (all ones in skew-normal mode):
///   y_c ~ N(xi + psi s_c, Sigma / gamma_c).
inline SNiWParams sniw_posterior(const SNiWParams& prior, const Mat& y, const Vec& skew, const Vec& scale,
                                 double jitter = 0.0) {
    const Eigen::Index d = prior.dim();
    const Eigen::Index n = y.cols();
    if (y.rows() != d || skew.size() != n || scale.size() != n) throw ArgumentError("sniw_posterior: dimension mismatch");
    const Mat prec0 = prior.b_cov.inverse();
    const Mat m0 = prior.location();
    Mat xtx = Mat::Zero(2, 2);
    Mat ytx = Mat::Zero(d, 2);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double g = scale(c), sc = skew(c);
        xtx(0, 0) += g;
        xtx(0, 1) += g * sc;
        xtx(1, 1) += g * sc * sc;
        ytx.col(0) += g * y.col(c);
        ytx.col(1) += (g * sc) * y.col(c);
    }
    xtx(1, 0) = xtx(0, 1);
    SpdMatrix b_cov(SpdMatrix(xtx + prec0).inverse());
    const Mat mk = (ytx + m0 * prec0) * b_cov.matrix();
    Mat lambda = prior.lambda_scale.matrix();
    for (Eigen::Index c = 0; c < n; ++c) {
        const Vec e = y.col(c) - mk.col(0) - skew(c) * mk.col(1);
        lambda.noalias() += scale(c) * e * e.transpose();
    }
    const Mat dm = mk - m0;
    lambda.noalias() += dm * prec0 * dm.transpose();
    if (jitter > 0.0) lambda.diagonal().array() += jitter;
    SpdMatrix lambda_spd;
    try {
        lambda_spd = SpdMatrix(lambda);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("posterior Lambda_k is not SPD: ") + e.what());
    }
    return SNiWParams(mk.col(0), mk.col(1), std::move(b_cov), std::move(lambda_spd),
                      prior.lambda_dof + static_cast<double>(n));
}

inline void update_cluster_params(ChainState& s, const Mat& data, const BaseMeasure& base, const SweepContext& ctx,
                                  bool resample_base_component = true) {
    const auto members = members_of(s);
    const std::size_t k = s.num_clusters();
    if (s.base_component_of.size() != k) s.base_component_of.assign(k, 0);
    ctx.exec.for_each(k, [&](std::size_t j) {
        RngStream r = ctx.stream(StreamPhase::cluster, j);
        ClusterParams& cp = s.clusters[j];
        if (resample_base_component && base.size() > 1) {
            std::vector<double> lw(base.size());
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < base.size(); ++m) {
                lw[m] = std::log(base.components()[m].weight) + sniw_logpdf(cp.xi, cp.psi, cp.sigma, base.sniw(m));
                best = std::max(best, lw[m]);
            }
            double total = 0.0;
            for (auto& v : lw) total += (v = std::exp(v - best));
            double x = r.uniform() * total;
            int pick = static_cast<int>(base.size()) - 1;
            for (std::size_t m = 0; m < base.size(); ++m) {
                x -= lw[m];
                if (x < 0.0) {
                    pick = static_cast<int>(m);
                    break;
                }
            }
            s.base_component_of[j] = pick;
        }
        const auto& idx = members[j];
        const auto nk = static_cast<Eigen::Index>(idx.size());
        Mat y(data.rows(), nk);
        Vec sk(nk), sc(nk);
        for (Eigen::Index i = 0; i < nk; ++i) {
            const auto c = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
            y.col(i) = data.col(static_cast<Eigen::Index>(c));
            sk(i) = s.skew_latent[c];
            sc(i) = ctx.mode == SamplerMode::skew_t ? s.scale_latent[c] : 1.0;
        }
        const SNiWParams post =
            sniw_posterior(base.sniw(static_cast<std::size_t>(s.base_component_of[j])), y, sk, sc, ctx.jitter);
        cp = ClusterParams(rsniw(post, r), cp.nu);
    });
}

// ---------------------------------------------------------------------------
// Step 5: degrees of freedom and latent scales (skew-t only)

/// log p(y_k, s_k | nu, xi, psi, Sigma) up to nu-free constants, with the
/// scale latents integrated out. `resid[c] = s_c^2 + e_c' Sigma^{-1} e_c`,
/// e_c = y_c - xi - s_c psi.
inline double nu_loglik(double nu, int d, const std::vector<double>& resid) {
    const double n = static_cast<double>(resid.size());
    const double a = 0.5 * (nu + d + 1.0);
    double v = n * (std::lgamma(a) - std::lgamma(0.5 * nu) + 0.5 * nu * std::log(0.5 * nu));
    for (double r : resid) v -= a * std::log(0.5 * (nu + r));
    return v;
}

struct NuMoveStats {
    std::size_t accepted = 0;
    std::size_t proposed = 0;
};

/// Full conditional Gamma(shape, rate) of gamma_c.
struct ScaleConditional {
    double shape;
    double rate;
};

inline ScaleConditional scale_conditional(double nu, int d, double skew, double resid_quad) {
    return {0.5 * (nu + d + 1.0), 0.5 * (nu + skew * skew + resid_quad)};
}

inline NuMoveStats update_nu_and_scale(ChainState& s, const Mat& data, const NuPrior& nu_prior, double c_nu,
                                       const SweepContext& ctx) {
    const std::size_t n = s.num_obs();
    const std::size_t k = s.num_clusters();
    const int d = static_cast<int>(data.rows());
    std::vector<double> quad(n);
    ctx.exec.for_each(n, [&](std::size_t c) {
        const auto& cp = s.clusters[static_cast<std::size_t>(s.alloc[c])];
        const Vec e = data.col(static_cast<Eigen::Index>(c)) - cp.xi - s.skew_latent[c] * cp.psi;
        quad[c] = cp.sigma.mahalanobis(e);
    });
    const auto members = members_of(s);
    NuMoveStats stats;
    std::vector<char> accepted(k, 0);
    ctx.exec.for_each(k, [&](std::size_t j) {
        RngStream r = ctx.stream(StreamPhase::nu, j);
        std::vector<double> resid;
        resid.reserve(members[j].size());
        for (int c : members[j]) {
            const double sc = s.skew_latent[static_cast<std::size_t>(c)];
            resid.push_back(sc * sc + quad[static_cast<std::size_t>(c)]);
        }
        const double nu = s.clusters[j].nu;
        const double step = (2.0 * r.uniform() - 1.0) * c_nu;
        const double nu_new = 1.0 + (nu - 1.0) * std::exp(step);
        const double log_ratio = nu_loglik(nu_new, d, resid) - nu_loglik(nu, d, resid) + nu_prior.logpdf(nu_new) -
                                 nu_prior.logpdf(nu) + std::log(nu_new - 1.0) - std::log(nu - 1.0);
        if (std::log(r.uniform_open()) < log_ratio) {
            s.clusters[j].nu = nu_new;
            accepted[j] = 1;
        }
    });
    for (char a : accepted) stats.accepted += static_cast<std::size_t>(a);
    stats.proposed = k;

    ctx.exec.for_each(n, [&](std::size_t c) {
        const double nu = s.clusters[static_cast<std::size_t>(s.alloc[c])].nu;
        const ScaleConditional g = scale_conditional(nu, d, s.skew_latent[c], quad[c]);
        RngStream r = ctx.stream(StreamPhase::scale, c);
        s.scale_latent[c] = std::max(r.gamma(g.shape, g.rate), std::numeric_limits<double>::min());
    });
    return stats;
}

// ---------------------------------------------------------------------------

/// Observed-data log density of the current state:
/// sum_c log f(y_c | theta_{l_c}) with the latents integrated out.
inline double state_logdensity(const ChainState& s, const Mat& data, SamplerMode mode, const Executor& exec) {
    std::vector<AtomDensity> atoms;
    atoms.reserve(s.num_clusters());
    for (const auto& cp : s.clusters) atoms.emplace_back(cp, mode);
    std::vector<double> v(s.num_obs());
    exec.for_each(s.num_obs(), [&](std::size_t c) {
        v[c] = atoms[static_cast<std::size_t>(s.alloc[c])].marginal(data.col(static_cast<Eigen::Index>(c)));
    });
    double total = 0.0;
    for (double x : v) total += x;
    return total;
}

/// Initial state: k-means partition into `cfg.init_clusters` groups, constant
/// latents, alpha at its prior mean and cluster parameters drawn from their
/// conditional posterior.
inline ChainState initialize_state(const Mat& data, const BaseMeasure& base, const ConcentrationPrior& prior,
                                   const ChainConfig& cfg, const Executor& exec) {
    const auto n = static_cast<std::size_t>(data.cols());
    RngStream rng(cfg.seed, 0, static_cast<std::uint64_t>(StreamPhase::init) << 56);
    ChainState s;
    const KMeansResult km = kmeans(data, std::min(cfg.init_clusters, n), rng);
    s.alloc = km.labels;
    const auto k = static_cast<std::size_t>(km.centers.cols());
    s.skew_latent.assign(n, cfg.init_skew);
    s.scale_latent.assign(n, 1.0);
    s.alpha = prior.mean();
    const double nu0 = cfg.mode == SamplerMode::skew_t ? cfg.init_nu : std::numeric_limits<double>::infinity();
    s.clusters.reserve(k);
    s.base_component_of.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j) {
        int comp = 0;
        s.clusters.push_back(draw_atom(base, cfg.mode, rng, comp));
        s.clusters.back().nu = nu0;
        s.base_component_of[j] = comp;
    }
    const auto counts = s.counts();
    s.weights.resize(k);
    const double denom = static_cast<double>(n) + s.alpha;
    for (std::size_t j = 0; j < k; ++j) s.weights[j] = static_cast<double>(counts[j]) / denom;
    s.weight_rest = s.alpha / denom;
    compact_labels(s);
    SweepContext ctx{cfg.seed, 0, cfg.mode, cfg.kernel, cfg.jitter, exec};
    update_cluster_params(s, data, base, ctx, /*resample_base_component=*/false);
    return s;
}

struct SweepStats {
    NuMoveStats nu;
};

/// One full sweep in the fixed order alpha, sticks/allocation, skews,
/// cluster parameters, then (skew-t) nu with the scales redrawn right after.
inline SweepStats gibbs_sweep(ChainState& s, const Mat& data, const BaseMeasure& base, const ConcentrationPrior& prior,
                              const ChainConfig& cfg, const SweepContext& ctx) {
    SweepStats stats;
    RngStream alpha_rng = ctx.stream(StreamPhase::main, 0);
    update_alpha(s, prior, alpha_rng);
    update_sticks_and_alloc(s, data, base, ctx);
    update_skew_latent(s, data, ctx);
    update_cluster_params(s, data, base, ctx);
    if (cfg.mode == SamplerMode::skew_t) stats.nu = update_nu_and_scale(s, data, base.nu_prior(), cfg.c_nu, ctx);
    return stats;
}

}  // namespace sdpm
