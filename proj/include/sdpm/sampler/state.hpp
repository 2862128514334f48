// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sdpm/model/model.hpp"

namespace sdpm {

enum class SamplerMode { skew_normal, skew_t };

/// How the allocation step scores an atom in skew-t mode.
///  - marginal: skew-t density with both latents integrated out.
///  - scale_conditional: skew-normal density given the current scale latent
///    gamma_c, times the Gamma(nu/2, nu/2) density of gamma_c. Exact Gibbs
///    conditional.
enum class AllocationKernel { marginal, scale_conditional };

inline std::string to_string(SamplerMode m) { return m == SamplerMode::skew_t ? "st" : "sn"; }

inline SamplerMode parse_mode(const std::string& s) {
    if (s == "st" || s == "skew-t" || s == "skew_t") return SamplerMode::skew_t;
    if (s == "sn" || s == "skew-normal" || s == "skew_normal") return SamplerMode::skew_normal;
    throw ConfigError("unknown sampler mode '" + s + "'");
}

struct ChainState;

struct ChainConfig {
    std::size_t n_iter = 2000;
    std::size_t burn_in = 1000;
    std::size_t thin = 5;
    SamplerMode mode = SamplerMode::skew_t;
    AllocationKernel kernel = AllocationKernel::marginal;
    double c_nu = 1.0;  ///< half-width of the log(nu - 1) random walk
    std::uint64_t seed = 1;
    bool parallel = false;
    unsigned threads = 0;  ///< 0 = hardware concurrency
    double jitter = 0.0;   ///< added to the diagonal of every posterior Lambda_k
    std::size_t init_clusters = 30;
    double init_nu = 10.0;
    double init_skew = 0.5;
    /// Called after every sweep with (iteration, state); iteration is 1-based.
    std::function<void(std::size_t, const ChainState&)> on_sweep;

    void validate() const {
        if (n_iter == 0) throw ConfigError("n_iter must be positive");
        if (burn_in >= n_iter) throw ConfigError("burn_in must be smaller than n_iter");
        if (thin == 0) throw ConfigError("thin must be at least 1");
        if (!(c_nu > 0.0)) throw ConfigError("c_nu must be positive");
        if (!(jitter >= 0.0)) throw ConfigError("jitter must be non-negative");
        if (init_clusters == 0) throw ConfigError("init_clusters must be positive");
        if (!(init_nu > 1.0)) throw ConfigError("init_nu must exceed 1");
    }
};

/// Full sampler state. Labels in `alloc` are 0-based indices into `clusters`
/// and are compacted (0..K-1, ordered by first appearance) after each sweep.
struct ChainState {
    std::vector<int> alloc;
    std::vector<double> skew_latent;   ///< s_c >= 0
    std::vector<double> scale_latent;  ///< gamma_c > 0 (1 in skew-normal mode)
    std::vector<double> weights;       ///< w_k of the occupied atoms
    double weight_rest = 0.0;          ///< w_*
    double alpha = 1.0;
    std::vector<ClusterParams> clusters;
    std::vector<int> base_component_of;  ///< h_k

    std::size_t num_clusters() const noexcept { return clusters.size(); }
    std::size_t num_obs() const noexcept { return alloc.size(); }

    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> n(clusters.size(), 0);
        for (int l : alloc) ++n[static_cast<std::size_t>(l)];
        return n;
    }

    /// Labels shifted to 1..K.
    std::vector<int> partition() const {
        std::vector<int> p(alloc.size());
        for (std::size_t c = 0; c < alloc.size(); ++c) p[c] = alloc[c] + 1;
        return p;
    }
};

/// Thinned post-burn-in output of a chain.
struct PosteriorDraws {
    std::vector<std::vector<int>> partitions;  ///< labels 1..K per draw
    std::vector<std::vector<ClusterParams>> cluster_params;
    std::vector<double> alpha_trace;
    std::vector<double> k_trace;
    std::vector<double> logdensity_trace;
    double nu_acceptance_rate = 0.0;
    SamplerMode mode = SamplerMode::skew_t;

    std::size_t size() const noexcept { return partitions.size(); }
};

}  // namespace sdpm
