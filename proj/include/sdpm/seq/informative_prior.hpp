// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "sdpm/model/model.hpp"
#include "sdpm/sampler/state.hpp"
#include "sdpm/seq/em_sniw.hpp"
#include "sdpm/seq/gamma_mle.hpp"

namespace sdpm {

/// Occupied-cluster triples of every stored draw, concatenated.
inline std::vector<SNiWDraw> pool_cluster_draws(const PosteriorDraws& draws) {
    std::vector<SNiWDraw> out;
    for (const auto& clusters : draws.cluster_params)
        for (const auto& cp : clusters) out.push_back(SNiWDraw{cp.xi, cp.psi, cp.sigma});
    return out;
}

/// Most frequent value of the K trace (smallest on ties).
inline std::size_t modal_k(const std::vector<double>& k_trace) {
    if (k_trace.empty()) throw ArgumentError("modal_k: empty trace");
    std::map<long, std::size_t> counts;
    for (double k : k_trace) ++counts[std::lround(k)];
    long best = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [k, c] : counts)
        if (c > best_count) {
            best = k;
            best_count = c;
        }
    return static_cast<std::size_t>(std::max(1L, best));
}

struct InformativePrior {
    BaseMeasure base;
    ConcentrationPrior concentration;
    SNiWMixtureFit fit;
};

/// Parametric prior for the next sample built from a chain's stored draws:
/// a K-component sNiW mixture (MAP EM on the pooled cluster parameters), a
/// Gamma fit to the alpha trace, and the given nu prior unchanged.
/// k = 0 selects the modal number of clusters of the chain.
inline InformativePrior build_informative_prior(const PosteriorDraws& draws, std::size_t k, const MapPriorConfig& cfg,
                                                const NuPrior& nu_prior) {
    if (draws.size() == 0) throw ArgumentError("build_informative_prior: no stored draws");
    if (k == 0) k = modal_k(draws.k_trace);
    const auto pooled = pool_cluster_draws(draws);
    k = std::min(k, pooled.size());
    SNiWMixtureFit fit = em_sniw(pooled, k, EmMode::map, cfg);
    std::vector<BaseComponent> comps;
    double total = 0.0;
    for (double w : fit.weights) total += w;
    for (std::size_t j = 0; j < fit.components.size(); ++j)
        comps.push_back(BaseComponent{fit.weights[j] / total, fit.components[j]});
    const GammaFit g = fit_gamma_mle(draws.alpha_trace);
    return InformativePrior{BaseMeasure(std::move(comps), nu_prior), ConcentrationPrior(g.shape, g.rate), std::move(fit)};
}

}  // namespace sdpm
