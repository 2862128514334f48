// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <string>

#include "sdpm/sampler/gibbs.hpp"

namespace sdpm {

/// Run one chain and return the thinned post-burn-in draws.
/// Draw i is taken at iteration burn_in + (i + 1) * thin.
inline PosteriorDraws run_chain(const DataMatrix& data, const BaseMeasure& base, const ConcentrationPrior& prior,
                                const ChainConfig& cfg) {
    cfg.validate();
    if (base.dim() != data.cols()) throw ArgumentError("run_chain: base measure dimension does not match data");
    const Mat y = data.values().transpose();
    const Executor exec(cfg.parallel, cfg.threads);

    PosteriorDraws out;
    out.mode = cfg.mode;
    const std::size_t n_keep = (cfg.n_iter - cfg.burn_in) / cfg.thin;
    out.partitions.reserve(n_keep);
    out.cluster_params.reserve(n_keep);

    ChainState state;
    try {
        state = initialize_state(y, base, prior, cfg, exec);
    } catch (const DegenerateSliceError&) {
        throw;
    } catch (const ChainFailure&) {
        throw;
    } catch (const NumericalError& e) {
        throw ChainFailure(0, e.what());
    }

    NuMoveStats nu_total;
    for (std::size_t it = 1; it <= cfg.n_iter; ++it) {
        const SweepContext ctx{cfg.seed, it, cfg.mode, cfg.kernel, cfg.jitter, exec};
        try {
            const SweepStats st = gibbs_sweep(state, y, base, prior, cfg, ctx);
            nu_total.accepted += st.nu.accepted;
            nu_total.proposed += st.nu.proposed;
        } catch (const DegenerateSliceError&) {
            throw;
        } catch (const NumericalError& e) {
            throw ChainFailure(it, e.what());
        }

        if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && out.size() < n_keep) {
            double ld = 0.0;
            try {
                ld = state_logdensity(state, y, cfg.mode, exec);
            } catch (const NumericalError& e) {
                throw ChainFailure(it, e.what());
            }
            if (!std::isfinite(ld)) throw ChainFailure(it, "non-finite log density");
            out.partitions.push_back(state.partition());
            out.cluster_params.push_back(state.clusters);
            out.alpha_trace.push_back(state.alpha);
            out.k_trace.push_back(static_cast<double>(state.num_clusters()));
            out.logdensity_trace.push_back(ld);
        }
        if (cfg.on_sweep) cfg.on_sweep(it, state);
    }
    out.nu_acceptance_rate =
        nu_total.proposed > 0 ? static_cast<double>(nu_total.accepted) / static_cast<double>(nu_total.proposed) : 0.0;
    return out;
}

}  // namespace sdpm
