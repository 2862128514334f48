// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sdpm/model/model.hpp"
#include "sdpm/stats/samplers.hpp"

namespace sdpm {

struct SimComponent {
    double weight = 1.0;
    SkewTParams params;  ///< nu = inf gives a skew-normal component
};

struct SimSpec {
    std::vector<SimComponent> components;
    std::size_t n_obs = 1000;
    std::uint64_t seed = 1;
    /// Allocate exactly round(weight * n) observations per component (the
    /// remainder goes to the largest) instead of drawing labels at random.
    bool exact_proportions = true;

    void validate() const {
        if (components.empty()) throw ConfigError("simulation needs at least one component");
        if (n_obs == 0) throw ConfigError("simulation needs n_obs > 0");
        double total = 0.0;
        const Eigen::Index d = components.front().params.base.dim();
        for (const auto& c : components) {
            if (!(c.weight > 0.0)) throw ConfigError("component weights must be positive");
            if (c.params.base.dim() != d) throw ConfigError("component dimensions differ");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("component weights must sum to 1");
    }
};

struct SimResult {
    DataMatrix data;
    std::vector<int> labels;  ///< 1-based component index
};

/// One skew-t draw: y = xi + (psi |Z| + eps) / sqrt(W), W ~ Gamma(nu/2, nu/2).
inline Vec rskew_t(const SkewTParams& p, RngStream& rng) {
    const double z = std::abs(rng.normal());
    const Vec eps = p.base.sigma.lower() * rnorm_vec(p.base.dim(), rng);
    const double w = std::isfinite(p.nu) ? rng.gamma(0.5 * p.nu, 0.5 * p.nu) : 1.0;
    return p.base.xi + (p.base.psi * z + eps) / std::sqrt(w);
}

inline SimResult simulate(const SimSpec& spec) {
    spec.validate();
    RngStream rng(spec.seed);
    const std::size_t k = spec.components.size();
    std::vector<int> labels(spec.n_obs);
    if (spec.exact_proportions) {
        std::vector<std::size_t> counts(k);
        std::size_t used = 0, largest = 0;
        for (std::size_t j = 0; j < k; ++j) {
            counts[j] = static_cast<std::size_t>(std::llround(spec.components[j].weight * static_cast<double>(spec.n_obs)));
            used += counts[j];
            if (spec.components[j].weight > spec.components[largest].weight) largest = j;
        }
        if (used > spec.n_obs && counts[largest] < used - spec.n_obs) throw ConfigError("cannot allocate proportions");
        counts[largest] = counts[largest] + spec.n_obs - used;
        std::size_t c = 0;
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i < counts[j]; ++i) labels[c++] = static_cast<int>(j) + 1;
    } else {
        for (auto& l : labels) {
            double u = rng.uniform();
            std::size_t j = 0;
            while (j + 1 < k && u >= spec.components[j].weight) u -= spec.components[j++].weight;
            l = static_cast<int>(j) + 1;
        }
    }
    Mat y(static_cast<Eigen::Index>(spec.n_obs), spec.components.front().params.base.dim());
    for (std::size_t i = 0; i < spec.n_obs; ++i)
        y.row(static_cast<Eigen::Index>(i)) = rskew_t(spec.components[static_cast<std::size_t>(labels[i] - 1)].params, rng);
    return SimResult{DataMatrix(std::move(y)), std::move(labels)};
}

/// Four bivariate skew-t clusters holding 50/30/15/5 % of the observations.
inline SimSpec four_cluster_preset(std::size_t n_obs, std::uint64_t seed) {
    auto comp = [](double w, double x1, double x2, double p1, double p2, double s1, double s2, double nu) {
        Mat sd = Mat::Zero(2, 2);
        sd(0, 0) = s1;
        sd(1, 1) = s2;
        Vec xi(2), psi(2);
        xi << x1, x2;
        psi << p1, p2;
        return SimComponent{w, SkewTParams(SkewNormalParams(xi, psi, SpdMatrix(sd * sd.transpose())), nu)};
    };
    SimSpec s;
    s.components = {comp(0.50, -1.5, 1.5, 0.3, -0.7, 0.3, 0.3, 100.0), comp(0.30, 1.5, 1.5, -0.8, 0.0, 0.1, 0.3, 25.0),
                    comp(0.15, 2.0, -2.5, 0.3, -0.7, 0.3, 0.2, 8.0), comp(0.05, -2.5, -3.0, 0.2, 0.9, 0.3, 0.3, 5.0)};
    s.n_obs = n_obs;
    s.seed = seed;
    return s;
}

}  // namespace sdpm
