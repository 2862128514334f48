// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdpm/error.hpp"
#include "sdpm/sampler/parallel.hpp"
#include "sdpm/stats/rng.hpp"

namespace sdpm {

/// Cluster labels 1..K with every label used.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<int> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw ArgumentError("Partition: empty label vector");
        int k = 0;
        for (int l : labels_) {
            if (l < 1) throw ArgumentError("Partition: labels must be >= 1");
            k = std::max(k, l);
        }
        std::vector<char> seen(static_cast<std::size_t>(k) + 1, 0);
        for (int l : labels_) seen[static_cast<std::size_t>(l)] = 1;
        for (int l = 1; l <= k; ++l)
            if (!seen[static_cast<std::size_t>(l)]) throw ArgumentError("Partition: labels must be contiguous 1..K");
        k_ = k;
    }

    /// Any integer labelling, relabelled 1..K in order of first appearance.
    static Partition normalized(const std::vector<int>& raw) {
        std::unordered_map<int, int> map;
        std::vector<int> out(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            auto it = map.find(raw[i]);
            if (it == map.end()) it = map.emplace(raw[i], static_cast<int>(map.size()) + 1).first;
            out[i] = it->second;
        }
        return Partition(std::move(out));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    int num_clusters() const noexcept { return k_; }
    int operator[](std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const noexcept { return labels_; }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> s(static_cast<std::size_t>(k_), 0);
        for (int l : labels_) ++s[static_cast<std::size_t>(l - 1)];
        return s;
    }

    /// Members (0-based indices) of each cluster.
    std::vector<std::vector<std::size_t>> clusters() const {
        std::vector<std::vector<std::size_t>> c(static_cast<std::size_t>(k_));
        for (std::size_t i = 0; i < labels_.size(); ++i) c[static_cast<std::size_t>(labels_[i] - 1)].push_back(i);
        return c;
    }

    bool operator==(const Partition& o) const { return labels_ == o.labels_; }

private:
    std::vector<int> labels_;
    int k_ = 0;
};

/// Symmetric C x C posterior co-clustering matrix, stored row-major.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t n) : n_(n), v_(n * n, 0.0) {}
    SimilarityMatrix(std::size_t n, std::vector<double> values) : n_(n), v_(std::move(values)) {
        if (v_.size() != n * n) throw ArgumentError("SimilarityMatrix: wrong number of entries");
    }
    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
    const std::vector<double>& values() const noexcept { return v_; }

private:
    std::size_t n_ = 0;
    std::vector<double> v_;
};

inline void check_same_length(const std::vector<Partition>& parts, const char* who) {
    if (parts.empty()) throw ArgumentError(std::string(who) + ": no partitions");
    for (const auto& p : parts)
        if (p.size() != parts.front().size()) throw ArgumentError(std::string(who) + ": partitions differ in length");
}

/// zeta_cd = (1/N) sum_j 1{l_c^(j) = l_d^(j)}. Rows are filled in parallel;
/// each entry sums the draws in a fixed order.
inline SimilarityMatrix similarity_matrix(const std::vector<Partition>& parts, const Executor& exec = Executor()) {
    check_same_length(parts, "similarity_matrix");
    const std::size_t n = parts.front().size();
    const double inv = 1.0 / static_cast<double>(parts.size());
    SimilarityMatrix z(n);
    exec.for_each(n, [&](std::size_t c) {
        std::vector<unsigned> counts(n, 0);
        for (const auto& p : parts) {
            const int lc = p[c];
            for (std::size_t d = 0; d < n; ++d) counts[d] += static_cast<unsigned>(p[d] == lc);
        }
        for (std::size_t d = 0; d < n; ++d) z.at(c, d) = static_cast<double>(counts[d]) * inv;
    });
    return z;
}

/// Random subset of `m` observation indices, sorted. Used to bound the
/// quadratic cost of similarity-based summaries on large samples.
inline std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t m, RngStream& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (m >= n) return idx;
    for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline Partition restrict_partition(const Partition& p, const std::vector<std::size_t>& idx) {
    std::vector<int> raw(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) raw[i] = p[idx[i]];
    return Partition::normalized(raw);
}

/// sum_{c<d} 2 (1{l_c = l_d} - zeta_cd)^2
inline double binder_loss(const Partition& p, const SimilarityMatrix& z) {
    if (p.size() != z.size()) throw ArgumentError("binder_loss: size mismatch");
    double loss = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c)
        for (std::size_t d = c + 1; d < p.size(); ++d) {
            const double e = (p[c] == p[d] ? 1.0 : 0.0) - z(c, d);
            loss += 2.0 * e * e;
        }
    return loss;
}

/// Scores closer than this (relative) count as tied; ties go to the earliest
/// draw. Equal losses of different partitions can differ in the last bits.
inline constexpr double kTieTolerance = 1e-12;

struct BinderResult {
    Partition partition;
    double loss = 0.0;
    std::size_t index = 0;
};

/// Sampled partition with the smallest Binder loss; earliest index on ties.
inline BinderResult binder_point_estimate(const std::vector<Partition>& parts, const SimilarityMatrix& z,
                                          const Executor& exec = Executor()) {
    check_same_length(parts, "binder_point_estimate");
    std::vector<double> loss(parts.size());
    exec.for_each(parts.size(), [&](std::size_t j) { loss[j] = binder_loss(parts[j], z); });
    std::size_t best = 0;
    for (std::size_t j = 1; j < loss.size(); ++j)
        if (loss[j] < loss[best] - kTieTolerance * std::max(1.0, loss[best])) best = j;
    return BinderResult{parts[best], loss[best], best};
}

// ---------------------------------------------------------------------------
// F-measure

/// Harmonic mean of precision |g n h| / |h| and recall |g n h| / |g|.
inline double f_measure_counts(std::size_t inter, std::size_t h_size, std::size_t g_size) {
    if (h_size == 0 || g_size == 0) throw ArgumentError("f_measure: empty set");
    if (inter == 0) return 0.0;
    const double pr = static_cast<double>(inter) / static_cast<double>(h_size);
    const double re = static_cast<double>(inter) / static_cast<double>(g_size);
    return 2.0 * pr * re / (pr + re);
}

/// F(h, g) for two index sets (duplicates are ignored).
inline double f_measure_pair(std::vector<std::size_t> h, std::vector<std::size_t> g) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (h.empty() || g.empty()) throw ArgumentError("f_measure_pair: empty set");
    std::vector<std::size_t> inter;
    std::set_intersection(h.begin(), h.end(), g.begin(), g.end(), std::back_inserter(inter));
    return f_measure_counts(inter.size(), h.size(), g.size());
}

/// (1 / sum_q |g_q|) sum_q |g_q| max_r F(h_r, g_q) with h = pred, g = ref.
/// Not symmetric in its arguments.
inline double f_measure_total(const Partition& pred, const Partition& ref) {
    if (pred.size() != ref.size()) throw ArgumentError("f_measure_total: length mismatch");
    const auto kp = static_cast<std::size_t>(pred.num_clusters());
    const auto kr = static_cast<std::size_t>(ref.num_clusters());
    std::vector<std::size_t> table(kp * kr, 0);
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++table[static_cast<std::size_t>(pred[i] - 1) * kr + static_cast<std::size_t>(ref[i] - 1)];
    const auto hs = pred.sizes();
    const auto gs = ref.sizes();
    double total = 0.0;
    for (std::size_t q = 0; q < kr; ++q) {
        double best = 0.0;
        for (std::size_t r = 0; r < kp; ++r) best = std::max(best, f_measure_counts(table[r * kr + q], hs[r], gs[q]));
        total += static_cast<double>(gs[q]) * best;
    }
    return total / static_cast<double>(pred.size());
}

struct FPointEstimate {
    Partition partition;
    double mean_f = 0.0;
    std::size_t index = 0;
};

/// Sampled partition maximizing (1/N) sum_{j != i} F_total(l^(i), l^(j));
/// earliest index on ties.
inline FPointEstimate f_point_estimate(const std::vector<Partition>& parts, const Executor& exec = Executor()) {
    if (parts.size() < 2) throw ArgumentError("f_point_estimate: need at least two partitions");
    check_same_length(parts, "f_point_estimate");
    const std::size_t n = parts.size();
    std::vector<double> score(n, 0.0);
    exec.for_each(n, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s += f_measure_total(parts[i], parts[j]);
        score[i] = s / static_cast<double>(n);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (score[i] > score[best] + kTieTolerance) best = i;
    return FPointEstimate{parts[best], score[best], best};
}

/// Sub-partitions of the limited F-measure: H keeps the predicted clusters
/// that contain an observation of a reference cluster smaller than p, G is
/// the reference partition on the observations of H.
struct LimitedSubpartitions {
    Partition pred;
    Partition ref;
    std::vector<std::size_t> observations;
};

inline LimitedSubpartitions limited_subpartitions(const Partition& pred, const Partition& ref, std::size_t p) {
    if (pred.size() != ref.size()) throw ArgumentError("limited_f_measure: length mismatch");
    if (p < 1) throw ArgumentError("limited_f_measure: p must be positive");
    const auto gs = ref.sizes();
    std::vector<char> small_ref(gs.size(), 0);
    bool any = false;
    for (std::size_t q = 0; q < gs.size(); ++q)
        if (gs[q] < p) small_ref[q] = any = true;
    if (!any) throw UndefinedMetricError("limited_f_measure: no reference cluster is smaller than p");
    std::vector<char> keep_pred(static_cast<std::size_t>(pred.num_clusters()), 0);
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (small_ref[static_cast<std::size_t>(ref[i] - 1)]) keep_pred[static_cast<std::size_t>(pred[i] - 1)] = 1;
    LimitedSubpartitions out;
    std::vector<int> h, g;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (keep_pred[static_cast<std::size_t>(pred[i] - 1)]) {
            out.observations.push_back(i);
            h.push_back(pred[i]);
            g.push_back(ref[i]);
        }
    out.pred = Partition::normalized(h);
    out.ref = Partition::normalized(g);
    return out;
}

inline double limited_f_measure(const Partition& pred, const Partition& ref, std::size_t p) {
    const auto sub = limited_subpartitions(pred, ref, p);
    return f_measure_total(sub.pred, sub.ref);
}

}  // namespace sdpm
