// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <limits>
#include <vector>

#include "sdpm/stats/rng.hpp"
#include "sdpm/stats/spd_matrix.hpp"

namespace sdpm {

struct KMeansResult {
    std::vector<int> labels;  ///< 0..k-1, every label used
    Mat centers;              ///< dim x k
    double inertia = 0.0;
};

/// k-means++ seeding followed by Lloyd iterations on the columns of `points`.
/// Empty clusters are dropped, so the returned k may be smaller than asked.
inline KMeansResult kmeans(const Mat& points, std::size_t k, RngStream& rng, std::size_t max_iter = 25) {
    const auto n = static_cast<std::size_t>(points.cols());
    if (n == 0 || k == 0) throw ArgumentError("kmeans: need points and k >= 1");
    k = std::min(k, n);
    Mat centers(points.rows(), static_cast<Eigen::Index>(k));
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    centers.col(0) = points.col(static_cast<Eigen::Index>(rng.uniform_index(n)));
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = (points.col(i) - centers.col(j - 1)).squaredNorm();
            if (dd < dist[i]) dist[i] = dd;
            total += dist[i];
        }
        std::size_t pick = rng.uniform_index(n);
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                u -= dist[i];
                if (u < 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.col(static_cast<Eigen::Index>(j)) = points.col(static_cast<Eigen::Index>(pick));
    }

    std::vector<int> labels(n, -1);
    for (std::size_t it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (centers.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&best);
            if (labels[i] != static_cast<int>(best)) {
                labels[i] = static_cast<int>(best);
                changed = true;
            }
        }
        Mat sums = Mat::Zero(points.rows(), centers.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.col(labels[i]) += points.col(i);
            ++counts[labels[i]];
        }
        for (std::size_t j = 0; j < k; ++j)
            if (counts[j] > 0) centers.col(j) = sums.col(j) / static_cast<double>(counts[j]);
        if (!changed) break;
    }

    // drop empty clusters
    std::vector<int> remap(k, -1);
    int next = 0;
    for (int l : labels)
        if (remap[l] < 0) remap[l] = next++;
    KMeansResult out;
    out.centers.resize(points.rows(), next);
    for (std::size_t j = 0; j < k; ++j)
        if (remap[j] >= 0) out.centers.col(remap[j]) = centers.col(j);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.labels[i] = remap[labels[i]];
        out.inertia += (points.col(i) - out.centers.col(out.labels[i])).squaredNorm();
    }
    return out;
}

}  // namespace sdpm
