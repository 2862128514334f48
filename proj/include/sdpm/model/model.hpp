// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdpm/stats/sniw.hpp"

namespace sdpm {

/// C observations (rows) by d markers (columns).
class DataMatrix {
public:
    DataMatrix() = default;
    DataMatrix(Mat values, std::vector<std::string> names) : values_(std::move(values)), names_(std::move(names)) {
        if (values_.rows() < 1 || values_.cols() < 1) throw ArgumentError("DataMatrix: need at least one row and column");
        if (!values_.allFinite()) throw ArgumentError("DataMatrix: NaN or Inf entry");
        if (names_.empty()) {
            for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("V" + std::to_string(j + 1));
        }
        if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
            throw ArgumentError("DataMatrix: column name count does not match column count");
        }
    }
    explicit DataMatrix(Mat values) : DataMatrix(std::move(values), {}) {}

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    const Mat& values() const noexcept { return values_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    Vec row(Eigen::Index c) const { return values_.row(c).transpose(); }

private:
    Mat values_;
    std::vector<std::string> names_;
};

/// Prior on the skew-t degrees of freedom, supported on nu > 1.
class NuPrior {
public:
    enum class Kind { shifted_exponential, truncated_uniform };

    /// p(nu) = rate exp(-rate (nu - 1)), nu > 1
    static NuPrior shifted_exponential(double rate) {
        if (!(rate > 0.0)) throw ArgumentError("NuPrior: rate must be positive");
        return NuPrior(Kind::shifted_exponential, rate, 0.0, 0.0);
    }
    /// nu - 1 ~ Uniform(lo, hi), 0 <= lo < hi
    static NuPrior truncated_uniform(double lo, double hi) {
        if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) throw ArgumentError("NuPrior: need 0 <= lo < hi");
        return NuPrior(Kind::truncated_uniform, 0.0, lo, hi);
    }

    Kind kind() const noexcept { return kind_; }
    double rate() const noexcept { return rate_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

    double logpdf(double nu) const {
        const double x = nu - 1.0;
        if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
        if (kind_ == Kind::shifted_exponential) return std::log(rate_) - rate_ * x;
        if (x < lo_ || x > hi_) return -std::numeric_limits<double>::infinity();
        return -std::log(hi_ - lo_);
    }

    double sample(RngStream& rng) const {
        if (kind_ == Kind::shifted_exponential) return 1.0 + rng.exponential(rate_);
        return 1.0 + lo_ + (hi_ - lo_) * rng.uniform_open();
    }

private:
    NuPrior(Kind k, double rate, double lo, double hi) : kind_(k), rate_(rate), lo_(lo), hi_(hi) {}
    Kind kind_;
    double rate_;
    double lo_;
    double hi_;
};

struct BaseComponent {
    double weight = 1.0;
    SNiWParams sniw;
};

/// Base measure of the Dirichlet process: a finite mixture of structured
/// Normal inverse-Wishart distributions (a single component for a
/// non-informative prior) times the prior on nu.
class BaseMeasure {
public:
    BaseMeasure(std::vector<BaseComponent> components, NuPrior nu_prior)
        : components_(std::move(components)), nu_prior_(nu_prior) {
        if (components_.empty()) throw ArgumentError("BaseMeasure: need at least one component");
        double total = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight > 0.0) || c.weight > 1.0) throw ArgumentError("BaseMeasure: weights must lie in (0, 1]");
            if (c.sniw.dim() != components_.front().sniw.dim()) {
                throw ArgumentError("BaseMeasure: component dimensions differ");
            }
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-10) throw ArgumentError("BaseMeasure: weights must sum to 1");
    }
    BaseMeasure(const SNiWParams& single, NuPrior nu_prior) : BaseMeasure({BaseComponent{1.0, single}}, nu_prior) {}

    const std::vector<BaseComponent>& components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }
    const SNiWParams& sniw(std::size_t m) const { return components_.at(m).sniw; }
    const NuPrior& nu_prior() const noexcept { return nu_prior_; }
    Eigen::Index dim() const noexcept { return components_.front().sniw.dim(); }

    std::size_t sample_component(RngStream& rng) const {
        if (components_.size() == 1) return 0;
        double u = rng.uniform();
        for (std::size_t m = 0; m + 1 < components_.size(); ++m) {
            if (u < components_[m].weight) return m;
            u -= components_[m].weight;
        }
        return components_.size() - 1;
    }

private:
    std::vector<BaseComponent> components_;
    NuPrior nu_prior_;
};

/// Gamma(a, b) prior (shape, rate) on the concentration parameter.
struct ConcentrationPrior {
    double a = 1.0;
    double b = 1.0;

    ConcentrationPrior() = default;
    ConcentrationPrior(double a_, double b_) : a(a_), b(b_) {
        if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("ConcentrationPrior: a and b must be positive");
    }
    double mean() const noexcept { return a / b; }
};

/// One mixture atom. nu is +inf for skew-normal atoms.
struct ClusterParams {
    Vec xi;
    Vec psi;
    SpdMatrix sigma;
    double nu = std::numeric_limits<double>::infinity();

    ClusterParams() = default;
    ClusterParams(Vec xi_, Vec psi_, SpdMatrix sigma_, double nu_)
        : xi(std::move(xi_)), psi(std::move(psi_)), sigma(std::move(sigma_)), nu(nu_) {
        if (xi.size() != psi.size() || xi.size() != sigma.dim()) throw ArgumentError("ClusterParams: inconsistent dimensions");
        if (!(nu > 1.0)) throw ArgumentError("ClusterParams: nu must exceed 1");
    }
    ClusterParams(SkewNormalParams sn, double nu_)
        : ClusterParams(std::move(sn.xi), std::move(sn.psi), std::move(sn.sigma), nu_) {}

    SkewNormalParams skew_normal() const { return SkewNormalParams(xi, psi, sigma); }
    Eigen::Index dim() const noexcept { return xi.size(); }
};

/// Prior expected number of clusters among C observations:
/// sum_{c=0}^{C-1} alpha / (alpha + c).
inline double expected_num_clusters(double alpha, long long n_obs) {
    if (!(alpha > 0.0)) throw ArgumentError("expected_num_clusters: alpha must be positive");
    if (n_obs < 1) throw ArgumentError("expected_num_clusters: need at least one observation");
    double s = 0.0;
    for (long long c = 0; c < n_obs; ++c) s += alpha / (alpha + static_cast<double>(c));
    return s;
}

/// Tuning knobs of the empirical-Bayes default prior.
struct HyperOptions {
    double d0_xi = 100.0;
    double d0_psi = 100.0;
    double lambda_scale_factor = 1.0 / 3.0;  ///< Lambda_0 = factor * diag(column variances)
    double extra_dof = 2.0;                  ///< lambda_0 = d + 1 + extra_dof
    double nu_rate = 0.1;
    double alpha_a = 0.5;
    double alpha_b = 0.125;
};

struct DefaultPrior {
    BaseMeasure base;
    ConcentrationPrior concentration;
};

/// Empirical-Bayes default prior built from column moments.
inline DefaultPrior default_hyperparams(const DataMatrix& data, const HyperOptions& opt = {}) {
    if (data.rows() < 2) throw ArgumentError("default_hyperparams: need at least two observations");
    const Eigen::Index d = data.cols();
    const Vec mean = data.values().colwise().mean().transpose();
    const Mat centered = data.values().rowwise() - mean.transpose();
    const Vec var = centered.colwise().squaredNorm().transpose() / static_cast<double>(data.rows() - 1);
    if ((var.array() <= 0.0).any()) throw DegenerateSampleError("default_hyperparams: a column has zero variance");

    Mat b_cov = Mat::Zero(2, 2);
    b_cov(0, 0) = opt.d0_xi;
    b_cov(1, 1) = opt.d0_psi;
    SNiWParams sniw(mean, Vec::Zero(d), SpdMatrix(b_cov), SpdMatrix(Mat(var.asDiagonal()) * opt.lambda_scale_factor),
                    static_cast<double>(d) + 1.0 + opt.extra_dof);
    return DefaultPrior{BaseMeasure(sniw, NuPrior::shifted_exponential(opt.nu_rate)),
                        ConcentrationPrior(opt.alpha_a, opt.alpha_b)};
}

}  // namespace sdpm
