// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "sdpm/error.hpp"

namespace sdpm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric positive-definite matrix with its Cholesky factor computed once
/// at construction. Matrices that are asymmetric beyond 1e-10 (relative), not
/// positive definite, or with condition number above 1e12 are rejected.
class SpdMatrix {
public:
    static constexpr double kSymmetryTol = 1e-10;
    static constexpr double kMaxCondition = 1e12;

    SpdMatrix() = default;

    explicit SpdMatrix(const Mat& m) {
        if (m.rows() == 0 || m.rows() != m.cols()) {
            throw ArgumentError("SpdMatrix: matrix must be square and non-empty");
        }
        if (!m.allFinite()) throw NumericalError("SpdMatrix: non-finite entry");
        const double scale = m.cwiseAbs().maxCoeff();
        if (scale == 0.0) throw NumericalError("SpdMatrix: zero matrix");
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
            throw NumericalError("SpdMatrix: matrix is not symmetric");
        }
        mat_ = 0.5 * (m + m.transpose());
        factorize();
    }

    static SpdMatrix identity(Eigen::Index d) { return SpdMatrix(Mat::Identity(d, d)); }
    static SpdMatrix scalar(double v) { return SpdMatrix(Mat::Constant(1, 1, v)); }

    Eigen::Index dim() const noexcept { return mat_.rows(); }
    const Mat& matrix() const noexcept { return mat_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

    /// Lower-triangular L with L L' = matrix().
    const Mat& lower() const noexcept { return lower_; }
    double logdet() const noexcept { return logdet_; }

    Vec solve(const Vec& v) const { return llt_.solve(v); }
    Mat solve(const Mat& m) const { return llt_.solve(m); }
    Mat inverse() const { return llt_.solve(Mat::Identity(dim(), dim())); }

    /// v' A^{-1} v
    double mahalanobis(const Vec& v) const {
        return lower_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
    }

private:
    void factorize() {
        llt_.compute(mat_);
        if (llt_.info() != Eigen::Success) {
            throw NumericalError("SpdMatrix: matrix is not positive definite");
        }
        lower_ = llt_.matrixL();
        const Vec diag = lower_.diagonal();
        if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
            throw NumericalError("SpdMatrix: non-positive Cholesky diagonal");
        }
        logdet_ = 2.0 * diag.array().log().sum();
        if (mat_.rows() > 1) {
            Eigen::SelfAdjointEigenSolver<Mat> es(mat_, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            const double hi = es.eigenvalues().maxCoeff();
            if (lo <= 0.0 || hi / lo > kMaxCondition) {
                throw NumericalError("SpdMatrix: condition number exceeds 1e12");
            }
        }
    }

    Mat mat_;
    Mat lower_;
    Eigen::LLT<Mat> llt_;
    double logdet_ = 0.0;
};

}  // namespace sdpm
