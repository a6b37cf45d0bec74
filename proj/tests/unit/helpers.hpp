#pragma once

#include <Eigen/Dense>

#include "cnc/rng.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian(cnc::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
    return m;
}

/// Moore-Penrose pseudo-inverse via a full Jacobi SVD.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::MatrixXd s_inv = Eigen::MatrixXd::Zero(a.cols(), a.rows());
    const double tol = 1e-12 * (s.size() ? s(0) : 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) s_inv(i, i) = 1.0 / s(i);
    return svd.matrixV() * s_inv * svd.matrixU().transpose();
}

}  // namespace testing
