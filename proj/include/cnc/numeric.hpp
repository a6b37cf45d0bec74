#pragma once

// Dense linear-algebra kernels shared by every stage.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cnc {

struct LinearFit {
    Eigen::VectorXd coefficients;
    double residual_norm = 0.0;
    bool rank_deficient = false;
};

/// Several right-hand sides sharing one design; column j of `coefficients`
/// solves for column j of the targets.
struct MultiLinearFit {
    Eigen::MatrixXd coefficients;  // p x m
    Eigen::VectorXd residual_norms;
    bool rank_deficient = false;
};

/// Minimises (1/N)||X theta - y||^2 + ridge * ||theta||^2.
///
/// ridge > 0 solves the augmented system [X; sqrt(N ridge) I] by QR. With
/// ridge == 0 a column-pivoted QR is used when X has full column rank and the
/// minimum-norm solution otherwise (rank_deficient is then set).
LinearFit solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double ridge);

/// Same objective for every column of `targets`; the design is factored once.
MultiLinearFit solve_least_squares_multi(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double ridge);

struct TruncatedSvd {
    Eigen::MatrixXd U;  // d x k
    Eigen::VectorXd S;  // k, nonincreasing
    Eigen::MatrixXd V;  // n x k

    Eigen::MatrixXd reconstruct() const { return U * S.asDiagonal() * V.transpose(); }
};

/// Top-k singular triplets. Signs are fixed so that the largest-magnitude
/// entry of each left singular vector is positive.
TruncatedSvd truncated_svd(const Eigen::MatrixXd& M, int k);

struct KMeansOptions {
    std::uint64_t seed = 0;
    int restarts = 10;
    int max_iters = 300;
    std::size_t workers = 1;
};

struct KMeansResult {
    std::vector<int> labels;           // 0-based center index per point
    Eigen::MatrixXd centers;           // dim x k
    double objective = 0.0;            // (1/2n) sum ||y_i - center||^2
    double seeding_objective = 0.0;    // objective of the k-means++ seeding of the chosen run
    std::vector<double> objective_trace;
    int iterations = 0;
    int restart = 0;
};

/// Lloyd's algorithm with k-means++ seeding on the columns of `points`.
/// Best of `restarts` runs by objective, then by restart index.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options = {});

/// k-means objective (1/2n) sum ||y_i - centers[label_i]||^2.
double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& labels, const Eigen::MatrixXd& centers);

/// (1/N) sum_t w_t^2 x_t x_t^T over the rows x_t of `samples`.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples,
                                     const std::optional<Eigen::VectorXd>& weights = std::nullopt);

/// Symmetric inverse square root of a positive definite matrix.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& spd);

/// X C^{-1/2} with C = (1/N) X^T X, so the result has identity empirical covariance.
Eigen::MatrixXd whiten_design(const Eigen::MatrixXd& design);

}  // namespace cnc
