#pragma once

// Stage 2: grouping series by their AR parameter vectors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cnc {

struct ClusterAssignment {
    std::vector<int> labels;  // 0-based cluster id per series
    int k = 0;

    std::size_t size() const { return labels.size(); }
    /// Series indices with label c, ascending.
    std::vector<std::size_t> members(int c) const;
    std::vector<int> cluster_sizes() const;
    /// Throws ArgumentError unless every label is in [0, k).
    void validate() const;

    friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// Relabels clusters in order of first appearance (series 0 gets label 0).
ClusterAssignment canonical(ClusterAssignment assignment);

struct SpectralOptions {
    std::uint64_t seed = 0;
    int restarts = 10;
    int max_iters = 300;
};

/// Columns of the rank-r projection Y = U^T X_r (r x n), r = min(k, d, n).
Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& X, int k);
/// The rank-r approximant X_r (d x n), r = min(k, d, n).
Eigen::MatrixXd lowrank_approximant(const Eigen::MatrixXd& X, int k);

/// Truncated SVD of X, projection onto the top singular directions, then
/// k-means on the projected columns.
ClusterAssignment spectral_cluster(const Eigen::MatrixXd& X, int k, const SpectralOptions& options = {});

/// k-means directly on the columns of the rank-k approximant of X.
ClusterAssignment lowrank_cluster(const Eigen::MatrixXd& X, int k, const SpectralOptions& options = {});

struct KnnGraphOptions {
    int neighbors = 11;
    std::uint64_t seed = 0;
    bool balance = true;
    double balance_factor = 1.3;
    int restarts = 10;
};

/// Unweighted K-nearest-neighbour graph on the columns of X (edge when either
/// endpoint lists the other; distance ties go to the lower index).
std::vector<std::vector<int>> knn_graph(const Eigen::MatrixXd& X, int neighbors);

/// Normalised-Laplacian spectral partition of the KNN graph, followed by a
/// greedy boundary-move pass capping cluster size at ceil(balance_factor n / k).
ClusterAssignment knn_graph_partition(const Eigen::MatrixXd& X, int k, const KnnGraphOptions& options = {});

/// Uniformly random assignment with cluster sizes differing by at most one.
ClusterAssignment random_balanced_assignment(std::size_t n, int k, std::uint64_t seed);

/// Every series in its own cluster.
ClusterAssignment singleton_assignment(std::size_t n);

/// Minimum number of disagreements over relabelling bijections.
int clustering_error(const ClusterAssignment& c, const ClusterAssignment& c_ref);
int clustering_error_exhaustive(const ClusterAssignment& c, const ClusterAssignment& c_ref);
int clustering_error_hungarian(const ClusterAssignment& c, const ClusterAssignment& c_ref);

/// Maximum-weight perfect matching on a square matrix; result[row] = column.
std::vector<int> hungarian_max_assignment(const Eigen::MatrixXd& weights);

/// "series_id,cluster" rows in series order.
void write_assignment_csv(const ClusterAssignment& assignment, const std::vector<std::string>& series_ids,
                          const std::filesystem::path& path);

}  // namespace cnc
