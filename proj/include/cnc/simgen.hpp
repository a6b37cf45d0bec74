#pragma once

// Synthetic data: clustered, clipped linear time series and exact
// mixed-linear-regression instances.
//
// All randomness comes from one seeded counter-based stream split by named
// paths ("labels", "centers", "theta"/i, "gamma"/i, "noise"/i, "designs"/i,
// "phase"), so every draw is reproducible regardless of generation order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cnc/clustering.hpp"
#include "cnc/dataset.hpp"

namespace cnc {

struct GenConfig {
    int n = 200;
    int k_true = 10;
    int d = 10;
    int T = 1000;
    int period = 10;
    double noise_std = 1e-2;
    double theta_std = 1e-2;
    double p_norm = 2.5;
    std::uint64_t seed = 0;

    /// Throws ArgumentError on any inconsistency (k_true must divide n).
    void validate() const;
};

struct TrueTsParams {
    ClusterAssignment labels;
    Eigen::MatrixXd centers;            // d x k, unnormalised draws
    Eigen::MatrixXd thetas;             // d x n, thetas(j, i) multiplies lag j+1 of series i
    std::vector<Eigen::MatrixXd> gammas;  // per series i: d x n, column l = gamma_il (zero unless same cluster, l != i)
    Eigen::VectorXd phases;             // per cluster, initial sinusoid phase
};

struct SyntheticData {
    TimeSeriesDataset data;
    TrueTsParams truth;
};

/// Draws labels and coefficients; each series' full coefficient vector has unit l_p norm.
TrueTsParams draw_ts_params(const GenConfig& cfg);

/// Runs the clipped recursion for given parameters. The first d values of a
/// series are sin(2 pi t / period + phase) of its cluster.
TimeSeriesDataset simulate_ts(const GenConfig& cfg, const TrueTsParams& params);

SyntheticData gen_synthetic_ts(const GenConfig& cfg);

/// l_p norm of series i's concatenated coefficients (theta_i and all gamma_il).
double coefficient_norm(const TrueTsParams& params, std::size_t i, double p);

/// Ground-truth sidecar: labels plus coefficient dump.
nlohmann::json truth_to_json(const GenConfig& cfg, const TrueTsParams& params);

struct MlrConfig {
    int n = 40;
    int k = 4;
    int T = 200;
    int d = 2;
    double nu = 0.1;
    double sigma = 0.1;
    double tau = 0.1;
    double separation = 1.0;
    bool isotropic = true;
    std::uint64_t seed = 0;

    int m() const { return n / k; }
    void validate() const;
};

struct MlrInstance {
    MlrConfig config;
    std::vector<Eigen::MatrixXd> designs;  // per series: T x d, row t = x_i^{(t)}
    ClusterAssignment labels;              // c*, contiguous blocks of m series
    Eigen::MatrixXd centers;               // d x k
    Eigen::MatrixXd thetas;                // d x n
    std::vector<Eigen::MatrixXd> gammas;   // per series i: d x n, column j = gamma_ij
    Eigen::MatrixXd noise;                 // n x T, epsilon_i^{(t)}
    Eigen::MatrixXd y;                     // n x T

    int n() const { return config.n; }
    int T() const { return config.T; }
    int d() const { return config.d; }
};

/// Centers with minimum pairwise distance exactly `separation` (k x d layout as columns of a d x k matrix).
Eigen::MatrixXd separated_centers(int k, int d, double separation);

MlrInstance gen_mlr_instance(const MlrConfig& cfg);

/// Fresh (theta, gamma, epsilon) draws on the same designs, centers and labels.
MlrInstance redraw_mlr(const MlrInstance& base, std::uint64_t seed);

/// y from the stored parameters and noise.
Eigen::MatrixXd mlr_observations(const MlrInstance& mlr);

}  // namespace cnc
