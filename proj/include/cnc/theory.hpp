#pragma once

// Monte Carlo checks of the mixed-linear-regression guarantees: the AR
// estimate decomposition, exact spectral recovery, and the oracle/end-to-end
// VAR error bounds.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cnc/simgen.hpp"

namespace cnc {

struct BoundReport {
    std::string claim;
    int trials = 0;
    int successes = 0;
    double empirical_rate = 0.0;
    double theoretical_threshold = 0.0;
    double required_rate = 0.0;
    bool pass = false;
    bool probe = false;  // informational; never fails a run
    std::string criterion;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<nlohmann::json> details;

    nlohmann::json summary_record() const;
    /// One JSON object per detail record, then the summary.
    void write_jsonl(std::ostream& out) const;
};

/// Binomial two-sigma slack 2 sqrt(delta / trials).
double mc_slack(double delta, int trials);

// ---------------------------------------------------------------- AR decomposition

struct ArDecompositionConfig {
    MlrConfig mlr{.n = 2, .k = 1, .T = 50, .d = 2, .nu = 0.1, .sigma = 0.1, .tau = 0.1,
                  .separation = 1.0, .isotropic = false, .seed = 0};
    int replays = 10000;
    double tolerance = 0.05;  // added to 3 / sqrt(replays)
    std::size_t workers = 0;
};

/// nu^2 I + (sigma^2/T) S^{-1} + (tau^2/T) S^{-1} S(rho) S^{-1}, with
/// S = (1/T) X_i^T X_i, S(rho) = (1/T) sum_t rho_t^2 x_t x_t^T and rho_t^2 summing
/// ||x_j^{(t)}||^2 over every member j of series i's cluster.
Eigen::MatrixXd lambda_formula(const MlrInstance& mlr, std::size_t i);

/// Covariance of the least-squares AR estimate over (theta, gamma, noise)
/// redraws with the designs held fixed.
Eigen::MatrixXd exact_theta_covariance(const MlrInstance& mlr, std::size_t i);

BoundReport check_ar_decomposition(const ArDecompositionConfig& config);

// ---------------------------------------------------------------- exact recovery

/// nu^2 + (sigma^2 + tau^2 / rho) / T.
double lambda_quantity(const MlrConfig& mlr, double rho);

/// 32 sqrt(lambda) k sqrt((1 + d/n) / beta) max{1, beta / rho}.
double separation_threshold(const MlrConfig& mlr, double beta, double rho);

struct RecoveryConfig {
    MlrConfig mlr{.n = 200, .k = 4, .T = 500, .d = 5, .nu = 0.1, .sigma = 0.1, .tau = 0.1,
                  .separation = 1.0, .isotropic = true, .seed = 0};
    double multiplier = 2.0;  // s; below 1 the run is a probe
    double beta = 1.0;
    std::optional<double> rho;  // default k / n
    int trials = 100;
    std::size_t workers = 0;
};

/// Per-series least-squares AR estimates (d x n, ridge 0).
Eigen::MatrixXd fit_mlr_thetas(const MlrInstance& mlr);

BoundReport check_exact_recovery(const RecoveryConfig& config);

// ---------------------------------------------------------------- VAR bounds

/// sqrt(2) sqrt(sigma^2 m^2 d / T) + sqrt(3 (sigma^2 / T) log(classes / delta)).
double var_error_bound(int m, int d, int T, double sigma, double delta, int classes = 1);

struct VarBoundConfig {
    int m = 2;
    int d = 3;
    int T = 1000;
    double sigma = 1.0;
    double nu = 0.1;
    double tau = 0.1;
    double delta = 0.1;
    int trials = 500;
    double mse_factor = 1.1;
    double identity_tolerance = 1e-10;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
};

BoundReport check_var_bound(const VarBoundConfig& config);

struct EndToEndConfig {
    MlrConfig mlr{.n = 40, .k = 4, .T = 2000, .d = 2, .nu = 0.1, .sigma = 0.5, .tau = 0.1,
                  .separation = 1.0, .isotropic = true, .seed = 0};
    double multiplier = 2.0;
    double beta = 1.0;
    std::optional<double> rho;
    double delta = 0.1;
    int trials = 200;
    std::size_t workers = 0;
};

BoundReport check_end_to_end(const EndToEndConfig& config);

}  // namespace cnc
