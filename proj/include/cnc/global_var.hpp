#pragma once

// Stage 3: one vector autoregression per cluster.
//
// The joint problem over Gamma in R^{m^2 d} with design I_m (x) x^T is block
// diagonal, so it is solved as m least-squares problems that share one
// m*d-wide design. The design is factored once per cluster.

#include <vector>

#include <Eigen/Dense>

#include "cnc/clustering.hpp"
#include "cnc/dataset.hpp"

namespace cnc {

struct MlrInstance;

struct ClusterVARModel {
    std::vector<std::size_t> members;
    /// m x (m*d). Row u predicts members[u]; block v (columns v*d .. v*d+d-1)
    /// holds the coefficients on members[v]'s history, in lag_spec order.
    Eigen::MatrixXd gamma;
    LagSpec lag_spec;
    bool rank_deficient = false;

    std::size_t m() const { return members.size(); }
    /// Row-major flattening of gamma, i.e. Gamma in R^{m^2 d}.
    Eigen::VectorXd flattened() const;
};

/// Solves the shared-design problem and returns coefficients in design column order (m x (m*d)).
Eigen::MatrixXd fit_shared_design(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double ridge,
                                  bool* rank_deficient = nullptr);

ClusterVARModel fit_cluster_var(const ClusterSamples& samples, const LagSpec& lags, double ridge);

ClusterVARModel fit_cluster_var(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                const LagSpec& lags, const SamplePlan& plan, double ridge);

/// One model per non-empty cluster, ordered by cluster id.
std::vector<ClusterVARModel> fit_all_var(const TimeSeriesDataset& ds, const ClusterAssignment& assignment,
                                         const LagSpec& lags, const SamplePlan& plan, double ridge,
                                         std::size_t workers = 0);

/// Cluster-level regression data from an MLR instance: row t of the design is
/// x_iota^{(t)} (member designs concatenated), column u of the targets is y_{i_u}.
struct MlrClusterData {
    Eigen::MatrixXd design;   // T x (m*d)
    Eigen::MatrixXd targets;  // T x m
};
MlrClusterData mlr_cluster_data(const MlrInstance& mlr, const std::vector<std::size_t>& members);

/// VAR on an MLR instance for an arbitrary member set. Gamma blocks follow
/// the design coordinates of x_i^{(t)} directly.
ClusterVARModel fit_mlr_var(const MlrInstance& mlr, const std::vector<std::size_t>& members, double ridge = 0.0);

/// VAR for true cluster `cluster` using the ground-truth membership.
ClusterVARModel fit_oracle_var(const MlrInstance& mlr, int cluster, double ridge = 0.0);

/// Gamma* for the given members, laid out like ClusterVARModel::gamma.
Eigen::MatrixXd true_gamma(const MlrInstance& mlr, const std::vector<std::size_t>& members);

}  // namespace cnc
