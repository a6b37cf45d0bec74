#include "cnc/global_var.hpp"

#include "cnc/errors.hpp"
#include "cnc/numeric.hpp"
#include "cnc/parallel.hpp"
#include "cnc/simgen.hpp"

namespace cnc {

Eigen::VectorXd ClusterVARModel::flattened() const {
    Eigen::VectorXd out(gamma.size());
    Eigen::Index w = 0;
    for (Eigen::Index r = 0; r < gamma.rows(); ++r)
        for (Eigen::Index c = 0; c < gamma.cols(); ++c) out(w++) = gamma(r, c);
    return out;
}

Eigen::MatrixXd fit_shared_design(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double ridge,
                                  bool* rank_deficient) {
    MultiLinearFit fit = solve_least_squares_multi(design, targets, ridge);
    if (rank_deficient) *rank_deficient = fit.rank_deficient;
    return fit.coefficients.transpose();
}

ClusterVARModel fit_cluster_var(const ClusterSamples& samples, const LagSpec& lags, double ridge) {
    const auto m = static_cast<Eigen::Index>(samples.members.size());
    const int d = lags.d();
    if (samples.design.cols() != m * d) throw ShapeError("cluster design width does not equal m*d");
    ClusterVARModel model;
    model.members = samples.members;
    model.lag_spec = lags;
    const Eigen::MatrixXd raw = fit_shared_design(samples.design, samples.targets, ridge, &model.rank_deficient);
    model.gamma.resize(m, m * d);
    // Design blocks run most-distant lag first; stored blocks follow lag order.
    for (Eigen::Index u = 0; u < m; ++u)
        for (Eigen::Index v = 0; v < m; ++v)
            for (int j = 0; j < d; ++j) model.gamma(u, v * d + j) = raw(u, v * d + (d - 1 - j));
    return model;
}

ClusterVARModel fit_cluster_var(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                const LagSpec& lags, const SamplePlan& plan, double ridge) {
    return fit_cluster_var(extract_cluster_samples(ds, members, lags, plan), lags, ridge);
}

std::vector<ClusterVARModel> fit_all_var(const TimeSeriesDataset& ds, const ClusterAssignment& assignment,
                                         const LagSpec& lags, const SamplePlan& plan, double ridge,
                                         std::size_t workers) {
    assignment.validate();
    if (assignment.size() != ds.num_series()) throw ShapeError("assignment length does not match series count");
    std::vector<std::vector<std::size_t>> groups;
    for (int c = 0; c < assignment.k; ++c) {
        auto members = assignment.members(c);
        if (!members.empty()) groups.push_back(std::move(members));
    }
    return parallel_map<ClusterVARModel>(groups.size(), workers, [&](std::size_t g) {
        return fit_cluster_var(ds, groups[g], lags, plan, ridge);
    });
}

// ---------------------------------------------------------------- MLR

MlrClusterData mlr_cluster_data(const MlrInstance& mlr, const std::vector<std::size_t>& members) {
    if (members.empty()) throw ArgumentError("cluster must have at least one member");
    const int d = mlr.d();
    const auto m = static_cast<Eigen::Index>(members.size());
    MlrClusterData out{Eigen::MatrixXd(mlr.T(), m * d), Eigen::MatrixXd(mlr.T(), m)};
    for (Eigen::Index u = 0; u < m; ++u) {
        const auto i = members[static_cast<std::size_t>(u)];
        if (i >= static_cast<std::size_t>(mlr.n())) throw ArgumentError("member index out of range");
        out.design.middleCols(u * d, d) = mlr.designs[i];
        out.targets.col(u) = mlr.y.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return out;
}

ClusterVARModel fit_mlr_var(const MlrInstance& mlr, const std::vector<std::size_t>& members, double ridge) {
    const MlrClusterData data = mlr_cluster_data(mlr, members);
    ClusterVARModel model;
    model.members = members;
    model.lag_spec = LagSpec::contiguous(mlr.d());
    model.gamma = fit_shared_design(data.design, data.targets, ridge, &model.rank_deficient);
    return model;
}

ClusterVARModel fit_oracle_var(const MlrInstance& mlr, int cluster, double ridge) {
    if (cluster < 0 || cluster >= mlr.labels.k) throw ArgumentError("cluster id out of range");
    return fit_mlr_var(mlr, mlr.labels.members(cluster), ridge);
}

Eigen::MatrixXd true_gamma(const MlrInstance& mlr, const std::vector<std::size_t>& members) {
    const int d = mlr.d();
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd out(m, m * d);
    for (Eigen::Index u = 0; u < m; ++u) {
        const auto i = members[static_cast<std::size_t>(u)];
        for (Eigen::Index v = 0; v < m; ++v) {
            const auto j = members[static_cast<std::size_t>(v)];
            if (i == j)
                out.block(u, v * d, 1, d) = mlr.thetas.col(static_cast<Eigen::Index>(i)).transpose();
            else
                out.block(u, v * d, 1, d) = mlr.gammas[i].col(static_cast<Eigen::Index>(j)).transpose();
        }
    }
    return out;
}

}  // namespace cnc
