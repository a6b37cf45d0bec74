#include "cnc/local_ar.hpp"

#include "cnc/errors.hpp"
#include "cnc/numeric.hpp"
#include "cnc/parallel.hpp"

namespace cnc {

ARParams fit_ar(const RegressionSamples& samples, const LagSpec& lags, double ridge, std::string series_id) {
    if (samples.targets.size() == 0) throw ArgumentError("no samples to fit an AR model");
    if (samples.design.cols() != lags.d())
        throw ShapeError("AR design has " + std::to_string(samples.design.cols()) + " columns for " +
                         std::to_string(lags.d()) + " lags");
    const MultiLinearFit fit = solve_least_squares_multi(samples.design, samples.targets, ridge);
    const int d = lags.d();
    ARParams out;
    out.theta.resize(d);
    // Design columns run most-distant lag first.
    for (int j = 0; j < d; ++j) out.theta(j) = fit.coefficients(d - 1 - j, 0);
    out.series = std::move(series_id);
    out.lag_spec = lags;
    out.rank_deficient = fit.rank_deficient;
    return out;
}

std::vector<ARParams> fit_all_ar(const TimeSeriesDataset& ds, const LagSpec& lags, const SamplePlan& plan,
                                 double ridge, std::size_t workers) {
    return parallel_map<ARParams>(ds.num_series(), workers, [&](std::size_t i) {
        return fit_ar(extract_ar_samples(ds, i, lags, plan), lags, ridge, ds.series_ids[i]);
    });
}

Eigen::MatrixXd stack_params(const std::vector<ARParams>& params) {
    if (params.empty()) return {};
    const auto d = params.front().theta.size();
    Eigen::MatrixXd out(d, static_cast<Eigen::Index>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].theta.size() != d) throw ShapeError("AR parameter vectors have different lengths");
        out.col(static_cast<Eigen::Index>(i)) = params[i].theta;
    }
    return out;
}

NormalizedParams normalize_params(const std::vector<ARParams>& params) {
    NormalizedParams out{stack_params(params), std::vector<bool>(params.size(), false)};
    for (Eigen::Index i = 0; i < out.columns.cols(); ++i) {
        const double norm = out.columns.col(i).norm();
        if (norm == 0.0)
            out.zero_norm[static_cast<std::size_t>(i)] = true;
        else
            out.columns.col(i) /= norm;
    }
    return out;
}

Eigen::MatrixXd forecast_ar(const std::vector<ARParams>& params, const TimeSeriesDataset& history, int horizon) {
    if (horizon < 1) throw ArgumentError("horizon must be >= 1");
    if (params.size() != history.num_series())
        throw ShapeError(std::to_string(params.size()) + " AR models for " + std::to_string(history.num_series()) +
                         " series");
    const int T = history.length();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(params.size()), horizon);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& lags = params[i].lag_spec.lags();
        if (T < params[i].lag_spec.max_lag()) throw ArgumentError("history shorter than the largest lag");
        // Extended path: observed values followed by predictions.
        std::vector<double> path;
        path.reserve(static_cast<std::size_t>(T + horizon));
        for (int t = 1; t <= T; ++t) path.push_back(history.at(i, t));
        for (int h = 0; h < horizon; ++h) {
            const int t = T + h + 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < lags.size(); ++j)
                acc += params[i].theta(static_cast<Eigen::Index>(j)) * path[static_cast<std::size_t>(t - lags[j] - 1)];
            path.push_back(acc);
            out(static_cast<Eigen::Index>(i), h) = acc;
        }
    }
    return out;
}

}  // namespace cnc
