#pragma once

// Stage 1: one scalar autoregression per series.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cnc/dataset.hpp"

namespace cnc {

struct ARParams {
    Eigen::VectorXd theta;  // theta[j] multiplies the value lag_spec.lags()[j] steps back
    std::string series;
    LagSpec lag_spec;
    bool rank_deficient = false;
};

/// Least-squares AR fit on samples extracted by `extract_ar_samples`.
ARParams fit_ar(const RegressionSamples& samples, const LagSpec& lags, double ridge, std::string series_id = {});

/// fit_ar for every series, in series order.
std::vector<ARParams> fit_all_ar(const TimeSeriesDataset& ds, const LagSpec& lags, const SamplePlan& plan,
                                 double ridge, std::size_t workers = 0);

struct NormalizedParams {
    Eigen::MatrixXd columns;       // d x n
    std::vector<bool> zero_norm;   // true where theta was exactly zero and passed through
};

/// Column i = theta_i / ||theta_i||_2.
NormalizedParams normalize_params(const std::vector<ARParams>& params);

/// Column i = theta_i, unnormalised.
Eigen::MatrixXd stack_params(const std::vector<ARParams>& params);

/// Recursive h-step forecasts of independent scalar AR models (n x h).
Eigen::MatrixXd forecast_ar(const std::vector<ARParams>& params, const TimeSeriesDataset& history, int horizon);

}  // namespace cnc
