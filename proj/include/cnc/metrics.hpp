#pragma once

// Forecast error metrics and rolling-origin validation.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cnc/dataset.hpp"

namespace cnc {

enum class Metric { WAPE, MAPE, SMAPE, MAE, RMSE };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);
const std::vector<Metric>& all_metrics();

// All take actuals first. Undefined values (empty mask, zero denominator) are NaN.
double wape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double mape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double smape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double mae(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double rmse(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double compute_metric(Metric metric, const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);

struct EvalConfig {
    int horizon = 24;
    int windows = 7;
    std::vector<Metric> metrics = all_metrics();

    /// Throws ArgumentError unless horizon >= 1, windows >= 1 and horizon*windows < T.
    void validate(int T) const;
};

enum class FitMode { Refit, Fixed };

/// history -> horizon-step forecast (n x horizon).
using Predictor = std::function<Eigen::MatrixXd(const TimeSeriesDataset& history, int horizon)>;
/// training prefix -> predictor.
using FitFn = std::function<Predictor(const TimeSeriesDataset& train)>;

/// Training cutoffs T - (n_w - w + 1) * horizon for w = 1..n_w.
std::vector<int> window_cutoffs(int T, const EvalConfig& config);

struct MetricRow {
    std::string method;
    std::string window;  // "all" for the pooled result, else 1-based window index
    Metric metric = Metric::WAPE;
    double value = 0.0;
    bool undefined = false;
};

struct EvalResult {
    std::vector<int> cutoffs;
    std::vector<MetricRow> rows;
    Eigen::MatrixXd pooled_actual;    // n x (windows * horizon), windows side by side
    Eigen::MatrixXd pooled_forecast;
    double fit_seconds = 0.0;

    /// Pooled value of a metric; throws ArgumentError when it was not computed.
    double pooled(Metric metric) const;
};

EvalResult rolling_validate(const TimeSeriesDataset& ds, const FitFn& fit, const EvalConfig& config,
                            FitMode mode = FitMode::Refit, const std::string& method = "model");

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows, bool header = true);

}  // namespace cnc
