#include "cnc/metrics.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "cnc/errors.hpp"

namespace cnc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shapes(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
        throw ShapeError("metric inputs differ in shape: " + std::to_string(actual.rows()) + "x" +
                         std::to_string(actual.cols()) + " vs " + std::to_string(predicted.rows()) + "x" +
                         std::to_string(predicted.cols()));
}

}  // namespace

std::string to_string(Metric metric) {
    switch (metric) {
        case Metric::WAPE: return "WAPE";
        case Metric::MAPE: return "MAPE";
        case Metric::SMAPE: return "SMAPE";
        case Metric::MAE: return "MAE";
        case Metric::RMSE: return "RMSE";
    }
    return "?";
}

Metric parse_metric(const std::string& text) {
    std::string upper;
    for (char c : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (Metric m : all_metrics())
        if (to_string(m) == upper) return m;
    throw ArgumentError("unknown metric '" + text + "'");
}

const std::vector<Metric>& all_metrics() {
    static const std::vector<Metric> metrics{Metric::WAPE, Metric::MAPE, Metric::SMAPE, Metric::MAE, Metric::RMSE};
    return metrics;
}

double wape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    check_shapes(actual, predicted);
    const double denom = actual.cwiseAbs().sum();
    if (denom == 0.0) return kNaN;
    return (actual - predicted).cwiseAbs().sum() / denom;
}

double mape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    check_shapes(actual, predicted);
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index c = 0; c < actual.cols(); ++c)
        for (Eigen::Index r = 0; r < actual.rows(); ++r) {
            const double y = std::abs(actual(r, c));
            if (y > 0.0) {
                sum += std::abs(actual(r, c) - predicted(r, c)) / y;
                ++count;
            }
        }
    return count ? sum / static_cast<double>(count) : kNaN;
}

double smape(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    check_shapes(actual, predicted);
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index c = 0; c < actual.cols(); ++c)
        for (Eigen::Index r = 0; r < actual.rows(); ++r) {
            const double denom = std::abs(actual(r, c)) + std::abs(predicted(r, c));
            if (denom > 0.0) {
                sum += 2.0 * std::abs(actual(r, c) - predicted(r, c)) / denom;
                ++count;
            }
        }
    return count ? sum / static_cast<double>(count) : kNaN;
}

double mae(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    check_shapes(actual, predicted);
    if (actual.size() == 0) return kNaN;
    return (actual - predicted).cwiseAbs().sum() / static_cast<double>(actual.size());
}

double rmse(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    check_shapes(actual, predicted);
    if (actual.size() == 0) return kNaN;
    return std::sqrt((actual - predicted).squaredNorm() / static_cast<double>(actual.size()));
}

double compute_metric(Metric metric, const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    switch (metric) {
        case Metric::WAPE: return wape(actual, predicted);
        case Metric::MAPE: return mape(actual, predicted);
        case Metric::SMAPE: return smape(actual, predicted);
        case Metric::MAE: return mae(actual, predicted);
        case Metric::RMSE: return rmse(actual, predicted);
    }
    throw ArgumentError("unknown metric");
}

void EvalConfig::validate(int T) const {
    if (horizon < 1) throw ArgumentError("horizon must be >= 1, got " + std::to_string(horizon));
    if (windows < 1) throw ArgumentError("windows must be >= 1, got " + std::to_string(windows));
    if (static_cast<long>(horizon) * windows >= T)
        throw ArgumentError("horizon*windows = " + std::to_string(static_cast<long>(horizon) * windows) +
                            " must be below the series length " + std::to_string(T));
    if (metrics.empty()) throw ArgumentError("no metrics requested");
}

std::vector<int> window_cutoffs(int T, const EvalConfig& config) {
    config.validate(T);
    std::vector<int> cutoffs;
    for (int w = 1; w <= config.windows; ++w) cutoffs.push_back(T - (config.windows - w + 1) * config.horizon);
    return cutoffs;
}

double EvalResult::pooled(Metric metric) const {
    for (const auto& row : rows)
        if (row.window == "all" && row.metric == metric) return row.value;
    throw ArgumentError("metric " + to_string(metric) + " was not evaluated");
}

EvalResult rolling_validate(const TimeSeriesDataset& ds, const FitFn& fit, const EvalConfig& config, FitMode mode,
                            const std::string& method) {
    ds.validate();
    EvalResult result;
    result.cutoffs = window_cutoffs(ds.length(), config);
    const auto n = static_cast<Eigen::Index>(ds.num_series());
    const int h = config.horizon;
    result.pooled_actual.resize(n, static_cast<Eigen::Index>(config.windows) * h);
    result.pooled_forecast.resize(n, static_cast<Eigen::Index>(config.windows) * h);

    using Clock = std::chrono::steady_clock;
    Predictor fixed;
    if (mode == FitMode::Fixed) {
        const auto start = Clock::now();
        fixed = fit(ds.prefix(result.cutoffs.front()));
        result.fit_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    }

    auto add_rows = [&](const std::string& window, const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
        for (Metric metric : config.metrics) {
            const double value = compute_metric(metric, actual, predicted);
            result.rows.push_back({method, window, metric, value, std::isnan(value)});
        }
    };

    for (int w = 0; w < config.windows; ++w) {
        const int cutoff = result.cutoffs[static_cast<std::size_t>(w)];
        const TimeSeriesDataset history = ds.prefix(cutoff);
        Predictor predictor = fixed;
        if (mode == FitMode::Refit) {
            const auto start = Clock::now();
            predictor = fit(history);
            result.fit_seconds += std::chrono::duration<double>(Clock::now() - start).count();
        }
        const Eigen::MatrixXd predicted = predictor(history, h);
        if (predicted.rows() != n || predicted.cols() != h)
            throw ShapeError("predictor returned " + std::to_string(predicted.rows()) + "x" +
                             std::to_string(predicted.cols()) + ", expected " + std::to_string(n) + "x" +
                             std::to_string(h));
        const Eigen::MatrixXd actual = ds.values.middleCols(cutoff, h);
        result.pooled_actual.middleCols(static_cast<Eigen::Index>(w) * h, h) = actual;
        result.pooled_forecast.middleCols(static_cast<Eigen::Index>(w) * h, h) = predicted;
        add_rows(std::to_string(w + 1), actual, predicted);
    }
    add_rows("all", result.pooled_actual, result.pooled_forecast);
    return result;
}

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows, bool header) {
    if (header) out << "method,window,metric,value\n";
    const auto old = out.precision(17);
    for (const auto& row : rows) {
        out << row.method << ',' << row.window << ',' << to_string(row.metric) << ',';
        if (row.undefined)
            out << "NaN";
        else
            out << row.value;
        out << '\n';
    }
    out.precision(old);
}

}  // namespace cnc
