#include <doctest.h>

#include "cnc/errors.hpp"
#include "cnc/local_ar.hpp"
#include "helpers.hpp"

using namespace cnc;

namespace {

// Noiseless AR recursion x_t = sum_j theta_j x_{t - lag_j} from a random start.
TimeSeriesDataset ar_process(const std::vector<Eigen::VectorXd>& thetas, const LagSpec& lags, int T, std::uint64_t seed) {
    cnc::Rng rng(seed);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(thetas.size()), T);
    for (std::size_t i = 0; i < thetas.size(); ++i)
        for (int t = 0; t < T; ++t) {
            if (t < lags.max_lag()) {
                v(static_cast<Eigen::Index>(i), t) = rng.normal();
                continue;
            }
            double x = 0.01 * rng.normal();
            for (int j = 0; j < lags.d(); ++j) x += thetas[i](j) * v(static_cast<Eigen::Index>(i), t - lags.lags()[static_cast<std::size_t>(j)]);
            v(static_cast<Eigen::Index>(i), t) = x;
        }
    return TimeSeriesDataset::from_matrix(v);
}

}  // namespace

TEST_CASE("AR fit recovers coefficients in lag order") {
    const LagSpec lags(std::vector<int>{1, 2, 5});
    Eigen::VectorXd theta(3);
    theta << 0.5, -0.3, 0.2;  // lag 1, lag 2, lag 5
    const auto ds = ar_process({theta}, lags, 4000, 1);
    const auto params = fit_all_ar(ds, lags, Sliding{}, 0.0);
    REQUIRE(params.size() == 1);
    CHECK((params[0].theta - theta).norm() < 0.01);
    CHECK(params[0].series == "s0");
    CHECK(params[0].lag_spec == lags);
}

TEST_CASE("AR fit equals an independent solve on the extracted samples") {
    cnc::Rng rng(2);
    const auto ds = TimeSeriesDataset::from_matrix(testing::gaussian(rng, 3, 50));
    const LagSpec lags = LagSpec::contiguous(4);
    const auto params = fit_all_ar(ds, lags, Sliding{}, 0.0, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        const RegressionSamples s = extract_ar_samples(ds, i, lags, Sliding{});
        const Eigen::VectorXd design_order = testing::pinv(s.design) * s.targets;
        for (int j = 0; j < 4; ++j) CHECK(params[i].theta(j) == doctest::Approx(design_order(3 - j)).epsilon(1e-10));
    }
    const auto blocked = fit_all_ar(ds, lags, make_blocks(50, 5, lags), 0.0);
    CHECK(blocked.size() == 3u);
}

TEST_CASE("fit_all_ar is independent of the worker count") {
    cnc::Rng rng(3);
    const auto ds = TimeSeriesDataset::from_matrix(testing::gaussian(rng, 9, 40));
    const auto a = fit_all_ar(ds, LagSpec::contiguous(3), Sliding{}, 1e-8, 1);
    const auto b = fit_all_ar(ds, LagSpec::contiguous(3), Sliding{}, 1e-8, 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].theta.array() == b[i].theta.array()).all());
}

TEST_CASE("normalisation and stacking") {
    std::vector<ARParams> params(3);
    params[0].theta = Eigen::Vector2d(3.0, 4.0);
    params[1].theta = Eigen::Vector2d(0.0, 0.0);
    params[2].theta = Eigen::Vector2d(-1.0, 0.0);
    const NormalizedParams np = normalize_params(params);
    CHECK(np.columns(0, 0) == doctest::Approx(0.6));
    CHECK(np.columns(1, 0) == doctest::Approx(0.8));
    CHECK(np.columns.col(1).norm() == 0.0);
    CHECK(np.zero_norm == std::vector<bool>{false, true, false});
    CHECK(np.columns(0, 2) == -1.0);
    const Eigen::MatrixXd stacked = stack_params(params);
    CHECK(stacked(1, 0) == 4.0);
    CHECK(stacked.cols() == 3);
}

TEST_CASE("AR forecasts follow the recursion") {
    const LagSpec lags(std::vector<int>{1, 3});
    std::vector<ARParams> params(1);
    params[0].theta = Eigen::Vector2d(0.5, 0.25);  // x_t = 0.5 x_{t-1} + 0.25 x_{t-3}
    params[0].lag_spec = lags;
    Eigen::MatrixXd hist(1, 4);
    hist << 1.0, 2.0, 3.0, 4.0;
    const auto ds = TimeSeriesDataset::from_matrix(hist);
    const Eigen::MatrixXd f = forecast_ar(params, ds, 3);
    const double f1 = 0.5 * 4.0 + 0.25 * 2.0;
    const double f2 = 0.5 * f1 + 0.25 * 3.0;
    const double f3 = 0.5 * f2 + 0.25 * 4.0;
    CHECK(f(0, 0) == f1);
    CHECK(f(0, 1) == f2);
    CHECK(f(0, 2) == f3);
    CHECK_THROWS(forecast_ar(params, ds, 0));
}
