#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cnc/errors.hpp"
#include "cnc/numeric.hpp"
#include "helpers.hpp"

using namespace cnc;
using testing::gaussian;
using testing::pinv;

TEST_CASE("least squares agrees with the pseudo-inverse") {
    cnc::Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + static_cast<int>(rng.below(12));
        const int N = p + static_cast<int>(rng.below(30));
        const Eigen::MatrixXd X = gaussian(rng, N, p);
        const Eigen::VectorXd y = gaussian(rng, N, 1).col(0);
        const LinearFit fit = solve_least_squares(X, y, 0.0);
        const Eigen::VectorXd oracle = pinv(X) * y;
        CHECK((fit.coefficients - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
        CHECK_FALSE(fit.rank_deficient);
        CHECK(fit.residual_norm == doctest::Approx((X * oracle - y).norm()).epsilon(1e-9));
    }
}

TEST_CASE("rank-deficient designs give the minimum-norm solution") {
    cnc::Rng rng(2);
    Eigen::MatrixXd X = gaussian(rng, 20, 4);
    X.col(3) = X.col(0) + 2.0 * X.col(1);
    const Eigen::VectorXd y = gaussian(rng, 20, 1).col(0);
    const LinearFit fit = solve_least_squares(X, y, 0.0);
    CHECK(fit.rank_deficient);
    CHECK((fit.coefficients - pinv(X) * y).norm() < 1e-9);

    const Eigen::MatrixXd wide = gaussian(rng, 3, 6);
    const LinearFit under = solve_least_squares(wide, y.head(3), 0.0);
    CHECK(under.rank_deficient);
    CHECK((under.coefficients - pinv(wide) * y.head(3)).norm() < 1e-9);
}

TEST_CASE("ridge matches the regularised normal equations") {
    cnc::Rng rng(3);
    const Eigen::MatrixXd X = gaussian(rng, 15, 5);
    const Eigen::VectorXd y = gaussian(rng, 15, 1).col(0);
    for (double ridge : {1e-8, 0.1, 3.0}) {
        const Eigen::MatrixXd A = X.transpose() * X / 15.0 + ridge * Eigen::MatrixXd::Identity(5, 5);
        const Eigen::VectorXd oracle = A.ldlt().solve(X.transpose() * y / 15.0);
        CHECK((solve_least_squares(X, y, ridge).coefficients - oracle).norm() < 1e-10);
    }
    const Eigen::MatrixXd wide = gaussian(rng, 3, 6);
    CHECK(solve_least_squares(wide, y.head(3), 0.5).rank_deficient);
    CHECK_THROWS_AS(solve_least_squares(X, y, -1.0), ArgumentError);
    CHECK_THROWS_AS(solve_least_squares(X, y.head(4), 0.0), ShapeError);
}

TEST_CASE("multi right-hand-side solve equals column-wise solves") {
    cnc::Rng rng(4);
    const Eigen::MatrixXd X = gaussian(rng, 30, 6);
    const Eigen::MatrixXd Y = gaussian(rng, 30, 3);
    for (double ridge : {0.0, 0.2}) {
        const MultiLinearFit multi = solve_least_squares_multi(X, Y, ridge);
        for (int c = 0; c < 3; ++c) {
            const LinearFit single = solve_least_squares(X, Y.col(c), ridge);
            CHECK((multi.coefficients.col(c) - single.coefficients).norm() < 1e-12);
            CHECK(multi.residual_norms(c) == doctest::Approx(single.residual_norm));
        }
    }
}

TEST_CASE("truncated SVD against the full decomposition") {
    cnc::Rng rng(5);
    const Eigen::MatrixXd M = gaussian(rng, 6, 9);
    const TruncatedSvd t = truncated_svd(M, 3);
    Eigen::JacobiSVD<Eigen::MatrixXd> full(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (int j = 0; j < 3; ++j) {
        CHECK(t.S(j) == doctest::Approx(full.singularValues()(j)).epsilon(1e-12));
        // same direction up to sign
        CHECK(std::abs(t.U.col(j).dot(full.matrixU().col(j))) == doctest::Approx(1.0).epsilon(1e-10));
        Eigen::Index arg = 0;
        t.U.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(t.U(arg, j) > 0.0);
    }
    const Eigen::MatrixXd best3 = full.matrixU().leftCols(3) * full.singularValues().head(3).asDiagonal() *
                                  full.matrixV().leftCols(3).transpose();
    CHECK((t.reconstruct() - best3).norm() < 1e-10);
    CHECK((truncated_svd(M, 6).reconstruct() - M).norm() < 1e-10);
    CHECK_THROWS_AS(truncated_svd(M, 0), RankError);
    CHECK_THROWS_AS(truncated_svd(M, 7), RankError);
}

namespace {

// Exhaustive minimum of the k-means objective over all partitions into k nonempty groups.
double exhaustive_kmeans(const Eigen::MatrixXd& points, int k) {
    const int n = static_cast<int>(points.cols());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        if (std::find(counts.begin(), counts.end(), 0) == counts.end()) {
            Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(points.rows(), k);
            for (int i = 0; i < n; ++i) centers.col(labels[static_cast<std::size_t>(i)]) += points.col(i);
            for (int c = 0; c < k; ++c) centers.col(c) /= counts[static_cast<std::size_t>(c)];
            best = std::min(best, kmeans_objective(points, labels, centers));
        }
        int pos = 0;
        while (pos < n && ++labels[static_cast<std::size_t>(pos)] == k) labels[static_cast<std::size_t>(pos++)] = 0;
        if (pos == n) break;
    }
    return best;
}

}  // namespace

TEST_CASE("k-means never beats the exhaustive optimum and finds it on separated data") {
    cnc::Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd pts = gaussian(rng, 2, 7);
        const KMeansResult r = kmeans(pts, 3, {.seed = static_cast<std::uint64_t>(trial)});
        CHECK(r.objective >= exhaustive_kmeans(pts, 3) - 1e-12);
        CHECK(r.objective == doctest::Approx(kmeans_objective(pts, r.labels, r.centers)));
    }
    Eigen::MatrixXd blobs = 0.05 * gaussian(rng, 2, 9);
    for (int i = 0; i < 9; ++i) blobs(i % 3, i) += 10.0 * (i % 3 == 2 ? -1.0 : 1.0);
    const KMeansResult r = kmeans(blobs, 3);
    CHECK(r.objective == doctest::Approx(exhaustive_kmeans(blobs, 3)).epsilon(1e-12));
}

TEST_CASE("k-means is deterministic with a monotone objective trace") {
    cnc::Rng rng(7);
    const Eigen::MatrixXd pts = gaussian(rng, 3, 60);
    const KMeansResult a = kmeans(pts, 4, {.seed = 11});
    const KMeansResult b = kmeans(pts, 4, {.seed = 11, .restarts = 10, .max_iters = 300, .workers = 4});
    CHECK(a.labels == b.labels);
    CHECK(a.objective == b.objective);
    for (std::size_t i = 1; i < a.objective_trace.size(); ++i)
        CHECK(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-15);
    CHECK(a.objective <= a.seeding_objective + 1e-15);
    std::vector<int> counts(4, 0);
    for (int l : a.labels) ++counts[static_cast<std::size_t>(l)];
    for (int c : counts) CHECK(c > 0);
    CHECK_THROWS_AS(kmeans(pts, 0), ClusterCountError);
    CHECK_THROWS_AS(kmeans(pts, 61), ClusterCountError);
}

TEST_CASE("k-means with k equal to n and with duplicate points") {
    Eigen::MatrixXd pts(1, 4);
    pts << 0.0, 0.0, 0.0, 1.0;
    const KMeansResult r = kmeans(pts, 2);
    CHECK(r.objective == 0.0);
    const KMeansResult all = kmeans(pts, 4);
    std::vector<int> counts(4, 0);
    for (int l : all.labels) ++counts[static_cast<std::size_t>(l)];
    for (int c : counts) CHECK(c == 1);
}

TEST_CASE("empirical covariance, inverse square root and whitening") {
    cnc::Rng rng(8);
    const Eigen::MatrixXd S = gaussian(rng, 40, 3);
    Eigen::VectorXd w = gaussian(rng, 40, 1).col(0).cwiseAbs();
    Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(3, 3);
    for (int t = 0; t < 40; ++t) loop += w(t) * w(t) * S.row(t).transpose() * S.row(t);
    loop /= 40.0;
    CHECK((empirical_covariance(S, w) - loop).norm() < 1e-12);
    CHECK((empirical_covariance(S) - S.transpose() * S / 40.0).norm() < 1e-12);
    w(0) = -1.0;
    CHECK_THROWS_AS(empirical_covariance(S, w), WeightError);

    const Eigen::MatrixXd C = empirical_covariance(S);
    const Eigen::MatrixXd R = inverse_sqrt(C);
    CHECK((R * C * R - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
    CHECK((R - R.transpose()).norm() < 1e-14);
    CHECK_THROWS_AS(inverse_sqrt(Eigen::MatrixXd::Zero(2, 2)), SingularDesignError);

    const Eigen::MatrixXd Z = whiten_design(S);
    CHECK((Z.transpose() * Z / 40.0 - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
    CHECK_THROWS_AS(whiten_design(gaussian(rng, 2, 3)), SingularDesignError);
}
