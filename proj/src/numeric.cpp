#include "cnc/numeric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cnc/errors.hpp"
#include "cnc/parallel.hpp"
#include "cnc/rng.hpp"

namespace cnc {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

MultiLinearFit solve_least_squares_multi(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double ridge) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (n < 1 || p < 1) throw ShapeError("design must be non-empty, got " + shape(design));
    if (targets.rows() != n)
        throw ShapeError("design " + shape(design) + " does not match targets " + shape(targets));
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ArgumentError("ridge must be finite and >= 0");

    MultiLinearFit fit;
    if (ridge > 0.0) {
        Eigen::MatrixXd augmented(n + p, p);
        augmented.topRows(n) = design;
        augmented.bottomRows(p) = std::sqrt(static_cast<double>(n) * ridge) * Eigen::MatrixXd::Identity(p, p);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + p, targets.cols());
        rhs.topRows(n) = targets;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(augmented);
        fit.coefficients = qr.solve(rhs);
        fit.rank_deficient = n < p;
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() == p) {
            fit.coefficients = qr.solve(targets);
        } else {
            fit.rank_deficient = true;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
            fit.coefficients = cod.solve(targets);
        }
    }
    fit.residual_norms = (design * fit.coefficients - targets).colwise().norm().transpose();
    return fit;
}

LinearFit solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double ridge) {
    if (targets.size() != design.rows())
        throw ShapeError("design " + shape(design) + " does not match " + std::to_string(targets.size()) + " targets");
    MultiLinearFit multi = solve_least_squares_multi(design, targets, ridge);
    return {multi.coefficients.col(0), multi.residual_norms(0), multi.rank_deficient};
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& M, int k) {
    const auto max_rank = std::min(M.rows(), M.cols());
    if (k < 1 || k > max_rank)
        throw RankError("rank " + std::to_string(k) + " outside [1, " + std::to_string(max_rank) + "] for " + shape(M));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TruncatedSvd out{svd.matrixU().leftCols(k), svd.singularValues().head(k), svd.matrixV().leftCols(k)};
    for (int j = 0; j < k; ++j) {
        Eigen::Index arg = 0;
        out.U.col(j).cwiseAbs().maxCoeff(&arg);
        if (out.U(arg, j) < 0.0) {
            out.U.col(j) *= -1.0;
            out.V.col(j) *= -1.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------- k-means

double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& labels, const Eigen::MatrixXd& centers) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.cols(); ++i) total += (points.col(i) - centers.col(labels[i])).squaredNorm();
    return total / (2.0 * static_cast<double>(points.cols()));
}

namespace {

struct Run {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double objective = 0.0;
    double seeding_objective = 0.0;
    std::vector<double> trace;
    int iterations = 0;
};

// Nearest center, ties to the lowest index.
std::vector<int> assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers) {
    std::vector<int> labels(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index c = 0; c < centers.cols(); ++c) {
            const double dist = (points.col(i) - centers.col(c)).squaredNorm();
            if (dist < best) {
                best = dist;
                arg = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = arg;
    }
    return labels;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd centers(points.rows(), k);
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    centers.col(0) = points.col(first);
    chosen[static_cast<std::size_t>(first)] = true;
    Eigen::VectorXd dist2(n);
    for (Eigen::Index i = 0; i < n; ++i) dist2(i) = (points.col(i) - centers.col(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2(i);
                if (acc > target && dist2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i)
                    if (dist2(i) > 0.0) {
                        pick = i;
                        break;
                    }
            }
        } else {
            // Every point coincides with a center already; take the first unused one.
            for (Eigen::Index i = 0; i < n; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
        }
        chosen[static_cast<std::size_t>(pick)] = true;
        centers.col(c) = points.col(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            dist2(i) = std::min(dist2(i), (points.col(i) - centers.col(c)).squaredNorm());
    }
    return centers;
}

// Cluster means; an empty cluster takes the point farthest from its current center.
Eigen::MatrixXd update_centers(const Eigen::MatrixXd& points, std::vector<int>& labels, const Eigen::MatrixXd& previous) {
    const Eigen::Index k = previous.cols();
    for (;;) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            sums.col(labels[i]) += points.col(i);
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        Eigen::Index empty = -1;
        for (Eigen::Index c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] == 0) {
                empty = c;
                break;
            }
        if (empty < 0) {
            for (Eigen::Index c = 0; c < k; ++c) sums.col(c) /= counts[static_cast<std::size_t>(c)];
            return sums;
        }
        Eigen::MatrixXd current = previous;
        for (Eigen::Index c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0) current.col(c) = sums.col(c) / counts[static_cast<std::size_t>(c)];
        double worst = -1.0;
        Eigen::Index arg = -1;
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
            const double dist = (points.col(i) - current.col(labels[i])).squaredNorm();
            if (dist > worst) {
                worst = dist;
                arg = i;
            }
        }
        labels[static_cast<std::size_t>(arg)] = static_cast<int>(empty);
    }
}

Run lloyd(const Eigen::MatrixXd& points, int k, int max_iters, Rng rng) {
    Run run;
    run.centers = seed_plus_plus(points, k, rng);
    run.labels = assign(points, run.centers);
    run.seeding_objective = kmeans_objective(points, run.labels, run.centers);
    run.trace.push_back(run.seeding_objective);
    for (int it = 0; it < max_iters; ++it) {
        run.centers = update_centers(points, run.labels, run.centers);
        std::vector<int> next = assign(points, run.centers);
        run.trace.push_back(kmeans_objective(points, next, run.centers));
        ++run.iterations;
        if (next == run.labels) break;
        run.labels = std::move(next);
    }
    run.centers = update_centers(points, run.labels, run.centers);
    run.objective = kmeans_objective(points, run.labels, run.centers);
    if (run.objective < run.trace.back()) run.trace.push_back(run.objective);
    return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options) {
    if (k < 1 || k > points.cols())
        throw ClusterCountError("cannot form " + std::to_string(k) + " clusters from " + std::to_string(points.cols()) +
                                " points");
    if (options.restarts < 1) throw ArgumentError("k-means needs at least one restart");
    const Rng root(options.seed);
    auto runs = parallel_map<Run>(static_cast<std::size_t>(options.restarts), options.workers, [&](std::size_t r) {
        return lloyd(points, k, options.max_iters, root.split(static_cast<std::uint64_t>(r)));
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].objective < runs[best].objective) best = r;
    Run& run = runs[best];
    return {std::move(run.labels), std::move(run.centers), run.objective, run.seeding_objective,
            std::move(run.trace), run.iterations, static_cast<int>(best)};
}

// ---------------------------------------------------------------- covariance

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples, const std::optional<Eigen::VectorXd>& weights) {
    if (samples.rows() < 1) throw ShapeError("covariance needs at least one sample");
    if (!weights) return samples.transpose() * samples / static_cast<double>(samples.rows());
    if (weights->size() != samples.rows())
        throw ShapeError(std::to_string(weights->size()) + " weights for " + std::to_string(samples.rows()) + " samples");
    if ((weights->array() < 0.0).any()) throw WeightError("weights must be nonnegative");
    const Eigen::VectorXd w2 = weights->array().square();
    return samples.transpose() * w2.asDiagonal() * samples / static_cast<double>(samples.rows());
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& spd) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spd);
    if (eig.info() != Eigen::Success) throw SingularDesignError("eigendecomposition failed");
    const Eigen::VectorXd values = eig.eigenvalues();
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    if (values.minCoeff() <= 1e-12 * scale)
        throw SingularDesignError("matrix is singular (smallest eigenvalue " + std::to_string(values.minCoeff()) + ")");
    return eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd whiten_design(const Eigen::MatrixXd& design) {
    if (design.rows() < design.cols())
        throw SingularDesignError("cannot whiten " + shape(design) + ": fewer samples than columns");
    return design * inverse_sqrt(empirical_covariance(design));
}

}  // namespace cnc
