#include "cnc/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cnc/errors.hpp"
#include "cnc/numeric.hpp"
#include "cnc/rng.hpp"

namespace cnc {

namespace {

Eigen::VectorXd normal_vector(Rng rng, Eigen::Index size) {
    Eigen::VectorXd out(size);
    for (Eigen::Index j = 0; j < size; ++j) out(j) = rng.normal();
    return out;
}

}  // namespace

// ---------------------------------------------------------------- clipped time series

void GenConfig::validate() const {
    if (n < 1 || k_true < 1 || d < 1 || T < 1 || period < 1)
        throw ArgumentError("n, k_true, d, T and period must all be positive");
    if (n % k_true != 0)
        throw ArgumentError("k_true=" + std::to_string(k_true) + " does not divide n=" + std::to_string(n));
    if (d > T) throw ArgumentError("lag d=" + std::to_string(d) + " exceeds T=" + std::to_string(T));
    if (noise_std < 0.0 || theta_std < 0.0) throw ArgumentError("standard deviations must be >= 0");
    if (!(p_norm >= 1.0)) throw ArgumentError("p_norm must be >= 1");
}

TrueTsParams draw_ts_params(const GenConfig& cfg) {
    cfg.validate();
    const Rng root(cfg.seed);
    TrueTsParams out;
    out.labels = random_balanced_assignment(static_cast<std::size_t>(cfg.n), cfg.k_true, root.split("labels").next_u64());

    out.centers.resize(cfg.d, cfg.k_true);
    out.phases.resize(cfg.k_true);
    for (int c = 0; c < cfg.k_true; ++c) {
        out.centers.col(c) = normal_vector(root.split("centers").split(static_cast<std::uint64_t>(c)), cfg.d);
        out.phases(c) = 2.0 * std::numbers::pi * root.split("phase").split(static_cast<std::uint64_t>(c)).uniform();
    }

    out.thetas.resize(cfg.d, cfg.n);
    out.gammas.assign(static_cast<std::size_t>(cfg.n), Eigen::MatrixXd::Zero(cfg.d, cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        const int c = out.labels.labels[static_cast<std::size_t>(i)];
        out.thetas.col(i) = out.centers.col(c) +
                            cfg.theta_std * normal_vector(root.split("theta").split(static_cast<std::uint64_t>(i)), cfg.d);
        const Rng gamma_rng = root.split("gamma").split(static_cast<std::uint64_t>(i));
        for (int l = 0; l < cfg.n; ++l)
            if (l != i && out.labels.labels[static_cast<std::size_t>(l)] == c)
                out.gammas[static_cast<std::size_t>(i)].col(l) = normal_vector(gamma_rng.split(static_cast<std::uint64_t>(l)), cfg.d);
        const double norm = coefficient_norm(out, static_cast<std::size_t>(i), cfg.p_norm);
        if (norm > 0.0) {
            out.thetas.col(i) /= norm;
            out.gammas[static_cast<std::size_t>(i)] /= norm;
        }
    }
    return out;
}

double coefficient_norm(const TrueTsParams& params, std::size_t i, double p) {
    const auto idx = static_cast<Eigen::Index>(i);
    double total = params.thetas.col(idx).array().abs().pow(p).sum();
    total += params.gammas[i].array().abs().pow(p).sum();
    return std::pow(total, 1.0 / p);
}

TimeSeriesDataset simulate_ts(const GenConfig& cfg, const TrueTsParams& params) {
    cfg.validate();
    const int n = cfg.n, d = cfg.d, T = cfg.T;
    if (params.thetas.rows() != d || params.thetas.cols() != n) throw ShapeError("parameter shapes do not match config");
    Eigen::MatrixXd x(n, T);
    for (int i = 0; i < n; ++i) {
        const double phase = params.phases(params.labels.labels[static_cast<std::size_t>(i)]);
        for (int t = 1; t <= d; ++t) x(i, t - 1) = std::sin(2.0 * std::numbers::pi * t / cfg.period + phase);
    }

    // Cross-series terms only involve same-cluster partners.
    std::vector<std::vector<int>> partners(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l)
            if (l != i && params.labels.labels[static_cast<std::size_t>(l)] == params.labels.labels[static_cast<std::size_t>(i)])
                partners[static_cast<std::size_t>(i)].push_back(l);

    const Rng noise_root = Rng(cfg.seed).split("noise");
    std::vector<Rng> noise;
    noise.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) noise.push_back(noise_root.split(static_cast<std::uint64_t>(i)));

    for (int t = d + 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += params.thetas(j, i) * x(i, t - 1 - (j + 1));
            const auto& g = params.gammas[static_cast<std::size_t>(i)];
            for (int l : partners[static_cast<std::size_t>(i)])
                for (int j = 0; j < d; ++j) acc += g(j, l) * x(l, t - 1 - (j + 1));
            acc += cfg.noise_std * noise[static_cast<std::size_t>(i)].normal();
            x(i, t - 1) = std::clamp(acc, -1.0, 1.0);
        }
    }
    return TimeSeriesDataset::from_matrix(std::move(x), "synthetic");
}

SyntheticData gen_synthetic_ts(const GenConfig& cfg) {
    SyntheticData out;
    out.truth = draw_ts_params(cfg);
    out.data = simulate_ts(cfg, out.truth);
    return out;
}

nlohmann::json truth_to_json(const GenConfig& cfg, const TrueTsParams& params) {
    nlohmann::json j;
    j["config"] = {{"n", cfg.n},         {"k_true", cfg.k_true},       {"d", cfg.d},
                   {"T", cfg.T},         {"period", cfg.period},       {"noise_std", cfg.noise_std},
                   {"theta_std", cfg.theta_std}, {"p_norm", cfg.p_norm}, {"seed", cfg.seed}};
    j["labels"] = params.labels.labels;
    auto column = [](const Eigen::MatrixXd& m, Eigen::Index c) {
        return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
    };
    j["thetas"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < params.thetas.cols(); ++i) j["thetas"].push_back(column(params.thetas, i));
    j["gammas"] = nlohmann::json::array();
    for (std::size_t i = 0; i < params.gammas.size(); ++i)
        for (Eigen::Index l = 0; l < params.gammas[i].cols(); ++l)
            if (static_cast<Eigen::Index>(i) != l &&
                params.labels.labels[i] == params.labels.labels[static_cast<std::size_t>(l)])
                j["gammas"].push_back({{"i", i}, {"j", l}, {"coef", column(params.gammas[i], l)}});
    j["phases"] = std::vector<double>(params.phases.data(), params.phases.data() + params.phases.size());
    return j;
}

// ---------------------------------------------------------------- mixed linear regression

void MlrConfig::validate() const {
    if (n < 1 || k < 1 || T < 1 || d < 1) throw ArgumentError("n, k, T and d must be positive");
    if (n % k != 0) throw ArgumentError("k=" + std::to_string(k) + " does not divide n=" + std::to_string(n));
    if (nu < 0.0 || sigma < 0.0 || tau < 0.0 || separation < 0.0)
        throw ArgumentError("noise scales and separation must be >= 0");
    if (isotropic && T < m() * d)
        throw SingularDesignError("isotropic designs need T >= m*d (" + std::to_string(T) + " < " +
                                  std::to_string(m() * d) + ")");
}

Eigen::MatrixXd separated_centers(int k, int d, double separation) {
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(d, k);
    if (k <= d) {
        for (int c = 0; c < k; ++c) centers(c, c) = separation / std::numbers::sqrt2;
        return centers;
    }
    int side = 1;
    while (std::pow(static_cast<double>(side), d) < k) ++side;
    for (int c = 0; c < k; ++c) {
        int code = c;
        for (int j = 0; j < d; ++j) {
            centers(j, c) = separation * (code % side);
            code /= side;
        }
    }
    return centers;
}

Eigen::MatrixXd mlr_observations(const MlrInstance& mlr) {
    const int n = mlr.n();
    Eigen::MatrixXd y(n, mlr.T());
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd yi = mlr.designs[static_cast<std::size_t>(i)] * mlr.thetas.col(i);
        for (int j = 0; j < n; ++j)
            if (j != i && mlr.labels.labels[static_cast<std::size_t>(j)] == mlr.labels.labels[static_cast<std::size_t>(i)])
                yi += mlr.designs[static_cast<std::size_t>(j)] * mlr.gammas[static_cast<std::size_t>(i)].col(j);
        y.row(i) = (yi + mlr.noise.row(i).transpose()).transpose();
    }
    return y;
}

namespace {

void draw_mlr_randomness(MlrInstance& mlr, const Rng& root) {
    const MlrConfig& cfg = mlr.config;
    mlr.thetas.resize(cfg.d, cfg.n);
    mlr.gammas.assign(static_cast<std::size_t>(cfg.n), Eigen::MatrixXd::Zero(cfg.d, cfg.n));
    mlr.noise.resize(cfg.n, cfg.T);
    for (int i = 0; i < cfg.n; ++i) {
        const int c = mlr.labels.labels[static_cast<std::size_t>(i)];
        mlr.thetas.col(i) = mlr.centers.col(c) + cfg.nu * normal_vector(root.split("theta").split(static_cast<std::uint64_t>(i)), cfg.d);
        const Rng gamma_rng = root.split("gamma").split(static_cast<std::uint64_t>(i));
        for (int j = 0; j < cfg.n; ++j)
            if (j != i && mlr.labels.labels[static_cast<std::size_t>(j)] == c)
                mlr.gammas[static_cast<std::size_t>(i)].col(j) = cfg.tau * normal_vector(gamma_rng.split(static_cast<std::uint64_t>(j)), cfg.d);
        mlr.noise.row(i) = cfg.sigma * normal_vector(root.split("noise").split(static_cast<std::uint64_t>(i)), cfg.T).transpose();
    }
    mlr.y = mlr_observations(mlr);
}

}  // namespace

MlrInstance gen_mlr_instance(const MlrConfig& cfg) {
    cfg.validate();
    const Rng root(cfg.seed);
    MlrInstance mlr;
    mlr.config = cfg;
    const int m = cfg.m();
    mlr.labels.k = cfg.k;
    mlr.labels.labels.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) mlr.labels.labels[static_cast<std::size_t>(i)] = i / m;
    mlr.centers = separated_centers(cfg.k, cfg.d, cfg.separation);

    mlr.designs.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        Rng rng = root.split("designs").split(static_cast<std::uint64_t>(i));
        Eigen::MatrixXd x(cfg.T, cfg.d);
        for (int t = 0; t < cfg.T; ++t)
            for (int j = 0; j < cfg.d; ++j) x(t, j) = rng.normal();
        mlr.designs[static_cast<std::size_t>(i)] = std::move(x);
    }
    if (cfg.isotropic) {
        for (int c = 0; c < cfg.k; ++c) {
            Eigen::MatrixXd stacked(cfg.T, m * cfg.d);
            for (int u = 0; u < m; ++u) stacked.middleCols(u * cfg.d, cfg.d) = mlr.designs[static_cast<std::size_t>(c * m + u)];
            stacked = whiten_design(stacked);
            for (int u = 0; u < m; ++u) mlr.designs[static_cast<std::size_t>(c * m + u)] = stacked.middleCols(u * cfg.d, cfg.d);
        }
    }
    draw_mlr_randomness(mlr, root.split("params"));
    return mlr;
}

MlrInstance redraw_mlr(const MlrInstance& base, std::uint64_t seed) {
    MlrInstance mlr;
    mlr.config = base.config;
    mlr.designs = base.designs;
    mlr.labels = base.labels;
    mlr.centers = base.centers;
    draw_mlr_randomness(mlr, Rng(seed).split("params"));
    return mlr;
}

}  // namespace cnc
