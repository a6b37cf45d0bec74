#pragma once

// End-to-end cluster-and-conquer: per-series AR, clustering of the AR
// parameters, per-cluster VAR, recursive forecasting and model persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cnc/clustering.hpp"
#include "cnc/dataset.hpp"
#include "cnc/global_var.hpp"
#include "cnc/local_ar.hpp"

namespace cnc {

enum class ClusterMethod { Spectral, KnnGraph, Random, None };
enum class SamplingMode { Sliding, Blocked };

ClusterMethod parse_cluster_method(const std::string& text);
std::string to_string(ClusterMethod method);

struct PipelineConfig {
    LagSpec lags = LagSpec::contiguous(1);
    std::optional<int> k;  // empty: floor(n / 10), at least 1
    ClusterMethod method = ClusterMethod::KnnGraph;
    int knn_neighbors = 11;
    bool balance = true;
    bool normalize = true;  // cluster on unit-norm AR parameters
    double ridge = 1e-8;
    SamplingMode sampling = SamplingMode::Sliding;
    int block_size = 0;  // 0: max lag + 1
    Placement placement = Placement::Last;
    std::uint64_t seed = 0;
    std::size_t workers = 0;

    int resolve_k(std::size_t n) const;
    SamplePlan plan(int T) const;
    /// Canonical one-line description; hashed into the model fingerprint.
    std::string describe() const;
};

struct PipelineModel {
    LagSpec lags;
    ClusterAssignment assignment;
    std::vector<ARParams> ar_params;
    std::vector<ClusterVARModel> var_models;
    std::vector<std::string> series_ids;
    std::uint64_t fingerprint = 0;
    std::string config_text;

    std::size_t num_series() const { return series_ids.size(); }
    /// Throws FormatError unless every series belongs to exactly one VAR model
    /// and the membership agrees with the assignment.
    void validate() const;
};

struct FitTimings {
    double local_seconds = 0.0;
    double cluster_seconds = 0.0;
    double global_seconds = 0.0;  // stage-3 VAR fits only
    double total_seconds = 0.0;
};

PipelineModel fit_pipeline(const TimeSeriesDataset& ds, const PipelineConfig& config, FitTimings* timings = nullptr);

/// Stage 2 alone, on already fitted AR parameters.
ClusterAssignment cluster_ar_params(const std::vector<ARParams>& params, const PipelineConfig& config, int k);

/// Stage 3 for a given assignment, reusing stage-1 parameters.
PipelineModel fit_with_assignment(const TimeSeriesDataset& ds, const PipelineConfig& config,
                                  const ClusterAssignment& assignment, std::vector<ARParams> ar_params,
                                  FitTimings* timings = nullptr);

/// Recursive multi-step forecasts (n x horizon). Members of a cluster are
/// advanced jointly; a cluster only reads its own members' histories.
Eigen::MatrixXd forecast(const PipelineModel& model, const TimeSeriesDataset& history, int horizon,
                         std::size_t workers = 0);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const PipelineModel& model, const std::filesystem::path& path);
PipelineModel load_model(const std::filesystem::path& path);
std::string serialize_model(const PipelineModel& model);
PipelineModel deserialize_model(const std::string& bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace cnc
