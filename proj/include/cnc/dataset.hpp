#pragma once

// Multivariate time-series panels, CSV ingestion and regression-sample
// extraction.
//
// Time is 1-indexed in every public quantity (sample times, block sample
// points, lag offsets); storage in `values` is 0-indexed, so time t lives in
// column t - 1.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace cnc {

struct TimeSeriesDataset {
    Eigen::MatrixXd values;  // n x T
    std::vector<std::string> series_ids;
    std::string granularity;

    std::size_t num_series() const { return static_cast<std::size_t>(values.rows()); }
    int length() const { return static_cast<int>(values.cols()); }

    /// Value of series i at 1-indexed time t.
    double at(std::size_t i, int t) const { return values(static_cast<Eigen::Index>(i), t - 1); }

    /// Checks every invariant; throws FormatError / MissingDataError.
    void validate() const;

    /// Builds a dataset with ids "s0", "s1", ... and validates it.
    static TimeSeriesDataset from_matrix(Eigen::MatrixXd values, std::string granularity = {});

    /// First `t_end` time points of every series.
    TimeSeriesDataset prefix(int t_end) const;

    /// Rows `rows` in the given order.
    TimeSeriesDataset select(const std::vector<std::size_t>& rows) const;
};

/// Strictly increasing positive lag offsets.
class LagSpec {
public:
    LagSpec() = default;
    explicit LagSpec(std::vector<int> lags);

    /// Lags 1..d.
    static LagSpec contiguous(int d);
    /// Last day, same day one week back, same day two weeks back (hourly data).
    static LagSpec hourly();
    /// Last hour, matching quarter hour one and two hours back (5-minute data).
    static LagSpec five_minute();
    /// "hourly", "fivemin", or a comma list of lags and a:b ranges ("1:24,168").
    static LagSpec parse(const std::string& text);

    const std::vector<int>& lags() const { return lags_; }
    int d() const { return static_cast<int>(lags_.size()); }
    int max_lag() const { return lags_.empty() ? 0 : lags_.back(); }
    std::string to_string() const;

    friend bool operator==(const LagSpec&, const LagSpec&) = default;

private:
    std::vector<int> lags_;
};

enum class Placement { Last, Random };

struct BlockPlan {
    int block_size = 0;
    std::vector<int> sample_points;  // 1-indexed, one per surviving block
    int dropped_blocks = 0;          // blocks whose sample point lacked a full lag window

    std::size_t num_blocks() const { return sample_points.size(); }
};

/// Every time point with a full lag window is a sample.
struct Sliding {};

using SamplePlan = std::variant<Sliding, BlockPlan>;

struct RegressionSamples {
    Eigen::MatrixXd design;  // N x p, columns ascend in time within each member block
    Eigen::VectorXd targets;
    std::vector<int> sample_times;      // 1-indexed target times
    std::vector<std::size_t> members;   // series whose windows form the design, in column order
    std::size_t target_series = 0;
};

/// Shared cluster design with one target column per member.
struct ClusterSamples {
    Eigen::MatrixXd design;   // N x (m * d)
    Eigen::MatrixXd targets;  // N x m, column u = future of members[u]
    std::vector<int> sample_times;
    std::vector<std::size_t> members;
};

enum class CsvLayout { RowMajor, ColumnMajor };
enum class IdColumn { Auto, Yes, No };

struct CsvOptions {
    CsvLayout layout = CsvLayout::RowMajor;
    IdColumn id_column = IdColumn::No;
    std::string granularity;
};

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
TimeSeriesDataset parse_csv(const std::string& text, const CsvOptions& options = {});

/// Row-major CSV with a header row and an id column; doubles are written with
/// 17 significant digits so that reloading is bit-exact.
void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path);
std::string format_csv(const TimeSeriesDataset& ds);

/// Splits [1, T] into floor(T/b) blocks and picks one sample point per block.
BlockPlan make_blocks(int T, int block_size, const LagSpec& lags, Placement placement = Placement::Last,
                      std::uint64_t seed = 0);

/// Default block length when blocked sampling is requested without one.
inline int default_block_size(const LagSpec& lags) { return lags.max_lag() + 1; }

/// 1-indexed target times used by a plan on a series of length T.
std::vector<int> sample_times(const SamplePlan& plan, int T, const LagSpec& lags);

RegressionSamples extract_ar_samples(const TimeSeriesDataset& ds, std::size_t series, const LagSpec& lags,
                                     const SamplePlan& plan);

/// Design rows concatenate the lag windows of `members` in list order; the
/// target is the future of `members[target_position]`.
RegressionSamples extract_var_samples(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                      const LagSpec& lags, const SamplePlan& plan,
                                      std::size_t target_position = 0);

ClusterSamples extract_cluster_samples(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                       const LagSpec& lags, const SamplePlan& plan);

}  // namespace cnc
