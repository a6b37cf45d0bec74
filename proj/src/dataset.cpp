#include "cnc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "cnc/errors.hpp"
#include "cnc/rng.hpp"

namespace cnc {

void TimeSeriesDataset::validate() const {
    if (values.rows() < 1 || values.cols() < 1) throw FormatError("dataset must have at least one series and one time point");
    if (series_ids.size() != num_series())
        throw FormatError("series id count " + std::to_string(series_ids.size()) + " does not match " +
                          std::to_string(num_series()) + " series");
    std::set<std::string> seen;
    for (const auto& id : series_ids)
        if (!seen.insert(id).second) throw FormatError("duplicate series id '" + id + "'");
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index t = 0; t < values.cols(); ++t)
            if (!std::isfinite(values(i, t)))
                throw MissingDataError("non-finite value in series " + series_ids[i] + " at t=" + std::to_string(t + 1));
}

TimeSeriesDataset TimeSeriesDataset::from_matrix(Eigen::MatrixXd values, std::string granularity) {
    TimeSeriesDataset ds;
    ds.series_ids.reserve(values.rows());
    for (Eigen::Index i = 0; i < values.rows(); ++i) ds.series_ids.push_back("s" + std::to_string(i));
    ds.values = std::move(values);
    ds.granularity = std::move(granularity);
    ds.validate();
    return ds;
}

TimeSeriesDataset TimeSeriesDataset::prefix(int t_end) const {
    if (t_end < 1 || t_end > length()) throw ArgumentError("prefix length " + std::to_string(t_end) + " out of range");
    TimeSeriesDataset out;
    out.values = values.leftCols(t_end);
    out.series_ids = series_ids;
    out.granularity = granularity;
    return out;
}

TimeSeriesDataset TimeSeriesDataset::select(const std::vector<std::size_t>& rows) const {
    TimeSeriesDataset out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    out.granularity = granularity;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= num_series()) throw ArgumentError("series index out of range");
        out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows[r]));
        out.series_ids.push_back(series_ids[rows[r]]);
    }
    return out;
}

// ---------------------------------------------------------------- LagSpec

LagSpec::LagSpec(std::vector<int> lags) : lags_(std::move(lags)) {
    if (lags_.empty()) throw ArgumentError("lag spec must contain at least one lag");
    if (lags_.front() < 1) throw ArgumentError("lag offsets must be >= 1");
    for (std::size_t j = 1; j < lags_.size(); ++j)
        if (lags_[j] <= lags_[j - 1]) throw ArgumentError("lag offsets must be strictly increasing");
}

LagSpec LagSpec::contiguous(int d) {
    if (d < 1) throw ArgumentError("lag count must be >= 1");
    std::vector<int> lags(static_cast<std::size_t>(d));
    std::iota(lags.begin(), lags.end(), 1);
    return LagSpec(std::move(lags));
}

LagSpec LagSpec::hourly() {
    std::vector<int> lags;
    for (int l = 1; l < 25; ++l) lags.push_back(l);
    for (int l = 7 * 24; l < 8 * 24; ++l) lags.push_back(l);
    for (int l = 14 * 24; l < 15 * 24; ++l) lags.push_back(l);
    return LagSpec(std::move(lags));
}

LagSpec LagSpec::five_minute() {
    std::vector<int> lags;
    for (int l = 1; l < 12; ++l) lags.push_back(l);
    for (int l = 12; l < 15; ++l) lags.push_back(l);
    for (int l = 24; l < 27; ++l) lags.push_back(l);
    return LagSpec(std::move(lags));
}

LagSpec LagSpec::parse(const std::string& text) {
    if (text == "hourly") return hourly();
    if (text == "fivemin") return five_minute();
    std::vector<int> lags;
    std::stringstream ss(text);
    std::string item;
    auto to_int = [&](std::string_view part) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
            throw ArgumentError("invalid lag '" + std::string(part) + "' in '" + text + "'");
        return v;
    };
    while (std::getline(ss, item, ',')) {
        // "a:b" expands to a, a+1, ..., b
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            lags.push_back(to_int(item));
            continue;
        }
        const int lo = to_int(std::string_view(item).substr(0, colon));
        const int hi = to_int(std::string_view(item).substr(colon + 1));
        if (hi < lo) throw ArgumentError("empty lag range '" + item + "'");
        for (int v = lo; v <= hi; ++v) lags.push_back(v);
    }
    return LagSpec(std::move(lags));
}

std::string LagSpec::to_string() const {
    std::string out;
    for (std::size_t j = 0; j < lags_.size(); ++j) {
        if (j) out += ',';
        out += std::to_string(lags_[j]);
    }
    return out;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool is_nan_token(const std::string& s) {
    std::string lower;
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "nan" || lower == "-nan" || lower == "+nan" || lower.empty() || lower == "na";
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

TimeSeriesDataset parse_csv(const std::string& text, const CsvOptions& options) {
    std::vector<std::vector<std::string>> rows;
    {
        std::stringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            rows.push_back(split_row(line));
        }
    }
    if (rows.empty()) throw FormatError("CSV is empty");

    const std::size_t width = rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != width)
            throw FormatError("ragged CSV: row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                              " cells, expected " + std::to_string(width));

    auto numeric_or_nan = [](const std::string& s) { return parse_number(s).has_value() || is_nan_token(s); };

    bool has_id = options.id_column == IdColumn::Yes;
    if (options.id_column == IdColumn::Auto) {
        // Ids are present when the first cell of every non-header row is non-numeric.
        const bool header_like = std::none_of(rows.front().begin() + 1, rows.front().end(),
                                              [](const std::string& c) { return parse_number(c).has_value(); });
        std::size_t start = header_like && rows.front().size() > 1 ? 1 : 0;
        has_id = start < rows.size();
        for (std::size_t r = start; r < rows.size(); ++r)
            if (numeric_or_nan(rows[r][0])) has_id = false;
    }
    const std::size_t first_col = has_id ? 1 : 0;
    if (width <= first_col) throw FormatError("CSV has no value columns");

    // A header row has no numeric value cells; a row mixing numbers and text is data with a bad cell.
    bool has_header = true;
    for (std::size_t c = first_col; c < width; ++c)
        if (parse_number(rows.front()[c])) has_header = false;
    const std::size_t first_row = has_header ? 1 : 0;
    if (rows.size() <= first_row) throw FormatError("CSV has a header but no data rows");

    const auto data_rows = static_cast<Eigen::Index>(rows.size() - first_row);
    const auto data_cols = static_cast<Eigen::Index>(width - first_col);
    Eigen::MatrixXd table(data_rows, data_cols);
    for (Eigen::Index r = 0; r < data_rows; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r) + first_row];
        for (Eigen::Index c = 0; c < data_cols; ++c) {
            const std::string& cell = row[static_cast<std::size_t>(c) + first_col];
            if (auto v = parse_number(cell)) {
                if (std::isnan(*v))
                    throw MissingDataError("missing value at row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
                table(r, c) = *v;
            } else if (is_nan_token(cell)) {
                throw MissingDataError("missing value at row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
            } else {
                throw ParseError("non-numeric cell '" + cell + "' at row " + std::to_string(r + 1) + ", column " +
                                 std::to_string(c + 1));
            }
        }
    }

    TimeSeriesDataset ds;
    ds.granularity = options.granularity;
    if (options.layout == CsvLayout::RowMajor) {
        ds.values = std::move(table);
        for (Eigen::Index r = 0; r < data_rows; ++r) {
            if (has_id)
                ds.series_ids.push_back(rows[static_cast<std::size_t>(r) + first_row][0]);
            else
                ds.series_ids.push_back("s" + std::to_string(r));
        }
    } else {
        ds.values = table.transpose();
        for (Eigen::Index c = 0; c < data_cols; ++c) {
            if (has_header)
                ds.series_ids.push_back(rows.front()[static_cast<std::size_t>(c) + first_col]);
            else
                ds.series_ids.push_back("s" + std::to_string(c));
        }
    }
    ds.validate();
    return ds;
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), options);
}

std::string format_csv(const TimeSeriesDataset& ds) {
    std::ostringstream out;
    out.precision(17);
    out << "series_id";
    for (int t = 1; t <= ds.length(); ++t) out << ",t" << t;
    out << '\n';
    for (std::size_t i = 0; i < ds.num_series(); ++i) {
        out << ds.series_ids[i];
        for (int t = 1; t <= ds.length(); ++t) out << ',' << ds.at(i, t);
        out << '\n';
    }
    return out.str();
}

void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << format_csv(ds);
}

// ---------------------------------------------------------------- sampling

BlockPlan make_blocks(int T, int block_size, const LagSpec& lags, Placement placement, std::uint64_t seed) {
    if (block_size < 1) throw ArgumentError("block size must be >= 1");
    if (block_size > T)
        throw EmptyPlanError("block size " + std::to_string(block_size) + " exceeds series length " + std::to_string(T));
    const int blocks = T / block_size;
    BlockPlan plan;
    plan.block_size = block_size;
    Rng rng(seed);
    for (int j = 1; j <= blocks; ++j) {
        int s = j * block_size;
        if (placement == Placement::Random) {
            // Uniform within ((j-1)b, jb] restricted to points with a full lag window.
            const int lo = std::max((j - 1) * block_size + 1, lags.max_lag() + 1);
            if (lo <= s) s = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(s - lo + 1)));
        }
        if (s - lags.max_lag() < 1) {
            ++plan.dropped_blocks;
            continue;
        }
        plan.sample_points.push_back(s);
    }
    if (plan.sample_points.empty())
        throw EmptyPlanError("no block has a full lag window (max lag " + std::to_string(lags.max_lag()) + ")");
    return plan;
}

std::vector<int> sample_times(const SamplePlan& plan, int T, const LagSpec& lags) {
    if (const auto* blocks = std::get_if<BlockPlan>(&plan)) {
        for (int s : blocks->sample_points)
            if (s < 1 || s > T || s - lags.max_lag() < 1)
                throw ArgumentError("sample point " + std::to_string(s) + " invalid for T=" + std::to_string(T) +
                                    " and max lag " + std::to_string(lags.max_lag()));
        return blocks->sample_points;
    }
    std::vector<int> times;
    for (int t = lags.max_lag() + 1; t <= T; ++t) times.push_back(t);
    return times;
}

namespace {

void fill_windows(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members, const LagSpec& lags,
                  const std::vector<int>& times, Eigen::MatrixXd& design) {
    const int d = lags.d();
    design.resize(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(members.size()) * d);
    for (std::size_t r = 0; r < times.size(); ++r) {
        const int t = times[r];
        for (std::size_t u = 0; u < members.size(); ++u) {
            // Most distant lag first: column u*d + (d-1-j) holds lag lags[j].
            for (int j = 0; j < d; ++j)
                design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(u) * d + (d - 1 - j)) =
                    ds.at(members[u], t - lags.lags()[static_cast<std::size_t>(j)]);
        }
    }
}

void check_members(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members) {
    if (members.empty()) throw ArgumentError("cluster must have at least one member");
    std::set<std::size_t> seen;
    for (auto m : members) {
        if (m >= ds.num_series()) throw ArgumentError("series index " + std::to_string(m) + " out of range");
        if (!seen.insert(m).second) throw DuplicateSeriesError("series " + std::to_string(m) + " listed twice");
    }
}

}  // namespace

RegressionSamples extract_ar_samples(const TimeSeriesDataset& ds, std::size_t series, const LagSpec& lags,
                                     const SamplePlan& plan) {
    return extract_var_samples(ds, {series}, lags, plan, 0);
}

RegressionSamples extract_var_samples(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                      const LagSpec& lags, const SamplePlan& plan, std::size_t target_position) {
    check_members(ds, members);
    if (target_position >= members.size()) throw ArgumentError("target position out of range");
    RegressionSamples out;
    out.sample_times = sample_times(plan, ds.length(), lags);
    out.members = members;
    out.target_series = members[target_position];
    fill_windows(ds, members, lags, out.sample_times, out.design);
    out.targets.resize(static_cast<Eigen::Index>(out.sample_times.size()));
    for (std::size_t r = 0; r < out.sample_times.size(); ++r)
        out.targets(static_cast<Eigen::Index>(r)) = ds.at(out.target_series, out.sample_times[r]);
    return out;
}

ClusterSamples extract_cluster_samples(const TimeSeriesDataset& ds, const std::vector<std::size_t>& members,
                                       const LagSpec& lags, const SamplePlan& plan) {
    check_members(ds, members);
    ClusterSamples out;
    out.sample_times = sample_times(plan, ds.length(), lags);
    out.members = members;
    fill_windows(ds, members, lags, out.sample_times, out.design);
    out.targets.resize(static_cast<Eigen::Index>(out.sample_times.size()), static_cast<Eigen::Index>(members.size()));
    for (std::size_t r = 0; r < out.sample_times.size(); ++r)
        for (std::size_t u = 0; u < members.size(); ++u)
            out.targets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(u)) = ds.at(members[u], out.sample_times[r]);
    return out;
}

}  // namespace cnc
