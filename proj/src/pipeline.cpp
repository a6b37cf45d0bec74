#include "cnc/pipeline.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "cnc/errors.hpp"
#include "cnc/parallel.hpp"
#include "cnc/rng.hpp"

namespace cnc {

ClusterMethod parse_cluster_method(const std::string& text) {
    if (text == "spectral") return ClusterMethod::Spectral;
    if (text == "knn-graph") return ClusterMethod::KnnGraph;
    if (text == "random") return ClusterMethod::Random;
    if (text == "none") return ClusterMethod::None;
    throw ArgumentError("unknown clustering method '" + text + "'");
}

std::string to_string(ClusterMethod method) {
    switch (method) {
        case ClusterMethod::Spectral: return "spectral";
        case ClusterMethod::KnnGraph: return "knn-graph";
        case ClusterMethod::Random: return "random";
        case ClusterMethod::None: return "none";
    }
    return "unknown";
}

int PipelineConfig::resolve_k(std::size_t n) const {
    if (method == ClusterMethod::None) return static_cast<int>(n);
    const int resolved = k ? *k : std::max(1, static_cast<int>(n / 10));
    if (resolved < 1 || static_cast<std::size_t>(resolved) > n)
        throw ArgumentError("k=" + std::to_string(resolved) + " must lie in [1, " + std::to_string(n) + "]");
    return resolved;
}

SamplePlan PipelineConfig::plan(int T) const {
    if (sampling == SamplingMode::Sliding) return Sliding{};
    const int b = block_size > 0 ? block_size : default_block_size(lags);
    return make_blocks(T, b, lags, placement, seed);
}

std::string PipelineConfig::describe() const {
    std::ostringstream out;
    out.precision(17);
    out << "lags=" << lags.to_string() << ";k=" << (k ? std::to_string(*k) : std::string("auto"))
        << ";cluster=" << to_string(method) << ";knn=" << knn_neighbors << ";balance=" << balance
        << ";normalize=" << normalize << ";ridge=" << ridge
        << ";sampling=" << (sampling == SamplingMode::Sliding ? "sliding" : "blocked") << ";block=" << block_size
        << ";placement=" << (placement == Placement::Last ? "last" : "random") << ";seed=" << seed;
    return out.str();
}

void PipelineModel::validate() const {
    const std::size_t n = series_ids.size();
    if (assignment.size() != n || ar_params.size() != n) throw FormatError("model component sizes disagree");
    std::vector<int> owner(n, -1);
    for (std::size_t g = 0; g < var_models.size(); ++g) {
        const auto& vm = var_models[g];
        if (vm.members.empty()) throw FormatError("empty VAR model");
        if (vm.gamma.rows() != static_cast<Eigen::Index>(vm.m()) ||
            vm.gamma.cols() != static_cast<Eigen::Index>(vm.m()) * lags.d())
            throw FormatError("VAR coefficient shape mismatch");
        const int label = assignment.labels[vm.members.front()];
        for (auto i : vm.members) {
            if (i >= n || owner[i] >= 0) throw FormatError("series " + std::to_string(i) + " owned by two VAR models");
            if (assignment.labels[i] != label) throw FormatError("VAR membership disagrees with assignment");
            owner[i] = static_cast<int>(g);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (owner[i] < 0) throw FormatError("series " + std::to_string(i) + " belongs to no VAR model");
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------- fitting

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fingerprint_of(const TimeSeriesDataset& ds, const PipelineConfig& config, const ClusterAssignment& assignment) {
    std::ostringstream key;
    key << config.describe() << ";n=" << ds.num_series() << ";T=" << ds.length() << ";assign=";
    for (int l : assignment.labels) key << l << ',';
    return fnv1a(key.str());
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

ClusterAssignment cluster_ar_params(const std::vector<ARParams>& params, const PipelineConfig& config, int k) {
    const std::size_t n = params.size();
    switch (config.method) {
        case ClusterMethod::None: return singleton_assignment(n);
        case ClusterMethod::Random: return random_balanced_assignment(n, k, Rng(config.seed).split("random-clusters").next_u64());
        default: break;
    }
    if (k == static_cast<int>(n)) return singleton_assignment(n);
    if (k == 1) return {std::vector<int>(n, 0), 1};
    const Eigen::MatrixXd points = config.normalize ? normalize_params(params).columns : stack_params(params);
    if (config.method == ClusterMethod::Spectral) {
        SpectralOptions options;
        options.seed = config.seed;
        return spectral_cluster(points, k, options);
    }
    KnnGraphOptions options;
    options.neighbors = std::min<int>(config.knn_neighbors, static_cast<int>(n) - 1);
    options.seed = config.seed;
    options.balance = config.balance;
    return knn_graph_partition(points, k, options);
}

PipelineModel fit_with_assignment(const TimeSeriesDataset& ds, const PipelineConfig& config,
                                  const ClusterAssignment& assignment, std::vector<ARParams> ar_params,
                                  FitTimings* timings) {
    const auto start = Clock::now();
    PipelineModel model;
    model.lags = config.lags;
    model.assignment = assignment;
    model.ar_params = std::move(ar_params);
    model.series_ids = ds.series_ids;
    model.config_text = config.describe();
    model.var_models = run_stage("global", [&] {
        return fit_all_var(ds, assignment, config.lags, config.plan(ds.length()), config.ridge, config.workers);
    });
    model.fingerprint = fingerprint_of(ds, config, assignment);
    if (timings) timings->global_seconds = seconds_since(start);
    return model;
}

PipelineModel fit_pipeline(const TimeSeriesDataset& ds, const PipelineConfig& config, FitTimings* timings) {
    const auto start = Clock::now();
    const int k = run_stage("config", [&] {
        ds.validate();
        if (ds.length() <= config.lags.max_lag())
            throw ArgumentError("series length " + std::to_string(ds.length()) + " does not exceed the largest lag " +
                                std::to_string(config.lags.max_lag()));
        return config.resolve_k(ds.num_series());
    });
    const auto plan = run_stage("local", [&] { return config.plan(ds.length()); });

    auto t0 = Clock::now();
    auto ar = run_stage("local", [&] { return fit_all_ar(ds, config.lags, plan, config.ridge, config.workers); });
    const double local_seconds = seconds_since(t0);

    t0 = Clock::now();
    const auto assignment = run_stage("cluster", [&] { return cluster_ar_params(ar, config, k); });
    const double cluster_seconds = seconds_since(t0);

    FitTimings stage3;
    PipelineModel model = fit_with_assignment(ds, config, assignment, std::move(ar), &stage3);
    if (timings) {
        timings->local_seconds = local_seconds;
        timings->cluster_seconds = cluster_seconds;
        timings->global_seconds = stage3.global_seconds;
        timings->total_seconds = seconds_since(start);
    }
    return model;
}

// ---------------------------------------------------------------- forecasting

Eigen::MatrixXd forecast(const PipelineModel& model, const TimeSeriesDataset& history, int horizon, std::size_t workers) {
    if (horizon < 1) throw ArgumentError("horizon must be >= 1, got " + std::to_string(horizon));
    if (history.num_series() != model.num_series())
        throw ShapeError("model has " + std::to_string(model.num_series()) + " series, data has " +
                         std::to_string(history.num_series()));
    const int T = history.length();
    if (T < model.lags.max_lag())
        throw ArgumentError("history of length " + std::to_string(T) + " is shorter than the largest lag");
    const auto& lags = model.lags.lags();
    const int d = model.lags.d();

    Eigen::MatrixXd out(static_cast<Eigen::Index>(model.num_series()), horizon);
    parallel_for(model.var_models.size(), workers, [&](std::size_t g) {
        const ClusterVARModel& vm = model.var_models[g];
        const std::size_t m = vm.m();
        std::vector<std::vector<double>> paths(m);
        for (std::size_t u = 0; u < m; ++u) {
            paths[u].reserve(static_cast<std::size_t>(T + horizon));
            for (int t = 1; t <= T; ++t) paths[u].push_back(history.at(vm.members[u], t));
        }
        std::vector<double> step(m);
        for (int h = 0; h < horizon; ++h) {
            const int t = T + h + 1;
            for (std::size_t u = 0; u < m; ++u) {
                double acc = 0.0;
                for (std::size_t v = 0; v < m; ++v)
                    for (int j = 0; j < d; ++j)
                        acc += vm.gamma(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v) * d + j) *
                               paths[v][static_cast<std::size_t>(t - lags[static_cast<std::size_t>(j)] - 1)];
                step[u] = acc;
            }
            for (std::size_t u = 0; u < m; ++u) {
                paths[u].push_back(step[u]);
                out(static_cast<Eigen::Index>(vm.members[u]), h) = step[u];
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------- persistence

namespace {

constexpr char kMagic[4] = {'C', 'C', 'F', 'M'};

class Writer {
public:
    void bytes(const void* data, std::size_t size) { buffer_.append(static_cast<const char*>(data), size); }
    void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void u64(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::string& buffer() { return buffer_; }

private:
    std::string buffer_;
};

class Reader {
public:
    explicit Reader(const std::string& data) : data_(data) {}
    void need(std::size_t size) const {
        if (pos_ + size > data_.size()) throw FormatError("model file truncated at byte " + std::to_string(pos_));
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * b);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * b);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t limit) {
        const std::uint32_t size = u32();
        if (size > limit) throw FormatError("string length " + std::to_string(size) + " exceeds limit");
        need(size);
        std::string s = data_.substr(pos_, size);
        pos_ += size;
        return s;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    const std::string& data_;
    std::size_t pos_ = 0;
};

std::string header_text(const PipelineModel& model) {
    std::ostringstream out;
    out << "format=cluster-and-conquer model\n"
        << "series=" << model.num_series() << '\n'
        << "lags=" << model.lags.to_string() << '\n'
        << "clusters=" << model.assignment.k << '\n'
        << "var_models=" << model.var_models.size() << '\n'
        << "cluster_sizes=";
    for (std::size_t g = 0; g < model.var_models.size(); ++g) out << (g ? "," : "") << model.var_models[g].m();
    out << "\nfingerprint=" << model.fingerprint << '\n' << "config=" << model.config_text << '\n';
    return out.str();
}

}  // namespace

std::string serialize_model(const PipelineModel& model) {
    model.validate();
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kModelFormatVersion);
    w.str(header_text(model));
    const auto n = static_cast<std::uint32_t>(model.num_series());
    const int d = model.lags.d();
    w.u32(n);
    w.u32(static_cast<std::uint32_t>(d));
    for (int lag : model.lags.lags()) w.i32(lag);
    w.i32(model.assignment.k);
    w.str(model.config_text);
    w.u64(model.fingerprint);
    for (std::size_t i = 0; i < n; ++i) {
        w.str(model.series_ids[i]);
        w.i32(model.assignment.labels[i]);
        w.u8(model.ar_params[i].rank_deficient ? 1 : 0);
        for (int j = 0; j < d; ++j) w.f64(model.ar_params[i].theta(j));
    }
    w.u32(static_cast<std::uint32_t>(model.var_models.size()));
    for (const auto& vm : model.var_models) {
        w.u32(static_cast<std::uint32_t>(vm.m()));
        for (auto i : vm.members) w.u32(static_cast<std::uint32_t>(i));
        w.u8(vm.rank_deficient ? 1 : 0);
        for (Eigen::Index r = 0; r < vm.gamma.rows(); ++r)
            for (Eigen::Index c = 0; c < vm.gamma.cols(); ++c) w.f64(vm.gamma(r, c));
    }
    w.u64(fnv1a(w.buffer()));
    return std::move(w.buffer());
}

PipelineModel deserialize_model(const std::string& bytes) {
    Reader r(bytes);
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a model file (bad magic)");
    for (int b = 0; b < 4; ++b) r.u8();
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw VersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    if (bytes.size() < 8 + 8) throw FormatError("model file truncated");
    const std::string body = bytes.substr(0, bytes.size() - 8);
    std::uint64_t stored = 0;
    for (int b = 0; b < 8; ++b)
        stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[bytes.size() - 8 + static_cast<std::size_t>(b)])) << (8 * b);

    constexpr std::size_t kLimit = 1u << 24;
    r.str(kLimit);  // header, informational
    PipelineModel model;
    const std::uint32_t n = r.u32();
    const std::uint32_t d = r.u32();
    if (n == 0 || d == 0 || n > kLimit || d > kLimit) throw FormatError("implausible model dimensions");
    std::vector<int> lags(d);
    for (auto& lag : lags) lag = r.i32();
    try {
        model.lags = LagSpec(lags);
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("invalid lags in model file: ") + e.what());
    }
    model.assignment.k = r.i32();
    model.config_text = r.str(kLimit);
    model.fingerprint = r.u64();
    model.assignment.labels.resize(n);
    model.ar_params.resize(n);
    model.series_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        model.series_ids[i] = r.str(kLimit);
        model.assignment.labels[i] = r.i32();
        auto& ar = model.ar_params[i];
        ar.rank_deficient = r.u8() != 0;
        ar.theta.resize(d);
        for (std::uint32_t j = 0; j < d; ++j) ar.theta(j) = r.f64();
        ar.series = model.series_ids[i];
        ar.lag_spec = model.lags;
    }
    const std::uint32_t groups = r.u32();
    if (groups > n) throw FormatError("more VAR models than series");
    model.var_models.resize(groups);
    for (auto& vm : model.var_models) {
        const std::uint32_t m = r.u32();
        if (m == 0 || m > n) throw FormatError("invalid cluster size");
        vm.members.resize(m);
        for (auto& i : vm.members) i = r.u32();
        vm.rank_deficient = r.u8() != 0;
        vm.lag_spec = model.lags;
        vm.gamma.resize(m, static_cast<Eigen::Index>(m) * d);
        for (Eigen::Index row = 0; row < vm.gamma.rows(); ++row)
            for (Eigen::Index c = 0; c < vm.gamma.cols(); ++c) vm.gamma(row, c) = r.f64();
    }
    if (r.remaining() != 8) throw FormatError("model file has " + std::to_string(r.remaining()) + " unexpected trailing bytes");
    if (fnv1a(body) != stored) throw FormatError("model file checksum mismatch");
    try {
        model.assignment.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(e.what());
    }
    model.validate();
    return model;
}

void save_model(const PipelineModel& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PipelineModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open model file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize_model(buffer.str());
}

}  // namespace cnc
