// cnc: command-line front end for cluster-and-conquer forecasting.
//
//   cnc simulate      --out DIR [--series 200 --k-true 10 --lag 10 --period 10 ...]
//   cnc fit           --data CSV --out DIR [--lags 1:10 --k auto --cluster knn-graph ...]
//   cnc forecast      --model FILE --data CSV --horizon H --out DIR
//   cnc evaluate      --data CSV [--model FILE] --horizon H --windows W --out DIR
//   cnc sweep-k       --data CSV --k-list 5,10,20 --out DIR
//   cnc bench-timing  --data CSV --k-list 5,40 --runs 5 --out DIR
//   cnc verify-theory [--trials N --separation S --sigma-scale F] --out DIR
//
// Every option may also come from a key=value file given with --config;
// command-line values win over the file, which wins over the defaults.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnc/errors.hpp"
#include "cnc/metrics.hpp"
#include "cnc/pipeline.hpp"
#include "cnc/simgen.hpp"
#include "cnc/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

struct Options {
    std::string config_text;

    std::string data;
    std::string out = "out";
    std::string model;
    std::string lags = "1:10";
    std::string k = "auto";
    std::string cluster = "knn-graph";
    double ridge = 1e-8;
    std::uint64_t seed = 0;
    int horizon = 24;
    int windows = 7;
    std::string sampling = "sliding";
    int block_size = 0;
    std::size_t workers = 0;
    int trials = 0;  // 0: per-check default
    std::string mode = "refit";
    std::string k_list = "5,10,20,40";
    int runs = 5;
    int neighbors = 11;
    std::string id_column = "auto";
    std::string layout = "rows";

    // simulate
    int series = 200;
    int k_true = 10;
    int lag = 10;
    int period = 10;
    int length = 1000;
    double noise_std = 1e-2;
    double theta_std = 1e-2;
    double p_norm = 2.5;

    // verify-theory
    int replays = 10000;
    double separation = 2.0;
    double sigma_scale = 1.0;
    double delta = 0.1;
    double beta = 1.0;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

class Manifest {
public:
    Manifest(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {}

    void add_output(const fs::path& path) {
        outputs_.push_back({{"record", "output"},
                            {"path", path.filename().string()},
                            {"fnv1a", hex64(cnc::fnv1a(read_file(path)))}});
    }
    void add(json record) { extra_.push_back(std::move(record)); }

    void write() const {
        json config = json::object();
        std::istringstream lines(opt_.config_text);
        std::string line;
        while (std::getline(lines, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos || line.starts_with('#') || line.starts_with('[')) continue;
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t\""));
                s.erase(s.find_last_not_of(" \t\"") + 1);
                return s;
            };
            config[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        std::ofstream out(fs::path(opt_.out) / "manifest.jsonl");
        out << json{{"record", "config"}, {"command", command_}, {"config", config}}.dump() << '\n';
        for (const auto& r : extra_) out << r.dump() << '\n';
        for (const auto& r : outputs_) out << r.dump() << '\n';
    }

private:
    std::string command_;
    const Options& opt_;
    std::vector<json> outputs_;
    std::vector<json> extra_;
};

cnc::TimeSeriesDataset load_data(const Options& opt) {
    if (opt.data.empty()) throw cnc::ArgumentError("--data is required");
    cnc::CsvOptions csv;
    csv.layout = opt.layout == "columns" ? cnc::CsvLayout::ColumnMajor : cnc::CsvLayout::RowMajor;
    csv.id_column = opt.id_column == "yes" ? cnc::IdColumn::Yes
                    : opt.id_column == "no" ? cnc::IdColumn::No
                                            : cnc::IdColumn::Auto;
    return cnc::load_csv(opt.data, csv);
}

cnc::PipelineConfig pipeline_config(const Options& opt) {
    cnc::PipelineConfig cfg;
    cfg.lags = cnc::LagSpec::parse(opt.lags);
    if (opt.k != "auto") {
        try {
            std::size_t used = 0;
            cfg.k = std::stoi(opt.k, &used);
            if (used != opt.k.size()) throw std::invalid_argument(opt.k);
        } catch (const std::logic_error&) {
            throw cnc::ArgumentError("--k must be an integer or 'auto', got '" + opt.k + "'");
        }
    }
    cfg.method = cnc::parse_cluster_method(opt.cluster);
    cfg.knn_neighbors = opt.neighbors;
    cfg.ridge = opt.ridge;
    cfg.sampling = opt.sampling == "blocked" ? cnc::SamplingMode::Blocked : cnc::SamplingMode::Sliding;
    cfg.block_size = opt.block_size;
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    return cfg;
}

cnc::EvalConfig eval_config(const Options& opt) {
    cnc::EvalConfig cfg;
    cfg.horizon = opt.horizon;
    cfg.windows = opt.windows;
    return cfg;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw cnc::ArgumentError(std::string(flag) + ": invalid integer '" + item + "'");
        }
    }
    if (out.empty()) throw cnc::ArgumentError(std::string(flag) + " is empty");
    return out;
}

void prepare_out(const Options& opt) { fs::create_directories(opt.out); }

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& ids, const Eigen::MatrixXd& values,
                      const char* column_prefix) {
    std::ofstream out(path);
    out << "series_id";
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << column_prefix << (c + 1);
    out << '\n' << std::setprecision(17);
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out << ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << values(r, c);
        out << '\n';
    }
}

/// Fit function that refits the pipeline and accumulates stage-3 time.
cnc::FitFn pipeline_fit_fn(const cnc::PipelineConfig& cfg, double* global_seconds) {
    return [cfg, global_seconds](const cnc::TimeSeriesDataset& train) -> cnc::Predictor {
        cnc::FitTimings timings;
        auto model = std::make_shared<cnc::PipelineModel>(cnc::fit_pipeline(train, cfg, &timings));
        if (global_seconds) *global_seconds += timings.global_seconds;
        const std::size_t workers = cfg.workers;
        return [model, workers](const cnc::TimeSeriesDataset& history, int horizon) {
            return cnc::forecast(*model, history, horizon, workers);
        };
    };
}

// ---------------------------------------------------------------- commands

int cmd_simulate(const Options& opt) {
    cnc::GenConfig gen;
    gen.n = opt.series;
    gen.k_true = opt.k_true;
    gen.d = opt.lag;
    gen.period = opt.period;
    gen.T = opt.length;
    gen.noise_std = opt.noise_std;
    gen.theta_std = opt.theta_std;
    gen.p_norm = opt.p_norm;
    gen.seed = opt.seed;
    gen.validate();
    prepare_out(opt);
    const cnc::SyntheticData sim = cnc::gen_synthetic_ts(gen);
    const fs::path data = fs::path(opt.out) / "data.csv";
    const fs::path truth = fs::path(opt.out) / "truth.json";
    cnc::write_csv(sim.data, data);
    std::ofstream(truth) << cnc::truth_to_json(gen, sim.truth).dump(1) << '\n';
    Manifest manifest("simulate", opt);
    manifest.add({{"record", "gen_config"},
                  {"n", gen.n},
                  {"k_true", gen.k_true},
                  {"d", gen.d},
                  {"T", gen.T},
                  {"period", gen.period},
                  {"noise_std", gen.noise_std},
                  {"theta_std", gen.theta_std},
                  {"p_norm", gen.p_norm},
                  {"seed", gen.seed}});
    manifest.add_output(data);
    manifest.add_output(truth);
    manifest.write();
    std::cout << "wrote " << data.string() << " (" << gen.n << " series x " << gen.T << ")\n";
    return 0;
}

int cmd_fit(const Options& opt) {
    const auto ds = load_data(opt);
    const auto cfg = pipeline_config(opt);
    prepare_out(opt);
    cnc::FitTimings timings;
    const auto model = cnc::fit_pipeline(ds, cfg, &timings);
    const fs::path model_path = fs::path(opt.out) / "model.ccfm";
    const fs::path assign_path = fs::path(opt.out) / "assignment.csv";
    const fs::path timing_path = fs::path(opt.out) / "timings.json";
    cnc::save_model(model, model_path);
    cnc::write_assignment_csv(model.assignment, model.series_ids, assign_path);
    std::ofstream(timing_path) << json{{"local_seconds", timings.local_seconds},
                                       {"cluster_seconds", timings.cluster_seconds},
                                       {"global_seconds", timings.global_seconds},
                                       {"total_seconds", timings.total_seconds}}
                                      .dump(1)
                               << '\n';
    Manifest manifest("fit", opt);
    manifest.add({{"record", "model"},
                  {"fingerprint", hex64(model.fingerprint)},
                  {"k", model.assignment.k},
                  {"series", model.num_series()},
                  {"pipeline", model.config_text}});
    manifest.add_output(model_path);
    manifest.add_output(assign_path);
    manifest.write();
    std::cout << "fitted " << model.var_models.size() << " cluster models on " << model.num_series()
              << " series; stage-3 " << timings.global_seconds << " s\n";
    return 0;
}

int cmd_forecast(const Options& opt) {
    if (opt.model.empty()) throw cnc::ArgumentError("--model is required");
    const auto model = cnc::load_model(opt.model);
    const auto ds = load_data(opt);
    prepare_out(opt);
    const Eigen::MatrixXd pred = cnc::forecast(model, ds, opt.horizon, opt.workers);
    const fs::path path = fs::path(opt.out) / "forecast.csv";
    write_matrix_csv(path, ds.series_ids, pred, "h");
    Manifest manifest("forecast", opt);
    manifest.add({{"record", "model"}, {"fingerprint", hex64(model.fingerprint)}});
    manifest.add_output(path);
    manifest.write();
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

int cmd_evaluate(const Options& opt) {
    const auto ds = load_data(opt);
    const auto eval = eval_config(opt);
    eval.validate(ds.length());
    Manifest manifest("evaluate", opt);
    cnc::EvalResult result;
    if (!opt.model.empty()) {
        auto model = std::make_shared<cnc::PipelineModel>(cnc::load_model(opt.model));
        const std::size_t workers = opt.workers;
        cnc::FitFn fixed = [model, workers](const cnc::TimeSeriesDataset&) -> cnc::Predictor {
            return [model, workers](const cnc::TimeSeriesDataset& history, int horizon) {
                return cnc::forecast(*model, history, horizon, workers);
            };
        };
        manifest.add({{"record", "model"}, {"fingerprint", hex64(model->fingerprint)}});
        prepare_out(opt);
        result = cnc::rolling_validate(ds, fixed, eval, cnc::FitMode::Fixed, "model");
    } else {
        const auto cfg = pipeline_config(opt);
        if (opt.mode != "refit" && opt.mode != "fixed") throw cnc::ArgumentError("--mode must be refit or fixed");
        prepare_out(opt);
        result = cnc::rolling_validate(ds, pipeline_fit_fn(cfg, nullptr), eval,
                                       opt.mode == "fixed" ? cnc::FitMode::Fixed : cnc::FitMode::Refit,
                                       "cluster-and-conquer");
    }
    const fs::path path = fs::path(opt.out) / "metrics.csv";
    {
        std::ofstream out(path);
        cnc::write_metric_csv(out, result.rows);
    }
    manifest.add({{"record", "windows"}, {"cutoffs", result.cutoffs}, {"horizon", eval.horizon}});
    manifest.add_output(path);
    manifest.write();
    for (const auto& row : result.rows)
        if (row.window == "all") std::cout << cnc::to_string(row.metric) << ' ' << row.value << '\n';
    return 0;
}

int cmd_sweep_k(const Options& opt) {
    const auto ds = load_data(opt);
    const auto base = pipeline_config(opt);
    const auto eval = eval_config(opt);
    eval.validate(ds.length());
    const auto ks = parse_int_list(opt.k_list, "--k-list");
    const int n = static_cast<int>(ds.num_series());
    for (int k : ks)
        if (k < 1 || k > n) throw cnc::ArgumentError("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    prepare_out(opt);

    const fs::path path = fs::path(opt.out) / "sweep.csv";
    std::ofstream out(path);
    out << "method,k,WAPE,MAPE,SMAPE,wall_time_fit\n" << std::setprecision(17);
    auto run = [&](const std::string& method, cnc::PipelineConfig cfg, int k) {
        cfg.k = k;
        double seconds = 0.0;
        const auto result = cnc::rolling_validate(ds, pipeline_fit_fn(cfg, &seconds), eval, cnc::FitMode::Refit, method);
        out << method << ',' << k << ',' << result.pooled(cnc::Metric::WAPE) << ','
            << result.pooled(cnc::Metric::MAPE) << ',' << result.pooled(cnc::Metric::SMAPE) << ',' << seconds << '\n';
        std::cout << method << " k=" << k << " WAPE=" << result.pooled(cnc::Metric::WAPE) << '\n';
    };
    for (int k : ks) run("cluster-and-conquer", base, k);
    cnc::PipelineConfig random = base;
    random.method = cnc::ClusterMethod::Random;
    for (int k : ks) run("random-clusters", random, k);
    cnc::PipelineConfig scalar = base;
    scalar.method = cnc::ClusterMethod::None;
    run("scalar-ar", scalar, n);
    out.close();

    Manifest manifest("sweep-k", opt);
    manifest.add({{"record", "note"}, {"text", "wall_time_fit is stage-3 seconds summed over windows"}});
    manifest.write();
    return 0;
}

int cmd_bench_timing(const Options& opt) {
    const auto ds = load_data(opt);
    const auto base = pipeline_config(opt);
    const auto ks = parse_int_list(opt.k_list, "--k-list");
    if (opt.runs < 1) throw cnc::ArgumentError("--runs must be >= 1");
    prepare_out(opt);
    const fs::path path = fs::path(opt.out) / "timing.csv";
    std::ofstream out(path);
    out << "k,run,stage3_seconds,total_seconds\n" << std::setprecision(9);
    json medians = json::array();
    for (int k : ks) {
        cnc::PipelineConfig cfg = base;
        cfg.k = k;
        std::vector<double> stage3;
        for (int r = 0; r < opt.runs; ++r) {
            cnc::FitTimings timings;
            cnc::fit_pipeline(ds, cfg, &timings);
            stage3.push_back(timings.global_seconds);
            out << k << ',' << r << ',' << timings.global_seconds << ',' << timings.total_seconds << '\n';
        }
        std::sort(stage3.begin(), stage3.end());
        const double median = stage3[stage3.size() / 2];
        medians.push_back({{"k", k}, {"median_stage3_seconds", median}});
        std::cout << "k=" << k << " median stage-3 " << median << " s\n";
    }
    out.close();
    std::ofstream(fs::path(opt.out) / "timing_summary.json") << medians.dump(1) << '\n';
    Manifest manifest("bench-timing", opt);
    manifest.write();
    return 0;
}

int cmd_verify_theory(const Options& opt) {
    prepare_out(opt);
    const double scale = opt.sigma_scale;
    if (scale <= 0.0) throw cnc::ArgumentError("--sigma-scale must be positive");
    auto trials_or = [&](int fallback) { return opt.trials > 0 ? opt.trials : fallback; };

    cnc::ArDecompositionConfig ar;
    ar.mlr.T = 500;
    ar.mlr.sigma *= scale;
    ar.mlr.seed = opt.seed;
    ar.replays = opt.replays;
    ar.workers = opt.workers;

    cnc::RecoveryConfig rec;
    rec.mlr.sigma *= scale;
    rec.mlr.seed = opt.seed;
    rec.multiplier = opt.separation;
    rec.beta = opt.beta;
    rec.trials = trials_or(rec.trials);
    rec.workers = opt.workers;

    cnc::VarBoundConfig var;
    var.sigma *= scale;
    var.delta = opt.delta;
    var.seed = opt.seed;
    var.trials = trials_or(var.trials);
    var.workers = opt.workers;

    cnc::EndToEndConfig e2e;
    e2e.mlr.sigma *= scale;
    e2e.mlr.seed = opt.seed;
    e2e.multiplier = std::max(1.0, opt.separation);
    e2e.beta = opt.beta;
    e2e.delta = opt.delta;
    e2e.trials = trials_or(e2e.trials);
    e2e.workers = opt.workers;

    const std::vector<cnc::BoundReport> reports{cnc::check_ar_decomposition(ar), cnc::check_exact_recovery(rec),
                                                cnc::check_var_bound(var), cnc::check_end_to_end(e2e)};
    const fs::path path = fs::path(opt.out) / "theory.jsonl";
    std::ofstream out(path);
    bool all = true;
    for (const auto& r : reports) {
        r.write_jsonl(out);
        all = all && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.claim << (r.probe ? " (probe)" : "") << ": rate "
                  << r.empirical_rate << " (" << r.successes << "/" << r.trials << "), required " << r.required_rate
                  << '\n';
    }
    out.close();
    Manifest manifest("verify-theory", opt);
    manifest.add_output(path);
    manifest.write();
    return all ? 0 : kFailureExit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster-and-conquer forecasting for many time series"};
    app.set_config("--config", "", "key=value configuration file (command-line flags take precedence)");
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--data", opt.data, "Input CSV (one series per row)");
    app.add_option("--out", opt.out, "Output directory")->capture_default_str();
    app.add_option("--model", opt.model, "Model file written by 'fit'");
    app.add_option("--lags", opt.lags, "hourly | fivemin | list such as 1,2,24 or 1:10")->capture_default_str();
    app.add_option("--k", opt.k, "Number of clusters or 'auto' (n/10)")->capture_default_str();
    app.add_option("--cluster", opt.cluster, "Clustering method")
        ->check(CLI::IsMember({"spectral", "knn-graph", "random", "none"}))
        ->capture_default_str();
    app.add_option("--ridge", opt.ridge, "Ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    app.add_option("--horizon", opt.horizon, "Forecast horizon")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--windows", opt.windows, "Rolling windows")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--sampling", opt.sampling, "Regression sampling")
        ->check(CLI::IsMember({"sliding", "blocked"}))
        ->capture_default_str();
    app.add_option("--block-size", opt.block_size, "Block length for blocked sampling (0: largest lag + 1)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--workers", opt.workers, "Worker threads (0: hardware concurrency)")->capture_default_str();
    app.add_option("--trials", opt.trials, "Monte Carlo trials (overrides per-check defaults)")
        ->check(CLI::PositiveNumber);
    app.add_option("--mode", opt.mode, "evaluate: refit per window or fit once")
        ->check(CLI::IsMember({"refit", "fixed"}))
        ->capture_default_str();
    app.add_option("--k-list", opt.k_list, "Comma-separated cluster counts")->capture_default_str();
    app.add_option("--runs", opt.runs, "bench-timing repetitions")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--neighbors", opt.neighbors, "KNN graph degree")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--id-column", opt.id_column, "Whether the CSV has a leading id column")
        ->check(CLI::IsMember({"auto", "yes", "no"}))
        ->capture_default_str();
    app.add_option("--layout", opt.layout, "CSV orientation")
        ->check(CLI::IsMember({"rows", "columns"}))
        ->capture_default_str();

    app.add_option("--series", opt.series, "simulate: number of series")->capture_default_str();
    app.add_option("--k-true", opt.k_true, "simulate: number of true clusters")->capture_default_str();
    app.add_option("--lag", opt.lag, "simulate: autoregressive order")->capture_default_str();
    app.add_option("--period", opt.period, "simulate: period of the initial sinusoid")->capture_default_str();
    app.add_option("--length", opt.length, "simulate: series length")->capture_default_str();
    app.add_option("--noise-std", opt.noise_std, "simulate: innovation standard deviation")->capture_default_str();
    app.add_option("--theta-std", opt.theta_std, "simulate: within-cluster coefficient spread")->capture_default_str();
    app.add_option("--p-norm", opt.p_norm, "simulate: coefficient normalisation exponent")->capture_default_str();

    app.add_option("--replays", opt.replays, "verify-theory: replays for the AR decomposition check")
        ->check(CLI::Range(2, 100000000))
        ->capture_default_str();
    app.add_option("--separation", opt.separation, "verify-theory: separation as a multiple of the threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--sigma-scale", opt.sigma_scale, "verify-theory: noise multiplier")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--delta", opt.delta, "verify-theory: failure probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--beta", opt.beta, "verify-theory: separation constant beta")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    int (*handler)(const Options&) = nullptr;
    auto command = [&](const char* name, const char* help, int (*fn)(const Options&)) {
        app.add_subcommand(name, help)->callback([&handler, fn] { handler = fn; });
    };
    command("simulate", "Write a synthetic clustered dataset and its ground truth", cmd_simulate);
    command("fit", "Fit the three-stage model and save it", cmd_fit);
    command("forecast", "Forecast from a saved model", cmd_forecast);
    command("evaluate", "Rolling-origin evaluation", cmd_evaluate);
    command("sweep-k", "Evaluate a list of cluster counts plus baselines", cmd_sweep_k);
    command("bench-timing", "Time the per-cluster VAR stage", cmd_bench_timing);
    command("verify-theory", "Monte Carlo checks of the recovery and error bounds", cmd_verify_theory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageExit;
    }
    opt.config_text = app.config_to_str(true, false);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return handler(opt);
    } catch (const cnc::ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageExit;
    } catch (const cnc::ClusterCountError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageExit;
    } catch (const cnc::StageError& e) {
        if (e.stage() == "config") {
            std::cerr << "usage error: " << e.what() << '\n';
            return kUsageExit;
        }
        std::cerr << name << ": " << e.what() << '\n';
        return kFailureExit;
    } catch (const std::exception& e) {
        std::cerr << name << ": " << e.what() << '\n';
        return kFailureExit;
    }
}
