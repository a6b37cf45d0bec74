#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cnc/errors.hpp"
#include "cnc/pipeline.hpp"
#include "cnc/simgen.hpp"

using namespace cnc;

namespace {

TimeSeriesDataset fixture(std::uint64_t seed = 3) {
    GenConfig gen;
    gen.n = 30;
    gen.k_true = 3;
    gen.d = 4;
    gen.period = 6;
    gen.T = 150;
    gen.seed = seed;
    return gen_synthetic_ts(gen).data;
}

PipelineConfig config(int k) {
    PipelineConfig cfg;
    cfg.lags = LagSpec::contiguous(4);
    cfg.k = k;
    return cfg;
}

}  // namespace

TEST_CASE("configuration helpers") {
    PipelineConfig cfg;
    CHECK(cfg.resolve_k(200) == 20);
    CHECK(cfg.resolve_k(7) == 1);
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.resolve_k(10), ArgumentError);
    cfg.k = 11;
    CHECK_THROWS_AS(cfg.resolve_k(10), ArgumentError);
    cfg.method = ClusterMethod::None;
    CHECK(cfg.resolve_k(10) == 10);
    CHECK(parse_cluster_method("knn-graph") == ClusterMethod::KnnGraph);
    CHECK(to_string(ClusterMethod::Spectral) == "spectral");
    CHECK_THROWS_AS(parse_cluster_method("kmeans"), ArgumentError);
    CHECK(PipelineConfig{}.describe() == PipelineConfig{}.describe());
}

TEST_CASE("fitted model structure") {
    const auto ds = fixture();
    FitTimings timings;
    const PipelineModel model = fit_pipeline(ds, config(3), &timings);
    CHECK(model.num_series() == 30u);
    CHECK(model.assignment.k == 3);
    CHECK(model.ar_params.size() == 30u);
    std::size_t covered = 0;
    for (const auto& vm : model.var_models) covered += vm.m();
    CHECK(covered == 30u);
    CHECK_NOTHROW(model.validate());
    CHECK(timings.global_seconds >= 0.0);
    CHECK(timings.total_seconds >= timings.global_seconds);
}

TEST_CASE("fits are deterministic and independent of the worker count") {
    const auto ds = fixture();
    PipelineConfig a = config(3);
    a.workers = 1;
    PipelineConfig b = config(3);
    b.workers = 4;
    const PipelineModel ma = fit_pipeline(ds, a);
    const PipelineModel mb = fit_pipeline(ds, b);
    CHECK(ma.assignment == mb.assignment);
    CHECK(ma.fingerprint == mb.fingerprint);
    CHECK((forecast(ma, ds, 5, 1).array() == forecast(mb, ds, 5, 4).array()).all());
}

TEST_CASE("every clustering method runs") {
    const auto ds = fixture();
    for (auto method : {ClusterMethod::Spectral, ClusterMethod::KnnGraph, ClusterMethod::Random, ClusterMethod::None}) {
        PipelineConfig cfg = config(3);
        cfg.method = method;
        const PipelineModel model = fit_pipeline(ds, cfg);
        CHECK(forecast(model, ds, 3).allFinite());
    }
    PipelineConfig blocked = config(3);
    blocked.sampling = SamplingMode::Blocked;
    blocked.ridge = 1e-3;
    CHECK_NOTHROW(fit_pipeline(ds, blocked));
}

TEST_CASE("errors are tagged with their stage") {
    const auto ds = fixture();
    PipelineConfig too_long = config(3);
    too_long.lags = LagSpec::contiguous(200);
    try {
        fit_pipeline(ds, too_long);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "config");
    }
    PipelineConfig bad_block = config(3);
    bad_block.sampling = SamplingMode::Blocked;
    bad_block.block_size = 1000;
    try {
        fit_pipeline(ds, bad_block);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "local");
    }
    const PipelineModel model = fit_pipeline(ds, config(3));
    CHECK_THROWS_AS(forecast(model, ds.select({0, 1}), 3), ShapeError);
    CHECK_THROWS_AS(forecast(model, ds, 0), ArgumentError);
}

TEST_CASE("forecasts only use history up to the cutoff") {
    const auto ds = fixture();
    const PipelineModel model = fit_pipeline(ds, config(3));
    TimeSeriesDataset altered = ds;
    altered.values.col(ds.length() - 1).setConstant(1e6);
    const Eigen::MatrixXd a = forecast(model, ds.prefix(100), 4);
    const Eigen::MatrixXd b = forecast(model, altered.prefix(100), 4);
    CHECK((a.array() == b.array()).all());
}

TEST_CASE("model files round trip exactly") {
    const auto ds = fixture();
    const PipelineModel model = fit_pipeline(ds, config(3));
    const auto path = std::filesystem::temp_directory_path() / "cnc_model_test.ccfm";
    save_model(model, path);
    const PipelineModel back = load_model(path);
    CHECK(back.assignment == model.assignment);
    CHECK(back.series_ids == model.series_ids);
    CHECK(back.fingerprint == model.fingerprint);
    CHECK(back.config_text == model.config_text);
    CHECK(back.lags == model.lags);
    for (std::size_t i = 0; i < model.ar_params.size(); ++i)
        CHECK((back.ar_params[i].theta.array() == model.ar_params[i].theta.array()).all());
    CHECK((forecast(back, ds, 6).array() == forecast(model, ds, 6).array()).all());
    CHECK(serialize_model(back) == serialize_model(model));
    std::filesystem::remove(path);
}

TEST_CASE("corrupt model files are rejected") {
    const PipelineModel model = fit_pipeline(fixture(), config(3));
    const std::string good = serialize_model(model);

    std::string flipped = good;
    flipped[flipped.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(deserialize_model(flipped), FormatError);

    CHECK_THROWS_AS(deserialize_model(good.substr(0, good.size() - 9)), FormatError);
    CHECK_THROWS_AS(deserialize_model(good + "x"), FormatError);
    CHECK_THROWS_AS(deserialize_model("XXXX" + good.substr(4)), FormatError);
    CHECK_THROWS_AS(deserialize_model(""), FormatError);

    std::string future = good;
    future[4] = 2;
    CHECK_THROWS_AS(deserialize_model(future), VersionError);

    CHECK_THROWS_AS(load_model("/nonexistent/model.ccfm"), FormatError);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}
