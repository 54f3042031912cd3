#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "adbn/bench.hpp"
#include "test_util.hpp"

using namespace adbn;
using testutil::random_model;
using testutil::TempDir;
using testutil::write_bmp;

namespace {

FrameStreamConfig small_stream_config() {
    FrameStreamConfig config;
    config.frame_side = 16;
    config.pool_size = 6;
    config.seed = 31;
    return config;
}

PreprocessConfig small_preprocess() {
    PreprocessConfig config;
    config.target_side = 8;
    return config;
}

BenchReport run_small_bench(int iterations, bool forward_only = false, int frame_side = 16) {
    Rng rng(301);
    const DbnModel model = random_model(64, {8}, 2, rng);
    FrameStreamConfig stream_config = small_stream_config();
    stream_config.frame_side = frame_side;
    FrameStream stream(stream_config);
    BenchConfig config;
    config.warmup = 3;
    config.iterations = iterations;
    config.forward_only = forward_only;
    return benchmark_inference(model, stream, small_preprocess(), config);
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("a timing run fills every report field consistently") {
    const BenchReport report = run_small_bench(40);
    CHECK(report.model_id == "64->8->2");
    CHECK(report.machine == machine_descriptor());
    CHECK(report.warmup == 3);
    CHECK(report.iterations == 40);
    CHECK(report.forward_only == false);
    CHECK(report.target_fps == 30.0);
    REQUIRE(report.samples_ms.size() == 40);

    // Recount the summary statistics from the raw samples.
    double total = 0.0, lo = report.samples_ms[0], hi = report.samples_ms[0];
    for (double s : report.samples_ms) {
        CHECK(s >= 0.0);
        total += s;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const double mean = total / 40.0;
    double sq = 0.0;
    for (double s : report.samples_ms) sq += (s - mean) * (s - mean);
    CHECK(report.mean_ms == doctest::Approx(mean).epsilon(1e-12));
    CHECK(report.min_ms == lo);
    CHECK(report.max_ms == hi);
    CHECK(report.stddev_ms == doctest::Approx(std::sqrt(sq / 40.0)).epsilon(1e-12));
    CHECK(report.mean_ms > 0.0);
    CHECK(report.min_ms <= report.mean_ms);
    CHECK(report.mean_ms <= report.max_ms);
    CHECK(std::abs(report.fps * report.mean_ms - 1000.0) <= 1e-6);
    CHECK_NOTHROW(report.check_consistent());
}

TEST_CASE("a single iteration is its own mean") {
    const BenchReport report = run_small_bench(1);
    REQUIRE(report.samples_ms.size() == 1);
    CHECK(report.mean_ms == report.samples_ms[0]);
    CHECK(report.min_ms == report.samples_ms[0]);
    CHECK(report.max_ms == report.samples_ms[0]);
    CHECK(report.stddev_ms == 0.0);
}

TEST_CASE("forward-only timing excludes the preprocessing cost of large frames") {
    // With 128x128 frames the resize dominates a 64->8->2 forward pass by
    // orders of magnitude, so the end-to-end mean must sit far above the
    // forward-only mean even on a noisy machine.
    const BenchReport end_to_end = run_small_bench(30, false, 128);
    const BenchReport forward_only = run_small_bench(30, true, 128);
    CHECK(forward_only.forward_only == true);
    CHECK(end_to_end.mean_ms > forward_only.mean_ms);
}

TEST_CASE("custom model ids pass through") {
    Rng rng(303);
    const DbnModel model = random_model(64, {8}, 2, rng);
    FrameStream stream(small_stream_config());
    BenchConfig config;
    config.warmup = 0;
    config.iterations = 2;
    const BenchReport report =
        benchmark_inference(model, stream, small_preprocess(), config, "candidate-a");
    CHECK(report.model_id == "candidate-a");
}

TEST_CASE("the synthetic pool holds pool_size frames and cycles in order") {
    FrameStreamConfig config = small_stream_config();
    config.pool_size = 5;  // odd: the generator over-produces and is trimmed
    FrameStream stream(config);
    REQUIRE(stream.size() == 5);
    std::vector<std::string> first_pass;
    std::vector<const ImagePatch*> frames;
    for (int i = 0; i < 5; ++i) {
        const ImagePatch& frame = stream.next();
        first_pass.push_back(frame.source_path);
        frames.push_back(&frame);
    }
    for (int i = 0; i < 5; ++i) {
        const ImagePatch& again = stream.next();
        CHECK(again.source_path == first_pass[static_cast<std::size_t>(i)]);
        CHECK(&again == frames[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("directory streams serve every image in sorted order") {
    TempDir dir("adbn-bench");
    write_bmp(dir.path() / "c.bmp", 16, 16, 30, 0, 0);
    write_bmp(dir.path() / "a.bmp", 16, 16, 10, 0, 0);
    write_bmp(dir.path() / "b.bmp", 16, 16, 20, 0, 0);
    FrameStreamConfig config;
    config.source = FrameStreamConfig::Source::directory;
    config.directory = dir.path();
    FrameStream stream(config);
    REQUIRE(stream.size() == 3);
    CHECK(stream.next().at(0, 0, 0) == 10);
    CHECK(stream.next().at(0, 0, 0) == 20);
    CHECK(stream.next().at(0, 0, 0) == 30);
    CHECK(stream.next().at(0, 0, 0) == 10);  // wrapped around

    TempDir empty("adbn-bench-empty");
    FrameStreamConfig no_frames = config;
    no_frames.directory = empty.path();
    CHECK_THROWS_AS(FrameStream{no_frames}, DataError);
}

TEST_CASE("stream and bench configs validate their bounds") {
    FrameStreamConfig stream = small_stream_config();
    stream.frame_side = 7;
    CHECK_THROWS_AS(stream.validate(), UsageError);
    stream = small_stream_config();
    stream.target_fps = 0.0;
    CHECK_THROWS_AS(stream.validate(), UsageError);
    stream = small_stream_config();
    stream.pool_size = 0;
    CHECK_THROWS_AS(stream.validate(), UsageError);
    stream = small_stream_config();
    stream.source = FrameStreamConfig::Source::directory;
    CHECK_THROWS_AS(stream.validate(), UsageError);

    BenchConfig bench;
    bench.warmup = -1;
    CHECK_THROWS_AS(bench.validate(), UsageError);
    bench = BenchConfig{};
    bench.iterations = 0;
    CHECK_THROWS_AS(bench.validate(), UsageError);
}

TEST_CASE("benchmarking rejects a model whose input does not match the preprocessing") {
    Rng rng(305);
    const DbnModel model = random_model(100, {8}, 2, rng);
    FrameStream stream(small_stream_config());
    try {
        benchmark_inference(model, stream, small_preprocess(), BenchConfig{});
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        const std::string message = e.what();
        CHECK(message.find("64") != std::string::npos);
        CHECK(message.find("100") != std::string::npos);
    }
}

TEST_CASE("bench reports round-trip through the summary and csv files") {
    const BenchReport report = run_small_bench(25);
    TempDir dir("adbn-bench");
    const auto summary = dir.path() / "summary.txt";
    const auto csv = dir.path() / "samples.csv";
    write_bench_report(report, summary, csv);
    const BenchReport loaded = read_bench_report(summary, csv);

    CHECK(loaded.model_id == report.model_id);
    CHECK(loaded.machine == report.machine);
    CHECK(loaded.warmup == report.warmup);
    CHECK(loaded.iterations == report.iterations);
    CHECK(loaded.forward_only == report.forward_only);
    CHECK(loaded.target_fps == report.target_fps);
    CHECK(loaded.mean_ms == report.mean_ms);  // %.17g round-trips doubles exactly
    CHECK(loaded.min_ms == report.min_ms);
    CHECK(loaded.max_ms == report.max_ms);
    CHECK(loaded.stddev_ms == report.stddev_ms);
    CHECK(loaded.fps == report.fps);
    REQUIRE(loaded.samples_ms.size() == report.samples_ms.size());
    for (std::size_t i = 0; i < report.samples_ms.size(); ++i)
        CHECK(loaded.samples_ms[i] == report.samples_ms[i]);
}

TEST_CASE("malformed report files are rejected") {
    TempDir dir("adbn-bench");
    const auto summary = dir.path() / "summary.txt";
    const auto csv = dir.path() / "samples.csv";
    const BenchReport report = run_small_bench(3);
    write_bench_report(report, summary, csv);

    CHECK_THROWS_AS(read_bench_report(dir.path() / "nope.txt", csv), DataError);
    CHECK_THROWS_AS(read_bench_report(summary, dir.path() / "nope.csv"), DataError);

    std::ofstream(dir.path() / "noeq.txt") << "mean_ms 3\n";
    CHECK_THROWS_AS(read_bench_report(dir.path() / "noeq.txt", csv), DataError);

    std::ofstream(dir.path() / "missing.txt") << "model_id=x\nmachine=y\n";
    CHECK_THROWS_AS(read_bench_report(dir.path() / "missing.txt", csv), DataError);

    std::ofstream(dir.path() / "badhead.csv") << "latency\n0,1.5\n";
    CHECK_THROWS_AS(read_bench_report(summary, dir.path() / "badhead.csv"), DataError);

    std::ofstream(dir.path() / "nocomma.csv") << "sample,latency_ms\n0 1.5\n";
    CHECK_THROWS_AS(read_bench_report(summary, dir.path() / "nocomma.csv"), DataError);

    std::ofstream(dir.path() / "nan.csv") << "sample,latency_ms\n0,abc\n";
    CHECK_THROWS_AS(read_bench_report(summary, dir.path() / "nan.csv"), DataError);

    // Sample count disagreeing with the declared iteration count.
    std::ofstream(dir.path() / "short.csv") << "sample,latency_ms\n0,1.5\n";
    CHECK_THROWS_AS(read_bench_report(summary, dir.path() / "short.csv"), ContractError);
}

TEST_CASE("model comparisons report relative latency and fps deltas") {
    BenchReport a;
    a.mean_ms = 100.0;
    a.fps = 10.0;
    a.machine = "m";
    BenchReport b = a;
    BenchComparison same = compare_models(a, b);
    CHECK(same.latency_delta_percent == 0.0);
    CHECK(same.fps_delta == 0.0);
    CHECK(same.machine_mismatch == false);

    b.mean_ms = 95.0;
    b.fps = 1000.0 / 95.0;
    BenchComparison faster = compare_models(a, b);
    CHECK(faster.latency_delta_percent == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(faster.fps_delta == doctest::Approx(1000.0 / 95.0 - 10.0).epsilon(1e-12));

    BenchReport before;
    before.mean_ms = 88.51;
    BenchReport after;
    after.mean_ms = 83.27;
    CHECK(compare_models(before, after).latency_delta_percent ==
          doctest::Approx((88.51 - 83.27) / 88.51 * 100.0).epsilon(1e-12));

    after.machine = "somewhere-else";
    CHECK(compare_models(before, after).machine_mismatch == true);
}

TEST_CASE("the machine descriptor is a single informative line") {
    const std::string machine = machine_descriptor();
    CHECK(!machine.empty());
    CHECK(machine.find('\n') == std::string::npos);
    CHECK(machine.find("threads") != std::string::npos);
}

}  // TEST_SUITE
