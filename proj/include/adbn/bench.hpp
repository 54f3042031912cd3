#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adbn/data.hpp"
#include "adbn/dbn.hpp"

namespace adbn {

// Frame source for the timing loop: either a fixed pool of synthetic
// camera-style frames or every image found in a directory. Frames cycle.
struct FrameStreamConfig {
    enum class Source { synthetic, directory };

    Source source = Source::synthetic;
    std::filesystem::path directory;  // required for Source::directory
    int frame_side = 256;
    double target_fps = 30.0;  // nominal camera rate, recorded in reports
    int pool_size = 16;        // synthetic frames kept in memory
    std::uint64_t seed = 1;

    void validate() const;
};

class FrameStream {
  public:
    explicit FrameStream(const FrameStreamConfig& config);

    const ImagePatch& next();
    std::size_t size() const { return pool_.size(); }
    const FrameStreamConfig& config() const { return config_; }

  private:
    FrameStreamConfig config_;
    std::vector<ImagePatch> pool_;
    std::size_t cursor_ = 0;
};

struct BenchConfig {
    int warmup = 50;
    int iterations = 1000;
    // Timing is end-to-end (preprocess + forward) unless forward_only is
    // set, in which case frames are preprocessed outside the timed region.
    bool forward_only = false;

    void validate() const;
};

struct BenchReport {
    std::string model_id;
    std::string machine;
    int warmup = 0;
    int iterations = 0;
    bool forward_only = false;
    double target_fps = 0.0;
    std::vector<double> samples_ms;  // one per iteration, monotonic clock
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double stddev_ms = 0.0;
    double fps = 0.0;  // 1000 / mean_ms

    void check_consistent() const;
};

struct BenchComparison {
    // Positive when b is faster than a: (mean_a - mean_b) / mean_a * 100.
    double latency_delta_percent = 0.0;
    double fps_delta = 0.0;
    bool machine_mismatch = false;
};

// Single-threaded timing loop: `warmup` discarded passes, then `iterations`
// timed passes over the stream with std::chrono::steady_clock.
BenchReport benchmark_inference(const DbnModel& model, FrameStream& stream,
                                const PreprocessConfig& preprocess_config,
                                const BenchConfig& config, std::string model_id = {});

BenchComparison compare_models(const BenchReport& a, const BenchReport& b);

// Kernel, architecture, and CPU model on one line, for report provenance.
std::string machine_descriptor();

// Key=value summary plus a per-sample CSV; the pair parses back losslessly.
void write_bench_report(const BenchReport& report, const std::filesystem::path& summary_path,
                        const std::filesystem::path& csv_path);
BenchReport read_bench_report(const std::filesystem::path& summary_path,
                              const std::filesystem::path& csv_path);

std::string format_bench_summary(const BenchReport& report);

}  // namespace adbn
