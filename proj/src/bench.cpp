#include "adbn/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace adbn {
namespace {

std::string fmt_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

double parse_double(const std::string& text, const std::string& key) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw DataError("bench report: cannot parse " + key + "=" + text);
    return value;
}

long parse_long(const std::string& text, const std::string& key) {
    char* end = nullptr;
    const long value = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
        throw DataError("bench report: cannot parse " + key + "=" + text);
    return value;
}

std::string single_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

bool has_image_ext(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace

void FrameStreamConfig::validate() const {
    if (frame_side < 8) throw UsageError("bench frame side must be >= 8");
    if (target_fps <= 0.0) throw UsageError("bench target fps must be > 0");
    if (source == Source::synthetic && pool_size < 1)
        throw UsageError("bench synthetic pool size must be >= 1");
    if (source == Source::directory && directory.empty())
        throw UsageError("bench directory source requires a directory path");
}

FrameStream::FrameStream(const FrameStreamConfig& config) : config_(config) {
    config_.validate();
    if (config_.source == FrameStreamConfig::Source::synthetic) {
        SyntheticConfig synth;
        synth.n_per_class = (config_.pool_size + 1) / 2;
        synth.side = config_.frame_side;
        synth.seed = config_.seed;
        pool_ = generate_synthetic_crack_set(synth);
        pool_.resize(static_cast<std::size_t>(config_.pool_size));
    } else {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(config_.directory))
            if (entry.is_regular_file() && has_image_ext(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& file : files) pool_.push_back(load_image(file));
        if (pool_.empty())
            throw DataError("no images under " + config_.directory.string() +
                            " to stream frames from");
    }
}

const ImagePatch& FrameStream::next() {
    const ImagePatch& frame = pool_[cursor_];
    cursor_ = (cursor_ + 1) % pool_.size();
    return frame;
}

void BenchConfig::validate() const {
    if (warmup < 0) throw UsageError("bench.warmup must be >= 0");
    if (iterations < 1) throw UsageError("bench.iterations must be >= 1");
}

void BenchReport::check_consistent() const {
    if (samples_ms.size() != static_cast<std::size_t>(iterations))
        throw ContractError("bench report sample count does not match its iteration count");
    if (mean_ms > 0.0 && std::abs(fps * mean_ms - 1000.0) > 1e-6)
        throw ContractError("bench report violates fps * mean_ms = 1000");
}

BenchReport benchmark_inference(const DbnModel& model, FrameStream& stream,
                                const PreprocessConfig& preprocess_config,
                                const BenchConfig& config, std::string model_id) {
    config.validate();
    preprocess_config.validate();
    model.check_consistent();
    if (preprocess_config.feature_dim() != model.input_dim)
        throw UsageError("preprocessing produces " +
                         std::to_string(preprocess_config.feature_dim()) +
                         " features but the model expects " + std::to_string(model.input_dim));

    if (model_id.empty()) {
        std::ostringstream id;
        id << model.input_dim;
        for (Eigen::Index size : model.hidden_sizes()) id << "->" << size;
        id << "->" << model.num_classes();
        model_id = id.str();
    }

    using clock = std::chrono::steady_clock;
    double sink = 0.0;

    for (int i = 0; i < config.warmup; ++i) {
        const Eigen::VectorXd features = preprocess(stream.next(), preprocess_config);
        sink += forward(model, features)[0];
    }

    BenchReport report;
    report.model_id = std::move(model_id);
    report.machine = machine_descriptor();
    report.warmup = config.warmup;
    report.iterations = config.iterations;
    report.forward_only = config.forward_only;
    report.target_fps = stream.config().target_fps;
    report.samples_ms.reserve(static_cast<std::size_t>(config.iterations));

    for (int i = 0; i < config.iterations; ++i) {
        const ImagePatch& frame = stream.next();
        if (config.forward_only) {
            const Eigen::VectorXd features = preprocess(frame, preprocess_config);
            const auto t0 = clock::now();
            sink += forward(model, features)[0];
            const auto t1 = clock::now();
            report.samples_ms.push_back(
                std::chrono::duration<double, std::milli>(t1 - t0).count());
        } else {
            const auto t0 = clock::now();
            const Eigen::VectorXd features = preprocess(frame, preprocess_config);
            sink += forward(model, features)[0];
            const auto t1 = clock::now();
            report.samples_ms.push_back(
                std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }
    volatile double keep_alive = sink;
    (void)keep_alive;

    double total = 0.0;
    report.min_ms = report.samples_ms.front();
    report.max_ms = report.samples_ms.front();
    for (double sample : report.samples_ms) {
        total += sample;
        report.min_ms = std::min(report.min_ms, sample);
        report.max_ms = std::max(report.max_ms, sample);
    }
    report.mean_ms = total / static_cast<double>(report.samples_ms.size());
    double sq = 0.0;
    for (double sample : report.samples_ms) {
        const double d = sample - report.mean_ms;
        sq += d * d;
    }
    report.stddev_ms = std::sqrt(sq / static_cast<double>(report.samples_ms.size()));
    report.fps = 1000.0 / report.mean_ms;
    report.check_consistent();
    return report;
}

BenchComparison compare_models(const BenchReport& a, const BenchReport& b) {
    BenchComparison cmp;
    cmp.latency_delta_percent = (a.mean_ms - b.mean_ms) / a.mean_ms * 100.0;
    cmp.fps_delta = b.fps - a.fps;
    cmp.machine_mismatch = a.machine != b.machine;
    return cmp;
}

std::string machine_descriptor() {
    std::ostringstream out;
    utsname info{};
    if (uname(&info) == 0)
        out << info.sysname << ' ' << info.release << ' ' << info.machine;
    else
        out << "unknown-os";

    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    std::string cpu_model = "unknown-cpu";
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                cpu_model = line.substr(colon + 1);
                const auto first = cpu_model.find_first_not_of(' ');
                if (first != std::string::npos) cpu_model = cpu_model.substr(first);
            }
            break;
        }
    }
    out << "; " << cpu_model << "; " << std::thread::hardware_concurrency() << " threads";
    return single_line(out.str());
}

std::string format_bench_summary(const BenchReport& report) {
    std::ostringstream out;
    out << "model_id=" << single_line(report.model_id) << '\n';
    out << "machine=" << single_line(report.machine) << '\n';
    out << "warmup=" << report.warmup << '\n';
    out << "iterations=" << report.iterations << '\n';
    out << "forward_only=" << (report.forward_only ? 1 : 0) << '\n';
    out << "target_fps=" << fmt_double(report.target_fps) << '\n';
    out << "mean_ms=" << fmt_double(report.mean_ms) << '\n';
    out << "min_ms=" << fmt_double(report.min_ms) << '\n';
    out << "max_ms=" << fmt_double(report.max_ms) << '\n';
    out << "stddev_ms=" << fmt_double(report.stddev_ms) << '\n';
    out << "fps=" << fmt_double(report.fps) << '\n';
    return out.str();
}

void write_bench_report(const BenchReport& report, const fs::path& summary_path,
                        const fs::path& csv_path) {
    {
        std::ofstream out(summary_path, std::ios::trunc);
        if (!out) throw DataError("cannot open " + summary_path.string() + " for writing");
        out << format_bench_summary(report);
    }
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw DataError("cannot open " + csv_path.string() + " for writing");
    csv << "sample,latency_ms\n";
    for (std::size_t i = 0; i < report.samples_ms.size(); ++i)
        csv << i << ',' << fmt_double(report.samples_ms[i]) << '\n';
}

BenchReport read_bench_report(const fs::path& summary_path, const fs::path& csv_path) {
    std::ifstream in(summary_path);
    if (!in) throw DataError("cannot open " + summary_path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("bench report: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw DataError("bench report: missing key '" + std::string(key) + "'");
        return it->second;
    };

    BenchReport report;
    report.model_id = need("model_id");
    report.machine = need("machine");
    report.warmup = static_cast<int>(parse_long(need("warmup"), "warmup"));
    report.iterations = static_cast<int>(parse_long(need("iterations"), "iterations"));
    report.forward_only = parse_long(need("forward_only"), "forward_only") != 0;
    report.target_fps = parse_double(need("target_fps"), "target_fps");
    report.mean_ms = parse_double(need("mean_ms"), "mean_ms");
    report.min_ms = parse_double(need("min_ms"), "min_ms");
    report.max_ms = parse_double(need("max_ms"), "max_ms");
    report.stddev_ms = parse_double(need("stddev_ms"), "stddev_ms");
    report.fps = parse_double(need("fps"), "fps");

    std::ifstream csv(csv_path);
    if (!csv) throw DataError("cannot open " + csv_path.string());
    if (!std::getline(csv, line) || line != "sample,latency_ms")
        throw DataError("bench csv: missing 'sample,latency_ms' header");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError("bench csv: malformed row '" + line + "'");
        report.samples_ms.push_back(parse_double(line.substr(comma + 1), "latency_ms"));
    }
    report.check_consistent();
    return report;
}

}  // namespace adbn
