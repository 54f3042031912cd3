#include "adbn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace adbn {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"seed", "1"},
        {"out_dir", "out"},
        {"data.root", ""},
        {"data.manifest", ""},
        {"data.target_side", "32"},
        {"data.grayscale", "1"},
        {"synth.train_per_class", "1000"},
        {"synth.test_per_class", "200"},
        {"synth.side", "32"},
        {"synth.crack_min_width", "2"},
        {"synth.crack_max_width", "3"},
        {"synth.noise_level", "0.05"},
        {"cd.learning_rate", "0.1"},
        {"cd.steps", "1"},
        {"cd.batch_size", "32"},
        {"struct.theta_g", "0.15"},
        {"struct.theta_a", "1e-6"},
        {"struct.theta_l1", "0.05"},
        {"struct.theta_l2", "0.05"},
        {"struct.min_epochs_before_edit", "10"},
        {"struct.max_hidden", "256"},
        {"struct.max_layers", "2"},
        {"train.epochs_per_layer", "60"},
        {"train.initial_hidden", "64"},
        {"train.monitor_interval", "2"},
        {"train.monitor_batch", "256"},
        {"train.noise_scale", "0.01"},
        {"train.weight_init_stddev", "0.1"},
        {"train.hidden_bias_init", "-2"},
        {"train.wd_floor", "1e-3"},
        {"train.patience", "5"},
        {"train.smoothing_window", "10"},
        {"train.head_epochs", "1500"},
        {"train.head_lr", "2"},
        {"finetune.epochs", "30"},
        {"finetune.lr", "0.1"},
        {"finetune.batch_size", "32"},
        {"finetune.omega", "2"},
        {"finetune.patience", "10"},
        {"prune.threshold", "0.01"},
        {"prune.var_threshold", "1e-4"},
        {"bench.warmup", "50"},
        {"bench.iterations", "1000"},
        {"bench.forward_only", "0"},
        {"bench.frame_side", "256"},
        {"bench.pool_size", "16"},
        {"bench.target_fps", "30"},
        {"bench.frames_dir", ""},
    };
    return table;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

const std::map<std::string, std::string>& RunConfig::schema_defaults() { return defaults(); }

bool RunConfig::is_known_key(const std::string& key) { return defaults().count(key) != 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    it->second = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw UsageError(path.string() + ":" + std::to_string(line_no) +
                             ": expected key=value, got '" + text + "'");
        set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
}

const std::string& RunConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string& text = get_string(key);
    char* end = nullptr;
    const long long value = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "' expects an integer, got '" + text + "'");
    return value;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& text = get_string(key);
    char* end = nullptr;
    const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "' expects an unsigned integer, got '" + text +
                         "'");
    return value;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& text = get_string(key);
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "' expects a number, got '" + text + "'");
    return value;
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string text = get_string(key);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw UsageError("config key '" + key + "' expects a boolean, got '" + text + "'");
}

std::string RunConfig::snapshot() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
    return out.str();
}

void RunConfig::write_snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UsageError("cannot write config snapshot to " + path.string());
    out << snapshot();
}

PreprocessConfig preprocess_config_from(const RunConfig& config) {
    PreprocessConfig pp;
    pp.target_side = static_cast<int>(config.get_int("data.target_side"));
    pp.grayscale = config.get_bool("data.grayscale");
    pp.validate();
    return pp;
}

SyntheticConfig synthetic_config_from(const RunConfig& config, int n_per_class) {
    SyntheticConfig synth;
    synth.n_per_class = n_per_class;
    synth.side = static_cast<int>(config.get_int("synth.side"));
    synth.crack_min_width = config.get_double("synth.crack_min_width");
    synth.crack_max_width = config.get_double("synth.crack_max_width");
    synth.noise_level = config.get_double("synth.noise_level");
    synth.seed = config.get_u64("seed");
    synth.validate();
    return synth;
}

CdConfig cd_config_from(const RunConfig& config) {
    CdConfig cd;
    cd.learning_rate = config.get_double("cd.learning_rate");
    cd.cd_steps = static_cast<int>(config.get_int("cd.steps"));
    cd.batch_size = static_cast<int>(config.get_int("cd.batch_size"));
    cd.validate();
    return cd;
}

StructureThresholds thresholds_from(const RunConfig& config) {
    StructureThresholds thresholds;
    thresholds.theta_generation = config.get_double("struct.theta_g");
    thresholds.theta_annihilation = config.get_double("struct.theta_a");
    thresholds.theta_layer_wd = config.get_double("struct.theta_l1");
    thresholds.theta_layer_energy = config.get_double("struct.theta_l2");
    thresholds.min_epochs_before_edit =
        static_cast<int>(config.get_int("struct.min_epochs_before_edit"));
    thresholds.max_hidden = static_cast<int>(config.get_int("struct.max_hidden"));
    thresholds.max_layers = static_cast<int>(config.get_int("struct.max_layers"));
    thresholds.validate();
    return thresholds;
}

TrainConfig train_config_from(const RunConfig& config) {
    TrainConfig train;
    train.cd = cd_config_from(config);
    train.epochs_per_layer = static_cast<int>(config.get_int("train.epochs_per_layer"));
    train.initial_hidden = static_cast<int>(config.get_int("train.initial_hidden"));
    train.monitor_interval = static_cast<int>(config.get_int("train.monitor_interval"));
    train.monitor_batch = static_cast<int>(config.get_int("train.monitor_batch"));
    train.generation_noise = config.get_double("train.noise_scale");
    train.weight_init_stddev = config.get_double("train.weight_init_stddev");
    train.hidden_bias_init = config.get_double("train.hidden_bias_init");
    train.wd_floor = config.get_double("train.wd_floor");
    train.patience = static_cast<int>(config.get_int("train.patience"));
    train.smoothing_window = static_cast<int>(config.get_int("train.smoothing_window"));
    train.head_epochs = static_cast<int>(config.get_int("train.head_epochs"));
    train.head_learning_rate = config.get_double("train.head_lr");
    train.validate();
    return train;
}

FinetuneConfig finetune_config_from(const RunConfig& config) {
    FinetuneConfig ft;
    ft.epochs = static_cast<int>(config.get_int("finetune.epochs"));
    ft.learning_rate = config.get_double("finetune.lr");
    ft.batch_size = static_cast<int>(config.get_int("finetune.batch_size"));
    ft.misclassified_weight = config.get_double("finetune.omega");
    ft.patience = static_cast<int>(config.get_int("finetune.patience"));
    ft.validate();
    return ft;
}

PruneConfig prune_config_from(const RunConfig& config) {
    PruneConfig prune;
    prune.prune_threshold = config.get_double("prune.threshold");
    prune.activation_var_threshold = config.get_double("prune.var_threshold");
    prune.validate();
    return prune;
}

BenchConfig bench_config_from(const RunConfig& config) {
    BenchConfig bench;
    bench.warmup = static_cast<int>(config.get_int("bench.warmup"));
    bench.iterations = static_cast<int>(config.get_int("bench.iterations"));
    bench.forward_only = config.get_bool("bench.forward_only");
    bench.validate();
    return bench;
}

FrameStreamConfig frame_stream_config_from(const RunConfig& config) {
    FrameStreamConfig stream;
    const std::string dir = config.get_string("bench.frames_dir");
    stream.source =
        dir.empty() ? FrameStreamConfig::Source::synthetic : FrameStreamConfig::Source::directory;
    stream.directory = dir;
    stream.frame_side = static_cast<int>(config.get_int("bench.frame_side"));
    stream.target_fps = config.get_double("bench.target_fps");
    stream.pool_size = static_cast<int>(config.get_int("bench.pool_size"));
    stream.seed = config.get_u64("seed");
    stream.validate();
    return stream;
}

}  // namespace adbn
