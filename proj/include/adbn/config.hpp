// Flat key=value run configuration. Every run resolves to a full snapshot
// (all keys, sorted) that alone reproduces the run bit-identically.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adbn/bench.hpp"
#include "adbn/data.hpp"
#include "adbn/dbn.hpp"
#include "adbn/finetune.hpp"
#include "adbn/structure.hpp"

namespace adbn {

class RunConfig {
  public:
    // Starts from the full default schema; every known key has a value.
    RunConfig();

    static const std::map<std::string, std::string>& schema_defaults();
    static bool is_known_key(const std::string& key);

    // Rejects unknown keys with a usage error naming the offending key.
    void set(const std::string& key, const std::string& value);

    // key=value lines; blank lines and lines starting with '#' are skipped.
    void load_file(const std::filesystem::path& path);

    const std::string& get_string(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // Sorted key=value lines covering every key.
    std::string snapshot() const;
    void write_snapshot(const std::filesystem::path& path) const;

  private:
    std::map<std::string, std::string> values_;
};

// Typed views over the flat keys.
PreprocessConfig preprocess_config_from(const RunConfig& config);
SyntheticConfig synthetic_config_from(const RunConfig& config, int n_per_class);
CdConfig cd_config_from(const RunConfig& config);
StructureThresholds thresholds_from(const RunConfig& config);
TrainConfig train_config_from(const RunConfig& config);
FinetuneConfig finetune_config_from(const RunConfig& config);
PruneConfig prune_config_from(const RunConfig& config);
BenchConfig bench_config_from(const RunConfig& config);
FrameStreamConfig frame_stream_config_from(const RunConfig& config);

}  // namespace adbn
