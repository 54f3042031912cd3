// Binary model container.
//
// Layout (all integers little-endian, all floats IEEE-754 binary64 LE):
//   magic           8 bytes, "ADBNMODL"
//   version         u32, currently 1
//   input_dim       u32
//   n_layers        u32
//   hidden_size[k]  u32 per layer
//   n_classes       u32
//   preprocess_hash u32
//   params          f64 block: per layer visible bias, hidden bias,
//                   weights column-major; then head weights column-major
//                   and head bias
//   n_log_lines     u32
//   log lines       u32 byte length + UTF-8 bytes, one per structure event
//   checksum        u32 CRC-32C of every preceding byte
//
// Readers reject bad magic, unknown versions, truncated files, dimension
// headers that disagree with the payload size, and checksum mismatches.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "adbn/dbn.hpp"

namespace adbn {

inline constexpr char kModelMagic[8] = {'A', 'D', 'B', 'N', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const DbnModel& model, std::ostream& out);
void save_model(const DbnModel& model, const std::filesystem::path& path);

DbnModel load_model(std::istream& in);
DbnModel load_model(const std::filesystem::path& path);

}  // namespace adbn
