#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace adbn {

// CRC-32C (Castagnoli polynomial), table-driven. Known vector:
// crc32c("123456789") == 0xE3069283.
class Crc32c {
public:
    void update(const void* data, std::size_t length);
    std::uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

private:
    std::uint32_t state_ = 0xFFFFFFFFu;
};

std::uint32_t crc32c(const void* data, std::size_t length);
std::uint32_t crc32c(std::string_view text);

}  // namespace adbn
