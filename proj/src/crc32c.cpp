#include "adbn/crc32c.hpp"

#include <array>

namespace adbn {
namespace {

constexpr std::array<std::uint32_t, 256> kTable = [] {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t crc = i;
        for (int bit = 0; bit < 8; ++bit)
            crc = (crc & 1u) ? (crc >> 1) ^ 0x82F63B78u : crc >> 1;
        table[i] = crc;
    }
    return table;
}();

}  // namespace

void Crc32c::update(const void* data, std::size_t length) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < length; ++i)
        state_ = kTable[(state_ ^ bytes[i]) & 0xFFu] ^ (state_ >> 8);
}

std::uint32_t crc32c(const void* data, std::size_t length) {
    Crc32c crc;
    crc.update(data, length);
    return crc.value();
}

std::uint32_t crc32c(std::string_view text) { return crc32c(text.data(), text.size()); }

}  // namespace adbn
