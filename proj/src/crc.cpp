#include "bsn/crc.hpp"

#include <array>

namespace bsn {
namespace {

constexpr std::array<std::uint8_t, 256> make_crc8_table() {
    std::array<std::uint8_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        auto c = static_cast<std::uint8_t>(i);
        for (int bit = 0; bit < 8; ++bit) {
            c = (c & 1u) ? static_cast<std::uint8_t>((c >> 1) ^ 0x8C) : static_cast<std::uint8_t>(c >> 1);
        }
        table[i] = c;
    }
    return table;
}

constexpr std::array<std::uint16_t, 256> make_crc16_table() {
    std::array<std::uint16_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        auto c = static_cast<std::uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit) {
            c = (c & 0x8000u) ? static_cast<std::uint16_t>((c << 1) ^ 0x1021)
                              : static_cast<std::uint16_t>(c << 1);
        }
        table[i] = c;
    }
    return table;
}

constexpr auto kCrc8Table = make_crc8_table();
constexpr auto kCrc16Table = make_crc16_table();

}  // namespace

std::uint8_t crc8(ByteView data) {
    std::uint8_t crc = 0x00;
    for (auto b : data) {
        crc = kCrc8Table[crc ^ b];
    }
    return crc;
}

std::uint16_t crc16(ByteView data) {
    std::uint16_t crc = 0xFFFF;
    for (auto b : data) {
        crc = static_cast<std::uint16_t>((crc << 8) ^ kCrc16Table[((crc >> 8) ^ b) & 0xFF]);
    }
    return crc;
}

}  // namespace bsn
