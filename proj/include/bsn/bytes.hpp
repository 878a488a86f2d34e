#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bsn {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline void put_u16le(std::uint8_t* out, std::uint16_t v) {
    out[0] = static_cast<std::uint8_t>(v & 0xFF);
    out[1] = static_cast<std::uint8_t>(v >> 8);
}

inline std::uint16_t get_u16le(const std::uint8_t* in) {
    return static_cast<std::uint16_t>(in[0] | (in[1] << 8));
}

// Uppercase hex, no separators.
std::string to_hex(ByteView bytes);

// Accepts upper/lower case and ignores whitespace. Throws std::invalid_argument
// on odd length or non-hex characters.
Bytes from_hex(std::string_view text);

}  // namespace bsn
