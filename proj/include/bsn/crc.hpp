#pragma once

#include <cstdint>

#include "bsn/bytes.hpp"

namespace bsn {

/// CRC-8, reflected polynomial 0x8C (normal form 0x31), init 0x00, no final
/// xor. Used for the HxM payload.
std::uint8_t crc8(ByteView data);

/// CRC-16/CCITT-FALSE: polynomial 0x1021, init 0xFFFF, unreflected, no final
/// xor. Used for the Shimmer packet body.
std::uint16_t crc16(ByteView data);

}  // namespace bsn
