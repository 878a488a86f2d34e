#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsn/bytes.hpp"
#include "bsn/codec_error.hpp"
#include "bsn/framer.hpp"

namespace bsn {

/// Zephyr HxM standard data message.
///
/// Frame: STX(0x02) MsgID(0x26) DLC(52) payload[52] CRC8 ETX(0x03), 57 bytes.
/// Payload, little-endian multi-byte fields:
///
///   off  size  field
///    0    2    firmware_id
///    2    2    firmware_version
///    4    2    hardware_id
///    6    2    hardware_version
///    8    1    battery_charge
///    9    1    heart_rate
///   10    1    heart_beat_number
///   11   30    beat_timestamps[15], newest first
///   41    3    reserved (zero on encode, ignored on decode)
///   44    2    distance_raw
///   46    2    speed_raw
///   48    1    strides
///   49    3    reserved
struct HxmMessage {
    static constexpr std::size_t kTimestampSlots = 15;

    std::uint16_t firmware_id = 0;
    std::uint16_t firmware_version = 0;
    std::uint16_t hardware_id = 0;
    std::uint16_t hardware_version = 0;
    std::uint8_t battery_charge = 0;     // percent
    std::uint8_t heart_rate = 0;         // bpm; 0 = not detected, else 30..240
    std::uint8_t heart_beat_number = 0;  // mod 256
    std::array<std::uint16_t, kTimestampSlots> beat_timestamps{};  // ms mod 65536
    std::uint16_t distance_raw = 0;  // 1/16 m, wraps at 4096 (256 m)
    std::uint16_t speed_raw = 0;     // 1/256 m/s, 0..4095
    std::uint8_t strides = 0;        // mod 256

    bool operator==(const HxmMessage&) const = default;
};

namespace hxm {
inline constexpr std::uint8_t kStx = 0x02;
inline constexpr std::uint8_t kEtx = 0x03;
inline constexpr std::uint8_t kMsgId = 0x26;
inline constexpr std::uint8_t kDlc = 52;
inline constexpr std::size_t kFrameSize = 57;
inline constexpr std::uint8_t kMinHeartRate = 30;
inline constexpr std::uint8_t kMaxHeartRate = 240;
inline constexpr std::uint16_t kMaxSpeedRaw = 4095;
inline constexpr std::uint32_t kDistanceModulus = 4096;
}  // namespace hxm

/// Field-range check shared by encoder and decoder.
bool hxm_fields_valid(const HxmMessage& msg) noexcept;

/// Throws CodecError(invalid_field) when the message violates a field range.
Bytes encode_hxm(const HxmMessage& msg);

/// Non-throwing decode of exactly one candidate frame.
DecodeStatus try_decode_hxm(ByteView frame, HxmMessage& out) noexcept;

/// Throwing decode; CodecError kind is bad_frame, bad_crc or bad_field.
HxmMessage decode_hxm(ByteView frame);

/// Emits every complete valid frame in pending+chunk, in stream order.
std::vector<HxmMessage> scan(FramerState& state, ByteView chunk);

/// speed_raw / 256. Throws CodecError(invalid_field) above 4095.
double speed_mps(std::uint16_t speed_raw);

/// distance_raw / 16.
double distance_m(std::uint16_t distance_raw) noexcept;

}  // namespace bsn
