#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsn/bytes.hpp"
#include "bsn/codec_error.hpp"
#include "bsn/framer.hpp"

namespace bsn {

/// One 14-byte Shimmer EMG packet.
///
///   byte  0      BOF 0x02
///   byte  1      sensor_id
///   byte  2      data_type (0x45 = EMG)
///   byte  3      sequence
///   bytes 4-5    timestamp_ms (LE)
///   byte  6      emg_len
///   bytes 7-8    emg_raw (LE)
///   bytes 9-10   battery_mv (LE), zero unless the battery is low
///   bytes 11-12  CRC-16/CCITT-FALSE over bytes 1-10 (LE)
///   byte  13     EOF 0x03
struct ShimmerPacket {
    std::uint8_t sensor_id = 0;
    std::uint8_t data_type = 0x45;
    std::uint8_t sequence = 0;
    std::uint16_t timestamp_ms = 0;
    std::uint8_t emg_len = 0;
    std::uint16_t emg_raw = 0;
    std::uint16_t battery_mv = 0;

    bool operator==(const ShimmerPacket&) const = default;
};

namespace shimmer {
inline constexpr std::uint8_t kBof = 0x02;
inline constexpr std::uint8_t kEof = 0x03;
inline constexpr std::uint8_t kTypeEmg = 0x45;
inline constexpr std::size_t kFrameSize = 14;
inline constexpr std::uint16_t kMaxEmgRaw = 4095;
inline constexpr std::uint16_t kLowBatteryMv = 3000;
inline constexpr double kSampleRateHz = 500.0;
inline constexpr double kDefaultAdcSpanMv = 3000.0;
}  // namespace shimmer

bool shimmer_fields_valid(const ShimmerPacket& p) noexcept;

Bytes encode_shimmer(const ShimmerPacket& p);
DecodeStatus try_decode_shimmer(ByteView frame, ShimmerPacket& out) noexcept;
ShimmerPacket decode_shimmer(ByteView frame);
std::vector<ShimmerPacket> scan_shimmer(FramerState& state, ByteView chunk);

/// Centered ADC conversion: (raw / 4095 - 0.5) * span_mv.
double emg_millivolts(std::uint16_t emg_raw, double adc_span_mv = shimmer::kDefaultAdcSpanMv);

/// Inverse of emg_millivolts, rounded and clamped to the 12-bit range.
std::uint16_t emg_raw_from_millivolts(double mv, double adc_span_mv = shimmer::kDefaultAdcSpanMv);

}  // namespace bsn
