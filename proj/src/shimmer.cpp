#include "bsn/shimmer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsn/crc.hpp"

namespace bsn {
namespace {

constexpr std::size_t kBodyOffset = 1;
constexpr std::size_t kBodySize = 10;
constexpr std::size_t kCrcOffset = kBodyOffset + kBodySize;

struct ShimmerCodec {
    using Message = ShimmerPacket;
    static constexpr std::size_t frame_size = shimmer::kFrameSize;
    static constexpr std::uint8_t start_marker = shimmer::kBof;
    static DecodeStatus try_decode(ByteView frame, ShimmerPacket& out) noexcept {
        return try_decode_shimmer(frame, out);
    }
};

}  // namespace

bool shimmer_fields_valid(const ShimmerPacket& p) noexcept {
    return p.emg_len <= 2 && p.emg_raw <= shimmer::kMaxEmgRaw &&
           p.battery_mv <= shimmer::kLowBatteryMv;
}

Bytes encode_shimmer(const ShimmerPacket& p) {
    if (!shimmer_fields_valid(p)) {
        throw CodecError(CodecError::Kind::invalid_field,
                         "shimmer: emg_len " + std::to_string(p.emg_len) + " / emg_raw " +
                             std::to_string(p.emg_raw) + " / battery_mv " +
                             std::to_string(p.battery_mv) + " out of range");
    }
    Bytes frame(shimmer::kFrameSize, 0);
    frame[0] = shimmer::kBof;
    frame[1] = p.sensor_id;
    frame[2] = p.data_type;
    frame[3] = p.sequence;
    put_u16le(&frame[4], p.timestamp_ms);
    frame[6] = p.emg_len;
    put_u16le(&frame[7], p.emg_raw);
    put_u16le(&frame[9], p.battery_mv);
    put_u16le(&frame[kCrcOffset], crc16(ByteView(frame.data() + kBodyOffset, kBodySize)));
    frame[13] = shimmer::kEof;
    return frame;
}

DecodeStatus try_decode_shimmer(ByteView frame, ShimmerPacket& out) noexcept {
    if (frame.size() != shimmer::kFrameSize || frame[0] != shimmer::kBof ||
        frame[13] != shimmer::kEof) {
        return DecodeStatus::bad_frame;
    }
    if (crc16(frame.subspan(kBodyOffset, kBodySize)) != get_u16le(&frame[kCrcOffset])) {
        return DecodeStatus::bad_crc;
    }
    ShimmerPacket p;
    p.sensor_id = frame[1];
    p.data_type = frame[2];
    p.sequence = frame[3];
    p.timestamp_ms = get_u16le(&frame[4]);
    p.emg_len = frame[6];
    p.emg_raw = get_u16le(&frame[7]);
    p.battery_mv = get_u16le(&frame[9]);
    if (!shimmer_fields_valid(p)) {
        return DecodeStatus::bad_field;
    }
    out = p;
    return DecodeStatus::ok;
}

ShimmerPacket decode_shimmer(ByteView frame) {
    ShimmerPacket p;
    switch (try_decode_shimmer(frame, p)) {
        case DecodeStatus::ok: return p;
        case DecodeStatus::bad_frame:
            throw CodecError(CodecError::Kind::bad_frame, "shimmer: framing mismatch");
        case DecodeStatus::bad_crc:
            throw CodecError(CodecError::Kind::bad_crc, "shimmer: crc mismatch");
        case DecodeStatus::bad_field:
            break;
    }
    throw CodecError(CodecError::Kind::bad_field, "shimmer: field out of range");
}

std::vector<ShimmerPacket> scan_shimmer(FramerState& state, ByteView chunk) {
    return detail::scan_frames<ShimmerCodec>(state, chunk);
}

double emg_millivolts(std::uint16_t emg_raw, double adc_span_mv) {
    return (static_cast<double>(emg_raw) / shimmer::kMaxEmgRaw - 0.5) * adc_span_mv;
}

std::uint16_t emg_raw_from_millivolts(double mv, double adc_span_mv) {
    const double raw = std::round((mv / adc_span_mv + 0.5) * shimmer::kMaxEmgRaw);
    return static_cast<std::uint16_t>(std::clamp(raw, 0.0, static_cast<double>(shimmer::kMaxEmgRaw)));
}

}  // namespace bsn
