#include "bsn/hxm.hpp"

#include <string>

#include "bsn/crc.hpp"

namespace bsn {
namespace {

constexpr std::size_t kPayloadOffset = 3;
constexpr std::size_t kCrcOffset = kPayloadOffset + hxm::kDlc;

struct HxmCodec {
    using Message = HxmMessage;
    static constexpr std::size_t frame_size = hxm::kFrameSize;
    static constexpr std::uint8_t start_marker = hxm::kStx;
    static DecodeStatus try_decode(ByteView frame, HxmMessage& out) noexcept {
        return try_decode_hxm(frame, out);
    }
};

}  // namespace

const char* to_string(DecodeStatus s) {
    switch (s) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::bad_frame: return "bad-frame";
        case DecodeStatus::bad_crc: return "bad-crc";
        case DecodeStatus::bad_field: return "bad-field";
    }
    return "unknown";
}

bool hxm_fields_valid(const HxmMessage& msg) noexcept {
    const bool hr_ok = msg.heart_rate == 0 ||
                       (msg.heart_rate >= hxm::kMinHeartRate && msg.heart_rate <= hxm::kMaxHeartRate);
    return hr_ok && msg.speed_raw <= hxm::kMaxSpeedRaw;
}

Bytes encode_hxm(const HxmMessage& msg) {
    if (!hxm_fields_valid(msg)) {
        throw CodecError(CodecError::Kind::invalid_field,
                         "hxm: heart_rate " + std::to_string(msg.heart_rate) + " / speed_raw " +
                             std::to_string(msg.speed_raw) + " out of range");
    }
    Bytes frame(hxm::kFrameSize, 0);
    frame[0] = hxm::kStx;
    frame[1] = hxm::kMsgId;
    frame[2] = hxm::kDlc;
    std::uint8_t* p = frame.data() + kPayloadOffset;
    put_u16le(p + 0, msg.firmware_id);
    put_u16le(p + 2, msg.firmware_version);
    put_u16le(p + 4, msg.hardware_id);
    put_u16le(p + 6, msg.hardware_version);
    p[8] = msg.battery_charge;
    p[9] = msg.heart_rate;
    p[10] = msg.heart_beat_number;
    for (std::size_t i = 0; i < HxmMessage::kTimestampSlots; ++i) {
        put_u16le(p + 11 + 2 * i, msg.beat_timestamps[i]);
    }
    put_u16le(p + 44, msg.distance_raw);
    put_u16le(p + 46, msg.speed_raw);
    p[48] = msg.strides;
    frame[kCrcOffset] = crc8(ByteView(p, hxm::kDlc));
    frame[kCrcOffset + 1] = hxm::kEtx;
    return frame;
}

DecodeStatus try_decode_hxm(ByteView frame, HxmMessage& out) noexcept {
    if (frame.size() != hxm::kFrameSize || frame[0] != hxm::kStx || frame[1] != hxm::kMsgId ||
        frame[2] != hxm::kDlc || frame[hxm::kFrameSize - 1] != hxm::kEtx) {
        return DecodeStatus::bad_frame;
    }
    const std::uint8_t* p = frame.data() + kPayloadOffset;
    if (crc8(ByteView(p, hxm::kDlc)) != frame[kCrcOffset]) {
        return DecodeStatus::bad_crc;
    }
    HxmMessage msg;
    msg.firmware_id = get_u16le(p + 0);
    msg.firmware_version = get_u16le(p + 2);
    msg.hardware_id = get_u16le(p + 4);
    msg.hardware_version = get_u16le(p + 6);
    msg.battery_charge = p[8];
    msg.heart_rate = p[9];
    msg.heart_beat_number = p[10];
    for (std::size_t i = 0; i < HxmMessage::kTimestampSlots; ++i) {
        msg.beat_timestamps[i] = get_u16le(p + 11 + 2 * i);
    }
    msg.distance_raw = get_u16le(p + 44);
    msg.speed_raw = get_u16le(p + 46);
    msg.strides = p[48];
    if (!hxm_fields_valid(msg)) {
        return DecodeStatus::bad_field;
    }
    out = msg;
    return DecodeStatus::ok;
}

HxmMessage decode_hxm(ByteView frame) {
    HxmMessage msg;
    switch (try_decode_hxm(frame, msg)) {
        case DecodeStatus::ok: return msg;
        case DecodeStatus::bad_frame:
            throw CodecError(CodecError::Kind::bad_frame, "hxm: framing mismatch");
        case DecodeStatus::bad_crc:
            throw CodecError(CodecError::Kind::bad_crc, "hxm: crc mismatch");
        case DecodeStatus::bad_field:
            break;
    }
    throw CodecError(CodecError::Kind::bad_field, "hxm: field out of range");
}

std::vector<HxmMessage> scan(FramerState& state, ByteView chunk) {
    return detail::scan_frames<HxmCodec>(state, chunk);
}

double speed_mps(std::uint16_t speed_raw) {
    if (speed_raw > hxm::kMaxSpeedRaw) {
        throw CodecError(CodecError::Kind::invalid_field,
                         "hxm: speed_raw " + std::to_string(speed_raw) + " exceeds 4095");
    }
    return speed_raw / 256.0;
}

double distance_m(std::uint16_t distance_raw) noexcept {
    return distance_raw / 16.0;
}

}  // namespace bsn
