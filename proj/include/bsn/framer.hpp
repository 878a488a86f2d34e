#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "bsn/bytes.hpp"
#include "bsn/codec_error.hpp"

namespace bsn {

/// Resynchronizing state for one byte stream. Bytes that end up outside an
/// accepted frame are counted in bytes_skipped, so for a fully consumed
/// stream `frames_ok * frame_size + bytes_skipped` equals the stream length.
struct FramerState {
    Bytes pending;
    std::uint64_t frames_ok = 0;
    std::uint64_t frames_rejected = 0;  // framed candidates failing CRC or field checks
    std::uint64_t bytes_skipped = 0;

    bool operator==(const FramerState&) const = default;
};

namespace detail {

// Codec requirements:
//   using Message;
//   static constexpr std::size_t frame_size;
//   static constexpr std::uint8_t start_marker;
//   static DecodeStatus try_decode(ByteView frame, Message& out) noexcept;
template <typename Codec>
std::vector<typename Codec::Message> scan_frames(FramerState& state, ByteView chunk) {
    std::vector<typename Codec::Message> out;
    if (chunk.empty()) {
        return out;
    }
    Bytes& buf = state.pending;
    buf.insert(buf.end(), chunk.begin(), chunk.end());

    std::size_t pos = 0;
    const std::size_t n = buf.size();
    while (pos < n) {
        auto stx = std::find(buf.begin() + static_cast<std::ptrdiff_t>(pos), buf.end(),
                             Codec::start_marker);
        const auto stx_pos = static_cast<std::size_t>(stx - buf.begin());
        state.bytes_skipped += stx_pos - pos;
        pos = stx_pos;
        if (pos == n || n - pos < Codec::frame_size) {
            break;
        }
        typename Codec::Message msg;
        const auto status = Codec::try_decode(ByteView(buf.data() + pos, Codec::frame_size), msg);
        if (status == DecodeStatus::ok) {
            out.push_back(msg);
            ++state.frames_ok;
            pos += Codec::frame_size;
            continue;
        }
        // A marker mismatch means this was never a frame; only well-framed
        // candidates count as rejected.
        if (status != DecodeStatus::bad_frame) {
            ++state.frames_rejected;
        }
        ++state.bytes_skipped;
        ++pos;
    }
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
    return out;
}

}  // namespace detail

/// Drops any partial frame held in `state`, e.g. after a link reconnect.
inline void discard_pending(FramerState& state) {
    state.bytes_skipped += state.pending.size();
    state.pending.clear();
}

}  // namespace bsn
