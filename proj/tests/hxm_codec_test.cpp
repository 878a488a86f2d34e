#include "bsn/hxm.hpp"

#include <random>

#include <gtest/gtest.h>

#include "bsn/crc.hpp"
#include "bsn/kv.hpp"
#include "bsn/sim.hpp"
#include "test_support.hpp"

namespace bsn {
namespace {

constexpr std::size_t kHeartRateByte = 3 + 9;

HxmMessage sample_message() {
    HxmMessage m;
    m.heart_rate = 72;
    m.heart_beat_number = 9;
    m.speed_raw = 512;
    m.distance_raw = 100;
    for (std::size_t i = 0; i < m.beat_timestamps.size(); ++i) {
        m.beat_timestamps[i] = static_cast<std::uint16_t>(10000 - 800 * i);
    }
    return m;
}

// Re-seals a tampered payload so only the field check can reject it.
void reseal(Bytes& frame) {
    frame[55] = testing::crc8_bitwise(ByteView(frame.data() + 3, 52));
}

TEST(HxmEncode, FrameShape) {
    const Bytes frame = encode_hxm(sample_message());
    ASSERT_EQ(frame.size(), 57u);
    EXPECT_EQ(frame[0], 0x02);
    EXPECT_EQ(frame[1], 0x26);
    EXPECT_EQ(frame[2], 52);
    EXPECT_EQ(frame[56], 0x03);
    EXPECT_EQ(frame[55], testing::crc8_bitwise(ByteView(frame.data() + 3, 52)));
}

TEST(HxmEncode, ZeroHeartRateIsReportedAsZeroByte) {
    HxmMessage m = sample_message();
    m.heart_rate = 0;
    const Bytes frame = encode_hxm(m);
    EXPECT_EQ(frame[kHeartRateByte], 0x00);
    EXPECT_EQ(decode_hxm(frame).heart_rate, 0);
}

TEST(HxmEncode, AllZeroMessageRoundTrips) {
    const HxmMessage m;
    const Bytes frame = encode_hxm(m);
    EXPECT_EQ(frame.size(), 57u);
    EXPECT_EQ(decode_hxm(frame), m);
}

TEST(HxmEncode, ReservedBytesAreZero) {
    HxmMessage m = sample_message();
    m.strides = 0xFF;
    m.speed_raw = 4095;
    const Bytes frame = encode_hxm(m);
    for (std::size_t off : {44u, 45u, 46u, 52u, 53u, 54u}) {
        EXPECT_EQ(frame[off], 0) << "offset " << off;
    }
}

TEST(HxmEncode, RejectsInvalidFields) {
    for (int hr : {1, 17, 29, 241, 255}) {
        HxmMessage m = sample_message();
        m.heart_rate = static_cast<std::uint8_t>(hr);
        try {
            encode_hxm(m);
            ADD_FAILURE() << "heart rate " << hr << " accepted";
        } catch (const CodecError& e) {
            EXPECT_EQ(e.kind(), CodecError::Kind::invalid_field);
        }
    }
    HxmMessage m = sample_message();
    m.speed_raw = 4096;
    EXPECT_THROW(encode_hxm(m), CodecError);
    for (int hr : {30, 240}) {
        m = sample_message();
        m.heart_rate = static_cast<std::uint8_t>(hr);
        EXPECT_NO_THROW(encode_hxm(m));
    }
}

TEST(HxmDecode, SpeedRawDecodesToMetresPerSecond) {
    HxmMessage m = sample_message();
    m.speed_raw = 256;
    EXPECT_DOUBLE_EQ(speed_mps(decode_hxm(encode_hxm(m)).speed_raw), 1.0);
}

TEST(HxmDecode, RandomRoundTrip) {
    std::mt19937_64 rng(20240101);
    for (int i = 0; i < 10000; ++i) {
        const HxmMessage m = testing::random_hxm(rng);
        const Bytes frame = encode_hxm(m);
        ASSERT_EQ(decode_hxm(frame), m);
        // Canonical form: an accepted frame re-encodes to identical bytes.
        ASSERT_EQ(encode_hxm(decode_hxm(frame)), frame);
    }
}

TEST(HxmDecode, EverySingleBitFlipIsRejected) {
    const Bytes golden = encode_hxm(sample_message());
    for (std::size_t bit = 0; bit < golden.size() * 8; ++bit) {
        Bytes f = golden;
        f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        HxmMessage out;
        const auto status = try_decode_hxm(f, out);
        ASSERT_NE(status, DecodeStatus::ok) << "bit " << bit;
        if (bit / 8 >= 3 && bit / 8 < 55) {
            EXPECT_EQ(status, DecodeStatus::bad_crc) << "payload bit " << bit;
        }
    }
}

TEST(HxmDecode, DistinctErrorKinds) {
    Bytes f = encode_hxm(sample_message());
    f[kHeartRateByte] = 20;
    reseal(f);
    HxmMessage out;
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_field);
    try {
        decode_hxm(f);
        FAIL();
    } catch (const CodecError& e) {
        EXPECT_EQ(e.kind(), CodecError::Kind::bad_field);
    }

    f = encode_hxm(sample_message());
    f[3 + 46] = 0x00;  // speed_raw = 0x1000 once the high byte is set
    f[3 + 47] = 0x10;
    reseal(f);
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_field);

    f = encode_hxm(sample_message());
    f[1] = 0x23;
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_frame);
    f = encode_hxm(sample_message());
    f[2] = 51;
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_frame);
    f = encode_hxm(sample_message());
    f.pop_back();
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_frame);
    f = encode_hxm(sample_message());
    f[55] ^= 0x01;
    EXPECT_EQ(try_decode_hxm(f, out), DecodeStatus::bad_crc);
}

TEST(HxmDecode, ReservedBytesIgnoredWhenCrcValid) {
    Bytes f = encode_hxm(sample_message());
    f[3 + 42] = 0x5A;
    reseal(f);
    EXPECT_EQ(decode_hxm(f), sample_message());
}

TEST(HxmDecode, GoldenFixture) {
    const auto frames = testing::fixture_lines("hxm_golden.hex");
    const KeyValues fields = KeyValues::load(testing::fixture("hxm_golden.fields"));
    ASSERT_EQ(frames.size(), 2u);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string k = std::to_string(i) + ".";
        const Bytes frame = from_hex(frames[i]);
        const HxmMessage m = decode_hxm(frame);
        EXPECT_EQ(m.firmware_id, fields.get_u64(k + "firmware_id"));
        EXPECT_EQ(m.firmware_version, fields.get_u64(k + "firmware_version"));
        EXPECT_EQ(m.hardware_id, fields.get_u64(k + "hardware_id"));
        EXPECT_EQ(m.hardware_version, fields.get_u64(k + "hardware_version"));
        EXPECT_EQ(m.battery_charge, fields.get_u64(k + "battery_charge"));
        EXPECT_EQ(m.heart_rate, fields.get_u64(k + "heart_rate"));
        EXPECT_EQ(m.heart_beat_number, fields.get_u64(k + "heart_beat_number"));
        const auto ts = split(fields.get(k + "beat_timestamps"), ',');
        ASSERT_EQ(ts.size(), 15u);
        for (std::size_t s = 0; s < 15; ++s) {
            EXPECT_EQ(m.beat_timestamps[s], parse_u64(ts[s])) << "slot " << s;
        }
        EXPECT_EQ(m.distance_raw, fields.get_u64(k + "distance_raw"));
        EXPECT_EQ(m.speed_raw, fields.get_u64(k + "speed_raw"));
        EXPECT_EQ(m.strides, fields.get_u64(k + "strides"));
        EXPECT_EQ(frame[55], std::stoul(fields.get(k + "crc8"), nullptr, 16));
        EXPECT_EQ(encode_hxm(m), frame);
    }
}

TEST(HxmUnits, Scalings) {
    EXPECT_NEAR(speed_mps(4095), 15.996, 1.0 / 512);
    EXPECT_DOUBLE_EQ(speed_mps(0), 0.0);
    EXPECT_DOUBLE_EQ(distance_m(16), 1.0);
    EXPECT_THROW(speed_mps(4096), CodecError);
}

Bytes stream_of(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Bytes s;
    for (std::size_t i = 0; i < n; ++i) {
        const Bytes f = encode_hxm(testing::random_hxm(rng));
        s.insert(s.end(), f.begin(), f.end());
    }
    return s;
}

TEST(HxmScan, BackToBackFrames) {
    const Bytes s = stream_of(25, 1);
    FramerState st;
    const auto msgs = scan(st, s);
    EXPECT_EQ(msgs.size(), 25u);
    EXPECT_EQ(st.frames_ok, 25u);
    EXPECT_EQ(st.bytes_skipped, 0u);
    EXPECT_EQ(st.frames_rejected, 0u);
    EXPECT_TRUE(st.pending.empty());
}

TEST(HxmScan, TwoFramesSplitAcrossThreeChunks) {
    const Bytes s = stream_of(2, 2);
    FramerState st;
    std::vector<HxmMessage> got;
    for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{0, 30}, {30, 80}, {80, 114}}) {
        auto part = scan(st, ByteView(s.data() + lo, hi - lo));
        got.insert(got.end(), part.begin(), part.end());
        EXPECT_LT(st.pending.size(), hxm::kFrameSize);
    }
    EXPECT_EQ(got.size(), 2u);
    EXPECT_EQ(st.frames_ok, 2u);
}

TEST(HxmScan, GarbagePrefixIsSkipped) {
    const Bytes frame = stream_of(1, 3);
    // Five garbage bytes from the corruption injector's byte stream: take a
    // real frame, flip bits, and keep its first five bytes.
    const auto noisy = sim::corrupt(stream_of(1, 4), hxm::kFrameSize, 0.0, 0.99, 5);
    Bytes s(noisy.stream.begin() + 1, noisy.stream.begin() + 6);
    s.insert(s.end(), frame.begin(), frame.end());
    FramerState st;
    const auto msgs = scan(st, s);
    ASSERT_EQ(msgs.size(), 1u);
    EXPECT_EQ(encode_hxm(msgs[0]), frame);
    EXPECT_EQ(st.bytes_skipped, 5u);
}

TEST(HxmScan, EmptyChunkLeavesStateUnchanged) {
    FramerState st;
    const Bytes s = stream_of(1, 5);
    scan(st, ByteView(s.data(), 10));
    const FramerState before = st;
    EXPECT_TRUE(scan(st, {}).empty());
    EXPECT_EQ(st, before);
}

TEST(HxmScan, ChunkingInvariance) {
    Bytes s = stream_of(40, 6);
    // Sprinkle noise so resynchronization is exercised.
    const auto noisy = sim::corrupt(s, hxm::kFrameSize, 0.05, 0.2, 99);
    s = noisy.stream;
    s.insert(s.begin() + 100, {0x02, 0x26, 0x34, 0x00});

    FramerState whole;
    const auto reference = scan(whole, s);

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        FramerState st;
        std::vector<HxmMessage> got;
        std::size_t pos = 0;
        while (pos < s.size()) {
            const std::size_t len = std::min<std::size_t>(s.size() - pos, rng() % 130);
            auto part = scan(st, ByteView(s.data() + pos, len));
            got.insert(got.end(), part.begin(), part.end());
            ASSERT_LT(st.pending.size(), hxm::kFrameSize);
            pos += len;
        }
        ASSERT_EQ(got, reference);
        ASSERT_EQ(st.frames_ok, whole.frames_ok);
        ASSERT_EQ(st.frames_rejected, whole.frames_rejected);
        ASSERT_EQ(st.bytes_skipped, whole.bytes_skipped);
    }
}

TEST(HxmScan, CorruptedFrameBetweenValidFrames) {
    Bytes s = stream_of(3, 9);
    s[57 + 20] ^= 0x10;
    FramerState st;
    const auto msgs = scan(st, s);
    EXPECT_EQ(msgs.size(), 2u);
    EXPECT_EQ(st.frames_rejected, 1u);
    EXPECT_EQ(st.frames_ok * hxm::kFrameSize + st.bytes_skipped + st.pending.size(), s.size());
}

}  // namespace
}  // namespace bsn
