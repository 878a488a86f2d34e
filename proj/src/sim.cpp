#include "bsn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include "bsn/hxm.hpp"
#include "bsn/shimmer.hpp"

namespace bsn::sim {
namespace {

constexpr std::int64_t kTimestampModulus = 65536;

double hr_at(const HrProfile& p, double t_s) {
    double end = 0.0;
    for (const auto& seg : p.segments) {
        end += seg.duration_s;
        if (t_s < end) {
            return seg.hr_bpm;
        }
    }
    return p.segments.back().hr_bpm;
}

void validate(const HrProfile& p, double duration_s) {
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
        throw SimError("duration must be non-negative");
    }
    if (p.segments.empty()) {
        throw SimError("heart-rate profile needs at least one segment");
    }
    for (const auto& seg : p.segments) {
        if (!(seg.duration_s > 0.0)) {
            throw SimError("segment durations must be positive");
        }
        if (!(seg.hr_bpm >= 30.0 && seg.hr_bpm <= 240.0)) {
            throw SimError("segment heart rate outside 30..240 bpm");
        }
    }
    if (!(p.speed_mps >= 0.0) || std::lround(p.speed_mps * 256.0) > hxm::kMaxSpeedRaw) {
        throw SimError("speed outside 0..15.996 m/s");
    }
    if (!(p.stride_rate_hz >= 0.0) || !(p.ibi_jitter_ms >= 0.0)) {
        throw SimError("stride rate and jitter must be non-negative");
    }
    if (p.distance_start_raw >= hxm::kDistanceModulus) {
        throw SimError("distance_start_raw must be below 4096");
    }
}

void validate(const EmgProfile& p, double duration_s) {
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
        throw SimError("duration must be non-negative");
    }
    if (!(p.noise_rms_mv >= 0.0) || !(p.battery_drain_mv_per_s >= 0.0) || !(p.adc_span_mv > 0.0)) {
        throw SimError("noise, drain and ADC span must be non-negative");
    }
    for (const auto& b : p.burst_schedule) {
        if (!(b.onset_s >= 0.0) || !(b.duration_s > 0.0) || !(b.amplitude_mv >= 0.0)) {
            throw SimError("bursts need onset >= 0, duration > 0 and amplitude >= 0");
        }
        if (b.onset_s + b.duration_s > duration_s + 1e-9) {
            throw SimError("burst extends past the end of the session");
        }
    }
}

std::uint16_t device_timestamp(std::uint16_t clock_start, std::int64_t t_ms) {
    const std::int64_t v = ((clock_start + t_ms) % kTimestampModulus + kTimestampModulus) % kTimestampModulus;
    return static_cast<std::uint16_t>(v);
}

std::size_t sample_index(double t_s) {
    return static_cast<std::size_t>(std::ceil(t_s * shimmer::kSampleRateHz - 1e-9));
}

}  // namespace

SimOutput gen_hxm(const HrProfile& profile, double duration_s) {
    validate(profile, duration_s);
    std::mt19937_64 rng(profile.seed);
    std::normal_distribution<double> jitter(0.0, profile.ibi_jitter_ms > 0.0 ? profile.ibi_jitter_ms : 1.0);

    auto next_ibi = [&](double t_s) {
        double ibi = 60000.0 / hr_at(profile, t_s);
        if (profile.ibi_jitter_ms > 0.0) {
            ibi += jitter(rng);
        }
        return static_cast<std::int64_t>(std::clamp(std::round(ibi), 250.0, 2000.0));
    };

    SimOutput out;
    GroundTruth& truth = out.truth;
    const std::int64_t duration_ms = static_cast<std::int64_t>(std::llround(duration_s * 1000.0));

    const std::int64_t first_ibi = static_cast<std::int64_t>(std::llround(60000.0 / hr_at(profile, 0.0)));
    const std::int64_t first_beat = first_ibi / 2;
    for (std::size_t j = kPreHistoryBeats; j > 0; --j) {
        truth.beat_times_ms.push_back(first_beat - static_cast<std::int64_t>(j) * first_ibi);
    }
    for (std::int64_t b = first_beat; b < duration_ms; b += next_ibi(static_cast<double>(b) / 1000.0)) {
        truth.beat_times_ms.push_back(b);
    }

    const std::set<std::size_t> dropped(profile.dropped_frames.begin(), profile.dropped_frames.end());
    const auto frames = static_cast<std::size_t>(std::floor(duration_s + 1e-9));
    const std::int64_t speed_raw = std::lround(profile.speed_mps * 256.0);

    std::optional<std::size_t> first_tx, last_tx;
    std::size_t beats_seen = kPreHistoryBeats;
    out.stream.reserve(frames * hxm::kFrameSize);
    for (std::size_t k = 0; k < frames; ++k) {
        const std::int64_t t_ms = static_cast<std::int64_t>(k + 1) * 1000;
        const double t_s = static_cast<double>(t_ms) / 1000.0;
        while (beats_seen < truth.beat_times_ms.size() && truth.beat_times_ms[beats_seen] <= t_ms) {
            ++beats_seen;
        }
        truth.frame_times_s.push_back(t_s);
        if (dropped.count(k) != 0) {
            truth.dropped_messages.push_back(k);
            continue;
        }
        if (!first_tx) {
            first_tx = k;
        }
        last_tx = k;

        HxmMessage msg;
        msg.firmware_id = 0x1A2B;
        msg.firmware_version = 0x0102;
        msg.hardware_id = 0x3C4D;
        msg.hardware_version = 0x0001;
        msg.battery_charge = profile.battery_percent;
        msg.heart_rate = static_cast<std::uint8_t>(std::clamp(std::lround(hr_at(profile, t_s)), 30L, 240L));
        msg.heart_beat_number = static_cast<std::uint8_t>(profile.beat_counter_start + (beats_seen - kPreHistoryBeats));
        for (std::size_t i = 0; i < HxmMessage::kTimestampSlots; ++i) {
            msg.beat_timestamps[i] = device_timestamp(profile.clock_start_ms, truth.beat_times_ms[beats_seen - 1 - i]);
        }
        const auto sixteenths = static_cast<std::uint64_t>(std::floor(profile.speed_mps * t_s * 16.0 + 1e-9));
        msg.distance_raw = static_cast<std::uint16_t>((profile.distance_start_raw + sixteenths) % hxm::kDistanceModulus);
        msg.speed_raw = static_cast<std::uint16_t>(speed_raw);
        const auto strides = static_cast<std::uint64_t>(std::floor(profile.stride_rate_hz * t_s + 1e-9));
        msg.strides = static_cast<std::uint8_t>((profile.stride_start + strides) % 256);

        const Bytes frame = encode_hxm(msg);
        out.stream.insert(out.stream.end(), frame.begin(), frame.end());
    }

    if (first_tx && last_tx) {
        const double t0 = truth.frame_times_s[*first_tx];
        const double t1 = truth.frame_times_s[*last_tx];
        truth.total_distance_m = (std::floor(profile.speed_mps * t1 * 16.0 + 1e-9) -
                                  std::floor(profile.speed_mps * t0 * 16.0 + 1e-9)) / 16.0;
        truth.total_strides = static_cast<std::uint64_t>(std::floor(profile.stride_rate_hz * t1 + 1e-9) -
                                                         std::floor(profile.stride_rate_hz * t0 + 1e-9));
    }
    return out;
}

SimOutput gen_shimmer(const EmgProfile& profile, double duration_s) {
    validate(profile, duration_s);
    std::mt19937_64 rng(profile.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    SimOutput out;
    GroundTruth& truth = out.truth;
    truth.emg_series.rate_hz = shimmer::kSampleRateHz;
    const auto packets = static_cast<std::size_t>(std::floor(duration_s * shimmer::kSampleRateHz + 1e-9));
    truth.packets = packets;
    out.stream.reserve(packets * shimmer::kFrameSize);

    for (std::size_t n = 0; n < packets; ++n) {
        const double t = static_cast<double>(n) / shimmer::kSampleRateHz;
        const double volts_mv = profile.battery_start_mv - profile.battery_drain_mv_per_s * t;

        ShimmerPacket p;
        p.sensor_id = profile.sensor_id;
        p.data_type = profile.data_type;
        p.sequence = static_cast<std::uint8_t>(profile.sequence_start + n);
        p.timestamp_ms = device_timestamp(profile.clock_start_ms, static_cast<std::int64_t>(n) * 2);

        if (volts_mv < shimmer::kLowBatteryMv) {
            if (!truth.low_battery_packet) {
                truth.low_battery_packet = n;
            }
            p.battery_mv = static_cast<std::uint16_t>(std::clamp(std::floor(volts_mv), 1.0, 2999.0));
        } else {
            double mv = profile.noise_rms_mv > 0.0 ? profile.noise_rms_mv * noise(rng) : 0.0;
            for (const auto& b : profile.burst_schedule) {
                if (n >= sample_index(b.onset_s) && n < sample_index(b.onset_s + b.duration_s)) {
                    mv += coin(rng) ? b.amplitude_mv : -b.amplitude_mv;
                }
            }
            truth.emg_series.samples.push_back(mv);
            p.emg_len = 2;
            p.emg_raw = emg_raw_from_millivolts(mv, profile.adc_span_mv);
        }
        const Bytes frame = encode_shimmer(p);
        out.stream.insert(out.stream.end(), frame.begin(), frame.end());
    }

    const double carried_s = truth.emg_series.duration_s();
    for (const auto& b : profile.burst_schedule) {
        if (b.onset_s < carried_s) {
            truth.burst_intervals.push_back({b.onset_s, std::min(b.onset_s + b.duration_s, carried_s)});
        }
    }
    return out;
}

CorruptOutput corrupt(ByteView stream, std::size_t frame_size, double drop_rate, double bitflip_rate,
                      std::uint64_t seed) {
    if (frame_size == 0 || !(drop_rate >= 0.0 && drop_rate < 1.0) ||
        !(bitflip_rate >= 0.0 && bitflip_rate < 1.0)) {
        throw SimError("corruption rates must lie in [0, 1) and frame size be positive");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> bit_pick(0, frame_size * 8 - 1);

    CorruptOutput out;
    out.stream.reserve(stream.size());
    const std::size_t frames = stream.size() / frame_size;
    for (std::size_t f = 0; f < frames; ++f) {
        const auto frame = stream.subspan(f * frame_size, frame_size);
        if (unit(rng) < drop_rate) {
            out.log.push_back({Mutation::Kind::drop, f, 0});
            continue;
        }
        const std::size_t start = out.stream.size();
        out.stream.insert(out.stream.end(), frame.begin(), frame.end());
        if (unit(rng) < bitflip_rate) {
            const std::size_t bit = bit_pick(rng);
            out.stream[start + bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
            out.log.push_back({Mutation::Kind::bitflip, f, bit});
        }
    }
    // A trailing partial frame passes through untouched.
    const auto tail = stream.subspan(frames * frame_size);
    out.stream.insert(out.stream.end(), tail.begin(), tail.end());
    return out;
}

HrTruthStats hr_truth_stats(const GroundTruth& truth) {
    HrTruthStats stats;
    const std::set<std::size_t> dropped(truth.dropped_messages.begin(), truth.dropped_messages.end());
    std::vector<std::size_t> counts;  // in-session beats at each transmitted frame
    for (std::size_t k = 0; k < truth.frame_times_s.size(); ++k) {
        if (dropped.count(k) != 0) {
            continue;
        }
        const auto t_ms = static_cast<std::int64_t>(std::llround(truth.frame_times_s[k] * 1000.0));
        const auto in_session = truth.beat_times_ms.begin() + kPreHistoryBeats;
        counts.push_back(static_cast<std::size_t>(
            std::upper_bound(in_session, truth.beat_times_ms.end(), t_ms) - in_session));
    }
    double ibi_sum = 0.0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        const std::size_t delta = counts[i] - counts[i - 1];
        stats.beats_observed += delta;
        std::size_t recoverable = delta;
        if (delta > 15) {
            stats.beats_unrecoverable += delta - 15;
            recoverable = 14;  // the oldest beat left in the window has no predecessor
        }
        // Newest `recoverable` beats of this gap.
        const std::size_t newest = kPreHistoryBeats + counts[i] - 1;
        for (std::size_t r = 0; r < recoverable; ++r) {
            const std::size_t j = newest - r;
            ibi_sum += static_cast<double>(truth.beat_times_ms[j] - truth.beat_times_ms[j - 1]);
            ++stats.ibis;
        }
    }
    if (stats.ibis > 0) {
        stats.mean_ibi_ms = ibi_sum / static_cast<double>(stats.ibis);
        stats.avg_hr_bpm = 60000.0 / stats.mean_ibi_ms;
    }
    return stats;
}

HrProfile parse_hr_profile(const KeyValues& kv) {
    HrProfile p;
    for (const auto& item : split(kv.get("segments"), ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 2) {
            throw ConfigError("segments: expected duration_s:hr_bpm, got '" + item + "'");
        }
        p.segments.push_back({parse_double(parts[0]), parse_double(parts[1])});
    }
    p.speed_mps = kv.get_double("speed_mps", 0.0);
    p.stride_rate_hz = kv.get_double("stride_rate_hz", 0.0);
    p.seed = kv.get_u64("seed", 0);
    p.ibi_jitter_ms = kv.get_double("ibi_jitter_ms", 0.0);
    p.beat_counter_start = static_cast<std::uint8_t>(kv.get_u64("beat_counter_start", 0) % 256);
    p.distance_start_raw = static_cast<std::uint16_t>(kv.get_u64("distance_start_raw", 0));
    p.stride_start = static_cast<std::uint8_t>(kv.get_u64("stride_start", 0) % 256);
    p.clock_start_ms = static_cast<std::uint16_t>(kv.get_u64("clock_start_ms", 0) % 65536);
    p.battery_percent = static_cast<std::uint8_t>(std::min<std::uint64_t>(kv.get_u64("battery_percent", 90), 100));
    for (const auto& idx : split(kv.get("dropped_frames", ""), ',')) {
        p.dropped_frames.push_back(parse_u64(idx));
    }
    return p;
}

EmgProfile parse_emg_profile(const KeyValues& kv) {
    EmgProfile p;
    for (const auto& item : split(kv.get("bursts", ""), ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 3) {
            throw ConfigError("bursts: expected onset_s:duration_s:amplitude_mv, got '" + item + "'");
        }
        p.burst_schedule.push_back({parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])});
    }
    p.noise_rms_mv = kv.get_double("noise_rms_mv", p.noise_rms_mv);
    p.battery_start_mv = static_cast<std::uint16_t>(kv.get_u64("battery_start_mv", p.battery_start_mv));
    p.battery_drain_mv_per_s = kv.get_double("battery_drain_mv_per_s", 0.0);
    p.seed = kv.get_u64("seed", 0);
    p.sensor_id = static_cast<std::uint8_t>(kv.get_u64("sensor_id", p.sensor_id));
    p.data_type = static_cast<std::uint8_t>(kv.get_u64("data_type", p.data_type));
    p.sequence_start = static_cast<std::uint8_t>(kv.get_u64("sequence_start", 0) % 256);
    p.clock_start_ms = static_cast<std::uint16_t>(kv.get_u64("clock_start_ms", 0) % 65536);
    p.adc_span_mv = kv.get_double("adc_span_mv", p.adc_span_mv);
    return p;
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
    auto join = [&](const auto& values, auto&& fmt) {
        bool first = true;
        for (const auto& v : values) {
            if (!first) {
                out << ',';
            }
            first = false;
            fmt(v);
        }
        out << '\n';
    };
    const auto prec = out.precision(17);
    if (!truth.frame_times_s.empty()) {
        const HrTruthStats stats = hr_truth_stats(truth);
        out << "frames=" << truth.frame_times_s.size() << '\n';
        out << "frames_transmitted=" << truth.frame_times_s.size() - truth.dropped_messages.size() << '\n';
        out << "dropped_messages=";
        join(truth.dropped_messages, [&](std::size_t v) { out << v; });
        out << "beats_observed=" << stats.beats_observed << '\n';
        out << "beats_unrecoverable=" << stats.beats_unrecoverable << '\n';
        out << "avg_hr_bpm=" << stats.avg_hr_bpm << '\n';
        out << "total_distance_m=" << truth.total_distance_m << '\n';
        out << "total_strides=" << truth.total_strides << '\n';
        out << "beat_times_ms=";
        join(truth.beat_times_ms, [&](std::int64_t v) { out << v; });
    }
    if (truth.packets != 0) {
        out << "packets=" << truth.packets << '\n';
        out << "emg_samples=" << truth.emg_series.samples.size() << '\n';
        out << "low_battery_packet=";
        if (truth.low_battery_packet) {
            out << *truth.low_battery_packet;
        }
        out << '\n';
        out << "burst_intervals=";
        join(truth.burst_intervals, [&](const Activation& a) { out << a.onset_s << ':' << a.offset_s; });
    }
    out.precision(prec);
}

}  // namespace bsn::sim
