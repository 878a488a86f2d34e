#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsn/bytes.hpp"
#include "bsn/emg.hpp"
#include "bsn/kv.hpp"

namespace bsn::sim {

class SimError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct HrSegment {
    double duration_s = 0.0;
    double hr_bpm = 60.0;
};

/// Heart-rate/motion scenario for a simulated HxM strap. The last segment's
/// heart rate holds past the end of the schedule.
struct HrProfile {
    std::vector<HrSegment> segments;
    double speed_mps = 0.0;
    double stride_rate_hz = 0.0;
    std::uint64_t seed = 0;
    double ibi_jitter_ms = 0.0;  // Gaussian sigma; 0 gives exact ground truth

    // Device counter state at session start.
    std::uint8_t beat_counter_start = 0;
    std::uint16_t distance_start_raw = 0;
    std::uint8_t stride_start = 0;
    std::uint16_t clock_start_ms = 0;
    std::uint8_t battery_percent = 90;

    /// Frame indices left out of the emitted stream.
    std::vector<std::size_t> dropped_frames;
};

struct Burst {
    double onset_s = 0.0;
    double duration_s = 0.0;
    double amplitude_mv = 0.0;
};

/// Surface-EMG scenario for a simulated Shimmer. Bursts carry a seeded
/// random-sign carrier of the given amplitude on top of Gaussian background
/// noise, so the rectified burst level equals the amplitude.
struct EmgProfile {
    std::vector<Burst> burst_schedule;
    double noise_rms_mv = 5.0;
    std::uint16_t battery_start_mv = 4200;
    double battery_drain_mv_per_s = 0.0;
    std::uint64_t seed = 0;

    std::uint8_t sensor_id = 1;
    std::uint8_t data_type = 0x45;
    std::uint8_t sequence_start = 0;
    std::uint16_t clock_start_ms = 0;
    double adc_span_mv = 3000.0;
};

struct GroundTruth {
    // HxM. Beat times are ms since session start; the first 15 entries are
    // pre-session history (negative times) so every timestamp slot is real.
    std::vector<std::int64_t> beat_times_ms;
    std::vector<double> frame_times_s;          // every generated frame
    std::vector<std::size_t> dropped_messages;  // indices into frame_times_s
    double total_distance_m = 0.0;              // between first and last transmitted frame
    std::uint64_t total_strides = 0;            // same span

    // Shimmer.
    SampleSeries emg_series;               // analog values of transmitted EMG samples
    std::vector<Activation> burst_intervals;
    std::optional<std::size_t> low_battery_packet;
    std::size_t packets = 0;
};

struct SimOutput {
    Bytes stream;
    GroundTruth truth;
};

inline constexpr std::size_t kPreHistoryBeats = 15;

/// One frame per simulated second, stamped at the end of that second.
SimOutput gen_hxm(const HrProfile& profile, double duration_s);

/// 500 packets per second. Once the battery falls below 3000 mV packets
/// carry the voltage and no EMG payload.
SimOutput gen_shimmer(const EmgProfile& profile, double duration_s);

struct Mutation {
    enum class Kind { drop, bitflip };
    Kind kind = Kind::drop;
    std::size_t frame_index = 0;
    std::size_t bit = 0;  // bit offset within the frame, LSB-first per byte

    bool operator==(const Mutation&) const = default;
};

struct CorruptOutput {
    Bytes stream;
    std::vector<Mutation> log;
};

/// Applies whole-frame drops and single-bit flips to a stream of fixed-size
/// frames. Rates must lie in [0, 1).
CorruptOutput corrupt(ByteView stream, std::size_t frame_size, double drop_rate,
                      double bitflip_rate, std::uint64_t seed);

/// Heart-rate quantities a receiver should reconstruct from the transmitted
/// frames, computed directly from the beat schedule.
struct HrTruthStats {
    std::uint64_t beats_observed = 0;  // beats after the first transmitted frame
    std::uint64_t beats_unrecoverable = 0;
    std::uint64_t ibis = 0;
    double mean_ibi_ms = 0.0;
    double avg_hr_bpm = 0.0;  // 60000 / mean IBI over recoverable beats
};

HrTruthStats hr_truth_stats(const GroundTruth& truth);

HrProfile parse_hr_profile(const KeyValues& kv);
EmgProfile parse_emg_profile(const KeyValues& kv);

void write_ground_truth(std::ostream& out, const GroundTruth& truth);

}  // namespace bsn::sim
