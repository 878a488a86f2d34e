#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsn/emg.hpp"
#include "bsn/hxm.hpp"

namespace bsn {

class MetricsError : public std::runtime_error {
public:
    enum class Kind { invalid_raw, no_data, invalid_range };

    MetricsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Reconstructs the true total of a modular hardware counter from successive
/// raw readings. The first reading only establishes the reference.
struct RolloverCounter {
    std::uint32_t modulus = 256;
    std::optional<std::uint32_t> last_raw;
    std::uint64_t total = 0;

    bool operator==(const RolloverCounter&) const = default;
};

/// total += (raw - last_raw) mod modulus. Throws MetricsError(invalid_raw)
/// when raw >= modulus.
RolloverCounter rollover_update(RolloverCounter c, std::uint32_t raw);

/// Inter-beat intervals outside (kMinIbiMs, kMaxIbiMs] are treated as corrupt.
inline constexpr std::uint32_t kMinIbiMs = 200;
inline constexpr std::uint32_t kMaxIbiMs = 2000;

struct HrSessionState {
    std::optional<std::uint8_t> last_beat_number;
    std::array<std::uint16_t, HxmMessage::kTimestampSlots> last_timestamps{};
    std::uint64_t beats_total = 0;
    std::uint64_t beats_unrecovered = 0;
    std::vector<std::uint32_t> ibi_ms;
    // Offset of each recovered IBI's closing beat from the newest beat of the
    // first message. Parallel to ibi_ms.
    std::vector<std::int64_t> beat_offset_ms;
    std::uint64_t messages_seen = 0;

    // Per-message heart-rate field statistics (0 = not detected is skipped).
    std::uint64_t hr_field_sum = 0;
    std::uint64_t hr_field_count = 0;
    std::uint8_t hr_field_min = 0;
    std::uint8_t hr_field_max = 0;

    std::int64_t newest_offset_ms = 0;  // offset of last_timestamps[0]
};

/// Folds one message into the heart-rate state. New beats are the beat-number
/// delta mod 256; up to 15 of them are recoverable from the timestamp window,
/// the rest count as unrecovered.
void ingest_hxm(HrSessionState& state, const HxmMessage& msg);

/// 60000 / mean(IBI). Throws MetricsError(no_data) without recovered IBIs.
double average_hr(const HrSessionState& state);

/// Mean of the non-zero heart_rate fields, for display parity with the device.
std::optional<double> average_hr_per_message(const HrSessionState& state);

struct LinkDiagnostics {
    std::uint64_t frames_ok = 0;
    std::uint64_t frames_rejected = 0;
    std::uint64_t bytes_skipped = 0;
    std::uint64_t unknown_type_packets = 0;

    bool operator==(const LinkDiagnostics&) const = default;
};

struct SessionSummary {
    double duration_s = 0.0;
    std::optional<double> avg_hr_bpm;
    std::optional<double> avg_hr_msg_bpm;
    std::uint8_t min_hr_bpm = 0;
    std::uint8_t max_hr_bpm = 0;
    double distance_m = 0.0;
    std::uint64_t strides_total = 0;
    std::uint64_t beats_total = 0;
    double loss_fraction = 0.0;
    std::optional<EmgReport> emg;
    LinkDiagnostics diagnostics;
};

/// Builds the session summary. Throws MetricsError(invalid_range) if t1 < t0.
SessionSummary summarize(const HrSessionState& hr, const RolloverCounter& distance,
                         const RolloverCounter& strides, const std::optional<EmgReport>& emg,
                         double t0_s, double t1_s);

/// Everything one HxM stream contributes to a session.
class HxmSessionAccumulator {
public:
    void add(const HxmMessage& msg);

    const HrSessionState& hr() const { return hr_; }
    const RolloverCounter& distance() const { return distance_; }
    const RolloverCounter& strides() const { return strides_; }
    std::uint64_t messages() const { return hr_.messages_seen; }

    /// Cumulative distance in metres after each message, one entry per message.
    const std::vector<double>& distance_trace() const { return distance_trace_; }

private:
    HrSessionState hr_;
    RolloverCounter distance_{hxm::kDistanceModulus, std::nullopt, 0};
    RolloverCounter strides_{256, std::nullopt, 0};
    std::vector<double> distance_trace_;
};

}  // namespace bsn
