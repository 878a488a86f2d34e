#include "bsn/session.hpp"

#include <algorithm>
#include <numeric>

namespace bsn {
namespace {

std::uint32_t ts_diff(std::uint16_t newer, std::uint16_t older) {
    return static_cast<std::uint16_t>(newer - older);
}

}  // namespace

RolloverCounter rollover_update(RolloverCounter c, std::uint32_t raw) {
    if (raw >= c.modulus) {
        throw MetricsError(MetricsError::Kind::invalid_raw,
                           "raw " + std::to_string(raw) + " >= modulus " + std::to_string(c.modulus));
    }
    if (c.last_raw) {
        c.total += (raw + c.modulus - *c.last_raw) % c.modulus;
    }
    c.last_raw = raw;
    return c;
}

void ingest_hxm(HrSessionState& state, const HxmMessage& msg) {
    ++state.messages_seen;
    if (msg.heart_rate != 0) {
        state.hr_field_min = state.hr_field_count == 0 ? msg.heart_rate
                                                       : std::min(state.hr_field_min, msg.heart_rate);
        state.hr_field_max = std::max(state.hr_field_max, msg.heart_rate);
        state.hr_field_sum += msg.heart_rate;
        ++state.hr_field_count;
    }

    const auto& ts = msg.beat_timestamps;
    if (!state.last_beat_number) {
        state.last_beat_number = msg.heart_beat_number;
        state.last_timestamps = ts;
        return;
    }

    const std::uint32_t delta = static_cast<std::uint8_t>(msg.heart_beat_number - *state.last_beat_number);
    if (delta == 0) {
        return;
    }
    constexpr std::uint32_t kSlots = HxmMessage::kTimestampSlots;
    state.beats_total += delta;

    const std::uint32_t in_window = std::min(delta, kSlots);
    if (delta > kSlots) {
        state.beats_unrecovered += delta - kSlots;
    }
    // Offsets are anchored on the previous newest beat; valid while a gap
    // stays under one 65.5 s timestamp wrap.
    const std::int64_t base = state.newest_offset_ms;
    const std::uint16_t base_ts = state.last_timestamps[0];

    // Oldest new beat first, so IBIs and offsets stay time ordered.
    for (std::uint32_t k = in_window; k-- > 0;) {
        std::uint16_t pred = 0;
        if (k + 1 < in_window) {
            pred = ts[k + 1];
        } else if (delta <= kSlots) {
            pred = base_ts;
        } else {
            // Oldest beat of an overflowed window: its predecessor is gone.
            continue;
        }
        const std::uint32_t ibi = ts_diff(ts[k], pred);
        if (ibi <= kMinIbiMs || ibi > kMaxIbiMs) {
            ++state.beats_unrecovered;
            continue;
        }
        state.ibi_ms.push_back(ibi);
        state.beat_offset_ms.push_back(base + ts_diff(ts[k], base_ts));
    }

    state.newest_offset_ms = base + ts_diff(ts[0], base_ts);
    state.last_beat_number = msg.heart_beat_number;
    state.last_timestamps = ts;
}

double average_hr(const HrSessionState& state) {
    if (state.ibi_ms.empty()) {
        throw MetricsError(MetricsError::Kind::no_data, "no recovered inter-beat intervals");
    }
    const double sum = std::accumulate(state.ibi_ms.begin(), state.ibi_ms.end(), 0.0);
    return 60000.0 / (sum / static_cast<double>(state.ibi_ms.size()));
}

std::optional<double> average_hr_per_message(const HrSessionState& state) {
    if (state.hr_field_count == 0) {
        return std::nullopt;
    }
    return static_cast<double>(state.hr_field_sum) / static_cast<double>(state.hr_field_count);
}

SessionSummary summarize(const HrSessionState& hr, const RolloverCounter& distance,
                         const RolloverCounter& strides, const std::optional<EmgReport>& emg,
                         double t0_s, double t1_s) {
    if (t1_s < t0_s) {
        throw MetricsError(MetricsError::Kind::invalid_range, "session ends before it starts");
    }
    SessionSummary s;
    s.duration_s = t1_s - t0_s;
    if (!hr.ibi_ms.empty()) {
        s.avg_hr_bpm = average_hr(hr);
    }
    s.avg_hr_msg_bpm = average_hr_per_message(hr);
    s.min_hr_bpm = hr.hr_field_min;
    s.max_hr_bpm = hr.hr_field_max;
    s.distance_m = static_cast<double>(distance.total) / 16.0;
    s.strides_total = strides.total;
    s.beats_total = hr.beats_total;
    s.loss_fraction = hr.beats_total == 0
                          ? 0.0
                          : static_cast<double>(hr.beats_unrecovered) / static_cast<double>(hr.beats_total);
    s.emg = emg;
    return s;
}

void HxmSessionAccumulator::add(const HxmMessage& msg) {
    ingest_hxm(hr_, msg);
    distance_ = rollover_update(distance_, msg.distance_raw % hxm::kDistanceModulus);
    strides_ = rollover_update(strides_, msg.strides);
    distance_trace_.push_back(static_cast<double>(distance_.total) / 16.0);
}

}  // namespace bsn
