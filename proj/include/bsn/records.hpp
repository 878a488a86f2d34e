#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsn/session.hpp"

namespace bsn {

struct User {
    std::string user_id;
    std::string display_name;
    std::map<std::string, std::string> external_ids;  // provider -> opaque id

    bool operator==(const User&) const = default;
};

struct Team {
    std::string team_id;
    std::string name;

    bool operator==(const Team&) const = default;
};

struct Membership {
    std::string user_id;
    std::string team_id;
    std::int64_t joined_at = 0;
};

enum class SensorKind { hr, distance, emg };

const char* to_string(SensorKind k);
std::optional<SensorKind> sensor_kind_from_string(const std::string& s);

/// One raw sample linked to a workout. hr values are instantaneous bpm per
/// recovered beat, distance values cumulative metres per message, emg values
/// millivolts.
struct SampleRow {
    SensorKind sensor = SensorKind::hr;
    std::uint32_t channel = 0;
    std::int64_t offset_ms = 0;
    double value = 0.0;

    bool operator==(const SampleRow&) const = default;
};

struct Workout {
    std::string workout_id;  // client generated, the idempotency key
    std::string user_id;
    std::int64_t started_at = 0;  // unix seconds
    double duration_s = 0.0;
    SessionSummary summary;
    bool summary_mismatch = false;
};

/// Session quantities that can be rebuilt from raw samples alone.
struct SampleDerived {
    std::optional<double> avg_hr_bpm;
    std::optional<double> distance_m;
};

SampleDerived derive_from_samples(std::span<const SampleRow> samples);

/// Index of the first row whose offset_ms goes backwards within its
/// (sensor, channel) stream, if any.
std::optional<std::size_t> first_offset_violation(std::span<const SampleRow> samples);

inline constexpr double kAvgHrToleranceBpm = 1.0;
inline constexpr double kDistanceToleranceM = 0.1;

}  // namespace bsn
