#pragma once

#include <cstddef>
#include <string>

#include "bsn/session.hpp"

namespace bsn {

inline constexpr std::size_t kMaxStatusLength = 280;
inline constexpr const char* kDefaultStatusTemplate =
    "Workout: {duration_min} min, avg HR {avg_hr} bpm, {distance_m} m";

/// Renders a one-line status update. The template is split on ", " and any
/// segment referencing a value the session lacks is dropped. Placeholders:
/// {duration_min} {avg_hr} {max_hr} {distance_m} {strides} {emg_rms}.
/// Output is capped at 280 characters.
std::string format_status(const SessionSummary& summary,
                          const std::string& tmpl = kDefaultStatusTemplate);

}  // namespace bsn
