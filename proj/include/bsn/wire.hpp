#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsn/records.hpp"
#include "bsn/session.hpp"

namespace bsn::wire {

using Json = nlohmann::json;

/// Malformed or incomplete wire body.
class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json to_json(const EmgReport& r);
Json to_json(const SessionSummary& s);
Json to_json(const SampleRow& r);
Json to_json(const Workout& w);
Json to_json(const User& u);
Json to_json(const Team& t);

EmgReport emg_report_from_json(const Json& j);
SessionSummary summary_from_json(const Json& j);
SampleRow sample_from_json(const Json& j);
User user_from_json(const Json& j);

/// Body of POST /v1/workouts.
struct WorkoutUpload {
    Workout workout;
    std::vector<SampleRow> samples;
};

Json to_json(const WorkoutUpload& u);
WorkoutUpload workout_upload_from_json(const Json& j);

/// Parses text into JSON, converting parse failures to WireError.
Json parse(const std::string& text);

}  // namespace bsn::wire
