#include "bsn/wire.hpp"

#include <cmath>

namespace bsn::wire {
namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::optional<double> optional_double(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw WireError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw WireError(std::string("field '") + key + "' must be a non-empty string");
    }
    return v.get<std::string>();
}

double require_number(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw WireError(std::string("field '") + key + "' must be a finite number");
    }
    return v.get<double>();
}

std::int64_t require_integer(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer()) {
        throw WireError(std::string("field '") + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

// Runs a decoder, turning nlohmann exceptions into WireError.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw WireError(e.what());
    }
}

}  // namespace

Json to_json(const EmgReport& r) {
    Json acts = Json::array();
    for (const auto& a : r.activations) {
        acts.push_back({{"onset_s", a.onset_s}, {"offset_s", a.offset_s}});
    }
    return {
        {"rms", r.rms},
        {"integral_average", r.integral_average},
        {"peak_to_peak_avg", r.peak_to_peak_avg},
        {"activations", acts},
        {"symmetry_ratio", optional_json(r.symmetry_ratio)},
        {"fatigue_slope", optional_json(r.fatigue_slope)},
        {"rate_hz", r.rate_hz},
        {"sample_count", r.sample_count},
        {"threshold_used", r.threshold_used},
        {"config",
         {{"adc_span_mv", r.config.adc_span_mv},
          {"filter_cutoff_hz", r.config.filter_cutoff_hz},
          {"smooth_window_s", r.config.smooth_window_s},
          {"baseline_s", r.config.baseline_s},
          {"activation_threshold", optional_json(r.config.activation_threshold)},
          {"min_activation_s", r.config.min_activation_s},
          {"peak_trace_s", r.config.peak_trace_s}}},
    };
}

EmgReport emg_report_from_json(const Json& j) {
    return guarded([&] {
        EmgReport r;
        r.rms = require_number(j, "rms");
        r.integral_average = require_number(j, "integral_average");
        r.peak_to_peak_avg = require_number(j, "peak_to_peak_avg");
        for (const auto& a : require(j, "activations")) {
            r.activations.push_back({a.at("onset_s").get<double>(), a.at("offset_s").get<double>()});
        }
        r.symmetry_ratio = optional_double(j, "symmetry_ratio");
        r.fatigue_slope = optional_double(j, "fatigue_slope");
        r.rate_hz = j.value("rate_hz", 0.0);
        r.sample_count = j.value("sample_count", std::size_t{0});
        r.threshold_used = j.value("threshold_used", 0.0);
        if (j.contains("config")) {
            const Json& c = j.at("config");
            r.config.adc_span_mv = c.value("adc_span_mv", r.config.adc_span_mv);
            r.config.filter_cutoff_hz = c.value("filter_cutoff_hz", r.config.filter_cutoff_hz);
            r.config.smooth_window_s = c.value("smooth_window_s", r.config.smooth_window_s);
            r.config.baseline_s = c.value("baseline_s", r.config.baseline_s);
            r.config.activation_threshold = optional_double(c, "activation_threshold");
            r.config.min_activation_s = c.value("min_activation_s", r.config.min_activation_s);
            r.config.peak_trace_s = c.value("peak_trace_s", r.config.peak_trace_s);
        }
        return r;
    });
}

Json to_json(const SessionSummary& s) {
    return {
        {"duration_s", s.duration_s},
        {"avg_hr_bpm", optional_json(s.avg_hr_bpm)},
        {"avg_hr_msg_bpm", optional_json(s.avg_hr_msg_bpm)},
        {"min_hr_bpm", s.min_hr_bpm},
        {"max_hr_bpm", s.max_hr_bpm},
        {"distance_m", s.distance_m},
        {"strides_total", s.strides_total},
        {"beats_total", s.beats_total},
        {"loss_fraction", s.loss_fraction},
        {"emg", s.emg ? to_json(*s.emg) : Json(nullptr)},
        {"diagnostics",
         {{"frames_ok", s.diagnostics.frames_ok},
          {"frames_rejected", s.diagnostics.frames_rejected},
          {"bytes_skipped", s.diagnostics.bytes_skipped},
          {"unknown_type_packets", s.diagnostics.unknown_type_packets}}},
    };
}

SessionSummary summary_from_json(const Json& j) {
    return guarded([&] {
        SessionSummary s;
        s.duration_s = require_number(j, "duration_s");
        s.avg_hr_bpm = optional_double(j, "avg_hr_bpm");
        s.avg_hr_msg_bpm = optional_double(j, "avg_hr_msg_bpm");
        s.min_hr_bpm = j.value("min_hr_bpm", std::uint8_t{0});
        s.max_hr_bpm = j.value("max_hr_bpm", std::uint8_t{0});
        s.distance_m = require_number(j, "distance_m");
        s.strides_total = j.value("strides_total", std::uint64_t{0});
        s.beats_total = j.value("beats_total", std::uint64_t{0});
        s.loss_fraction = j.value("loss_fraction", 0.0);
        if (j.contains("emg") && !j.at("emg").is_null()) {
            s.emg = emg_report_from_json(j.at("emg"));
        }
        if (j.contains("diagnostics")) {
            const Json& d = j.at("diagnostics");
            s.diagnostics.frames_ok = d.value("frames_ok", std::uint64_t{0});
            s.diagnostics.frames_rejected = d.value("frames_rejected", std::uint64_t{0});
            s.diagnostics.bytes_skipped = d.value("bytes_skipped", std::uint64_t{0});
            s.diagnostics.unknown_type_packets = d.value("unknown_type_packets", std::uint64_t{0});
        }
        if (s.duration_s < 0.0 || s.loss_fraction < 0.0 || s.loss_fraction > 1.0) {
            throw WireError("summary fields out of range");
        }
        return s;
    });
}

Json to_json(const SampleRow& r) {
    Json j = {{"sensor", to_string(r.sensor)}, {"offset_ms", r.offset_ms}, {"value", r.value}};
    if (r.channel != 0) {
        j["channel"] = r.channel;
    }
    return j;
}

SampleRow sample_from_json(const Json& j) {
    return guarded([&] {
        SampleRow r;
        const auto kind = sensor_kind_from_string(require_string(j, "sensor"));
        if (!kind) {
            throw WireError("unknown sensor '" + j.at("sensor").get<std::string>() + "'");
        }
        r.sensor = *kind;
        r.offset_ms = require_integer(j, "offset_ms");
        r.value = require_number(j, "value");
        if (j.contains("channel")) {
            const std::int64_t ch = require_integer(j, "channel");
            if (ch < 0 || ch > 255) {
                throw WireError("channel must be 0..255");
            }
            r.channel = static_cast<std::uint32_t>(ch);
        }
        return r;
    });
}

Json to_json(const Workout& w) {
    return {
        {"workout_id", w.workout_id},
        {"user_id", w.user_id},
        {"started_at", w.started_at},
        {"duration_s", w.duration_s},
        {"summary", to_json(w.summary)},
        {"summary_mismatch", w.summary_mismatch},
    };
}

Json to_json(const User& u) {
    return {{"user_id", u.user_id}, {"display_name", u.display_name}, {"external_ids", u.external_ids}};
}

Json to_json(const Team& t) {
    return {{"team_id", t.team_id}, {"name", t.name}};
}

User user_from_json(const Json& j) {
    return guarded([&] {
        User u;
        if (j.contains("user_id")) {
            u.user_id = require_string(j, "user_id");
        }
        u.display_name = require_string(j, "display_name");
        if (j.contains("external_ids")) {
            u.external_ids = j.at("external_ids").get<std::map<std::string, std::string>>();
        }
        return u;
    });
}

Json to_json(const WorkoutUpload& u) {
    Json samples = Json::array();
    for (const auto& s : u.samples) {
        samples.push_back(to_json(s));
    }
    return {
        {"user_id", u.workout.user_id},
        {"workout_id", u.workout.workout_id},
        {"started_at", u.workout.started_at},
        {"duration_s", u.workout.duration_s},
        {"summary", to_json(u.workout.summary)},
        {"samples", std::move(samples)},
    };
}

WorkoutUpload workout_upload_from_json(const Json& j) {
    return guarded([&] {
        WorkoutUpload u;
        u.workout.user_id = require_string(j, "user_id");
        u.workout.workout_id = require_string(j, "workout_id");
        u.workout.started_at = require_integer(j, "started_at");
        u.workout.duration_s = require_number(j, "duration_s");
        if (u.workout.duration_s < 0.0) {
            throw WireError("duration_s must be non-negative");
        }
        u.workout.summary = summary_from_json(require(j, "summary"));
        const Json& samples = require(j, "samples");
        if (!samples.is_array()) {
            throw WireError("samples must be an array");
        }
        u.samples.reserve(samples.size());
        for (const auto& s : samples) {
            u.samples.push_back(sample_from_json(s));
        }
        return u;
    });
}

Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw WireError(e.what());
    }
}

}  // namespace bsn::wire
