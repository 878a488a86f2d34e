#include "bsn/status.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

namespace bsn {
namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

std::string format_status(const SessionSummary& s, const std::string& tmpl) {
    const bool strap_data = s.beats_total > 0 || s.distance_m > 0.0 || s.avg_hr_bpm.has_value();
    std::map<std::string, std::optional<std::string>> values{
        {"duration_min", fixed(s.duration_s / 60.0, 1)},
        {"avg_hr", s.avg_hr_bpm ? std::optional(fixed(std::round(*s.avg_hr_bpm), 0)) : std::nullopt},
        {"max_hr", s.max_hr_bpm > 0 ? std::optional(std::to_string(s.max_hr_bpm)) : std::nullopt},
        {"distance_m", strap_data ? std::optional(fixed(s.distance_m, 1)) : std::nullopt},
        {"strides", strap_data ? std::optional(std::to_string(s.strides_total)) : std::nullopt},
        {"emg_rms", s.emg ? std::optional(fixed(s.emg->rms, 1)) : std::nullopt},
    };

    std::string out;
    std::size_t pos = 0;
    while (pos <= tmpl.size()) {
        std::size_t end = tmpl.find(", ", pos);
        if (end == std::string::npos) {
            end = tmpl.size();
        }
        const std::string segment = tmpl.substr(pos, end - pos);
        std::string rendered;
        bool keep = true;
        for (std::size_t i = 0; i < segment.size();) {
            if (segment[i] == '{') {
                const auto close = segment.find('}', i);
                if (close != std::string::npos) {
                    auto it = values.find(segment.substr(i + 1, close - i - 1));
                    if (it != values.end()) {
                        if (!it->second) {
                            keep = false;
                            break;
                        }
                        rendered += *it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
            rendered += segment[i++];
        }
        if (keep && !rendered.empty()) {
            if (!out.empty()) {
                out += ", ";
            }
            out += rendered;
        }
        pos = end + 2;
    }
    for (char& c : out) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    if (out.size() > kMaxStatusLength) {
        out.resize(kMaxStatusLength);
    }
    return out;
}

}  // namespace bsn
