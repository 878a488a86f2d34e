#include "bsn/records.hpp"

#include <map>
#include <utility>

namespace bsn {

const char* to_string(SensorKind k) {
    switch (k) {
        case SensorKind::hr: return "hr";
        case SensorKind::distance: return "distance";
        case SensorKind::emg: return "emg";
    }
    return "unknown";
}

std::optional<SensorKind> sensor_kind_from_string(const std::string& s) {
    if (s == "hr") return SensorKind::hr;
    if (s == "distance") return SensorKind::distance;
    if (s == "emg") return SensorKind::emg;
    return std::nullopt;
}

SampleDerived derive_from_samples(std::span<const SampleRow> samples) {
    SampleDerived d;
    double ibi_sum = 0.0;
    std::size_t beats = 0;
    for (const auto& row : samples) {
        if (row.sensor == SensorKind::hr && row.value > 0.0) {
            ibi_sum += 60000.0 / row.value;
            ++beats;
        } else if (row.sensor == SensorKind::distance) {
            d.distance_m = d.distance_m ? std::max(*d.distance_m, row.value) : row.value;
        }
    }
    if (beats > 0) {
        d.avg_hr_bpm = 60000.0 / (ibi_sum / static_cast<double>(beats));
    }
    return d;
}

std::optional<std::size_t> first_offset_violation(std::span<const SampleRow> samples) {
    std::map<std::pair<SensorKind, std::uint32_t>, std::int64_t> last;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto key = std::make_pair(samples[i].sensor, samples[i].channel);
        auto it = last.find(key);
        if (it != last.end() && samples[i].offset_ms < it->second) {
            return i;
        }
        last[key] = samples[i].offset_ms;
    }
    return std::nullopt;
}

}  // namespace bsn
