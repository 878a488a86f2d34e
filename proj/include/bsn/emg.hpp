#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsn {

/// Uniformly sampled signal in millivolts.
struct SampleSeries {
    std::vector<double> samples;
    double rate_hz = 500.0;

    double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
    bool operator==(const SampleSeries&) const = default;
};

class EmgError : public std::invalid_argument {
public:
    enum class Kind {
        invalid_series,  // non-positive rate or non-finite sample
        invalid_window,
        empty_series,
        invalid_threshold,
        zero_denominator,
        too_short,
    };

    EmgError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Throws EmgError(invalid_series) unless rate_hz > 0 and every sample is finite.
void validate(const SampleSeries& s);

/// Single-pole high-pass, primed with the first sample so a constant input
/// yields exact zeros.
SampleSeries dc_filter(const SampleSeries& s, double cutoff_hz = 10.0);

SampleSeries rectify(const SampleSeries& s);

/// Number of samples in a window of `window_s` at the series rate.
std::size_t window_samples(const SampleSeries& s, double window_s);

/// Centered moving average of round(window_s * rate) samples. Windows are
/// truncated at the edges rather than zero padded.
SampleSeries smooth(const SampleSeries& s, double window_s);

/// Whole-series root mean square. Zero for an empty series.
double rms(const SampleSeries& s);

/// Sliding RMS with the same window and edge rule as smooth().
SampleSeries rms(const SampleSeries& s, double window_s);

/// Mean of the rectified series.
double integral_average(const SampleSeries& s);

/// Mean over consecutive traces of (max - min); a trailing partial trace is dropped.
double peak_to_peak_average(const SampleSeries& s, double trace_s);

struct Activation {
    double onset_s = 0.0;
    double offset_s = 0.0;  // exclusive: time of the first sample back below threshold

    bool operator==(const Activation&) const = default;
};

/// Maximal runs where envelope >= threshold lasting at least min_duration_s.
std::vector<Activation> activation_timing(const SampleSeries& envelope, double threshold,
                                          double min_duration_s);

/// rms(left) / rms(right).
double symmetry_ratio(const SampleSeries& left, const SampleSeries& right);

/// Least-squares slope (mV/s) of one-second RMS bins against bin-centre time.
/// Needs at least two full bins.
double fatigue_slope(const SampleSeries& envelope);

struct EmgConfig {
    double adc_span_mv = 3000.0;
    double filter_cutoff_hz = 10.0;
    double smooth_window_s = 0.05;
    double baseline_s = 1.0;
    /// Activation threshold in mV; when unset, 2x the RMS of the first
    /// baseline_s of the envelope.
    std::optional<double> activation_threshold;
    double min_activation_s = 0.1;
    double peak_trace_s = 1.0;
};

struct EmgReport {
    double rms = 0.0;
    double integral_average = 0.0;
    double peak_to_peak_avg = 0.0;
    std::vector<Activation> activations;
    std::optional<double> symmetry_ratio;
    std::optional<double> fatigue_slope;  // absent for series shorter than two seconds

    // Parameters the report was produced with.
    double rate_hz = 0.0;
    std::size_t sample_count = 0;
    double threshold_used = 0.0;
    EmgConfig config;
};

/// filter -> rectify -> smooth -> quantify. `right`, when given, is the
/// contralateral muscle used for the symmetry ratio (left = `s`).
EmgReport analyze_emg(const SampleSeries& s, const EmgConfig& config = {},
                      const SampleSeries* right = nullptr);

}  // namespace bsn
