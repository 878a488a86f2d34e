#include "bsn/emg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bsn {
namespace {

void require_window(const SampleSeries& s, double window_s) {
    if (!(window_s >= 2.0 / s.rate_hz) || !std::isfinite(window_s)) {
        throw EmgError(EmgError::Kind::invalid_window,
                       "window " + std::to_string(window_s) + " s is shorter than two samples");
    }
}

// Applies `reduce(first, last)` over the centered, edge-truncated window of
// every sample.
template <typename Reduce>
SampleSeries sliding(const SampleSeries& s, double window_s, Reduce reduce) {
    validate(s);
    require_window(s, window_s);
    const std::size_t w = window_samples(s, window_s);
    const std::size_t left = (w - 1) / 2;
    const std::size_t right = w - 1 - left;
    const std::size_t n = s.samples.size();
    SampleSeries out{std::vector<double>(n), s.rate_hz};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n, i + right + 1);
        out.samples[i] = reduce(s.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                                s.samples.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return out;
}

}  // namespace

void validate(const SampleSeries& s) {
    if (!(s.rate_hz > 0.0) || !std::isfinite(s.rate_hz)) {
        throw EmgError(EmgError::Kind::invalid_series, "sample rate must be positive");
    }
    for (double x : s.samples) {
        if (!std::isfinite(x)) {
            throw EmgError(EmgError::Kind::invalid_series, "series contains a non-finite sample");
        }
    }
}

SampleSeries dc_filter(const SampleSeries& s, double cutoff_hz) {
    validate(s);
    if (!(cutoff_hz > 0.0)) {
        throw EmgError(EmgError::Kind::invalid_window, "filter cutoff must be positive");
    }
    const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
    const double dt = 1.0 / s.rate_hz;
    const double alpha = rc / (rc + dt);
    SampleSeries out{std::vector<double>(s.samples.size()), s.rate_hz};
    if (s.samples.empty()) {
        return out;
    }
    double prev_x = s.samples.front();
    double prev_y = 0.0;
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const double x = s.samples[i];
        prev_y = alpha * (prev_y + x - prev_x);
        prev_x = x;
        out.samples[i] = prev_y;
    }
    return out;
}

SampleSeries rectify(const SampleSeries& s) {
    validate(s);
    SampleSeries out{s.samples, s.rate_hz};
    for (double& x : out.samples) {
        x = std::fabs(x);
    }
    return out;
}

std::size_t window_samples(const SampleSeries& s, double window_s) {
    return static_cast<std::size_t>(std::llround(window_s * s.rate_hz));
}

SampleSeries smooth(const SampleSeries& s, double window_s) {
    return sliding(s, window_s, [](auto first, auto last) {
        double sum = 0.0;
        for (auto it = first; it != last; ++it) {
            sum += *it;
        }
        return sum / static_cast<double>(last - first);
    });
}

double rms(const SampleSeries& s) {
    validate(s);
    if (s.samples.empty()) {
        return 0.0;
    }
    double sum_sq = 0.0;
    for (double x : s.samples) {
        sum_sq += x * x;
    }
    return std::sqrt(sum_sq / static_cast<double>(s.samples.size()));
}

SampleSeries rms(const SampleSeries& s, double window_s) {
    return sliding(s, window_s, [](auto first, auto last) {
        double sum_sq = 0.0;
        for (auto it = first; it != last; ++it) {
            sum_sq += *it * *it;
        }
        return std::sqrt(sum_sq / static_cast<double>(last - first));
    });
}

double integral_average(const SampleSeries& s) {
    validate(s);
    if (s.samples.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double x : s.samples) {
        sum += std::fabs(x);
    }
    return sum / static_cast<double>(s.samples.size());
}

double peak_to_peak_average(const SampleSeries& s, double trace_s) {
    validate(s);
    require_window(s, trace_s);
    const std::size_t trace = window_samples(s, trace_s);
    const std::size_t traces = s.samples.size() / trace;
    if (traces == 0) {
        throw EmgError(EmgError::Kind::empty_series, "series shorter than one trace");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < traces; ++t) {
        const auto first = s.samples.begin() + static_cast<std::ptrdiff_t>(t * trace);
        const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(trace));
        total += *hi - *lo;
    }
    return total / static_cast<double>(traces);
}

std::vector<Activation> activation_timing(const SampleSeries& envelope, double threshold,
                                          double min_duration_s) {
    validate(envelope);
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw EmgError(EmgError::Kind::invalid_threshold, "activation threshold must be positive");
    }
    std::vector<Activation> out;
    const auto& x = envelope.samples;
    const std::size_t n = x.size();
    const std::size_t min_len = static_cast<std::size_t>(std::ceil(min_duration_s * envelope.rate_hz - 1e-9));
    std::size_t i = 0;
    while (i < n) {
        if (x[i] < threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && x[j] >= threshold) {
            ++j;
        }
        if (j - i >= std::max<std::size_t>(min_len, 1)) {
            out.push_back({static_cast<double>(i) / envelope.rate_hz,
                           static_cast<double>(j) / envelope.rate_hz});
        }
        i = j;
    }
    return out;
}

double symmetry_ratio(const SampleSeries& left, const SampleSeries& right) {
    if (left.rate_hz != right.rate_hz) {
        throw EmgError(EmgError::Kind::invalid_series, "symmetry needs equal sample rates");
    }
    const double denom = rms(right);
    if (denom == 0.0) {
        throw EmgError(EmgError::Kind::zero_denominator, "right-side RMS is zero");
    }
    return rms(left) / denom;
}

double fatigue_slope(const SampleSeries& envelope) {
    validate(envelope);
    const auto bin = static_cast<std::size_t>(std::llround(envelope.rate_hz));
    const std::size_t bins = bin == 0 ? 0 : envelope.samples.size() / bin;
    if (bins < 2) {
        throw EmgError(EmgError::Kind::too_short, "fatigue analysis needs at least two seconds");
    }
    std::vector<double> t(bins), y(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const auto first = envelope.samples.begin() + static_cast<std::ptrdiff_t>(b * bin);
        SampleSeries one{std::vector<double>(first, first + static_cast<std::ptrdiff_t>(bin)),
                         envelope.rate_hz};
        y[b] = rms(one);
        t[b] = (static_cast<double>(b * bin) + static_cast<double>(bin) / 2.0) / envelope.rate_hz;
    }
    double t_mean = 0.0, y_mean = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        t_mean += t[b];
        y_mean += y[b];
    }
    t_mean /= static_cast<double>(bins);
    y_mean /= static_cast<double>(bins);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        sxy += (t[b] - t_mean) * (y[b] - y_mean);
        sxx += (t[b] - t_mean) * (t[b] - t_mean);
    }
    return sxy / sxx;
}

EmgReport analyze_emg(const SampleSeries& s, const EmgConfig& config, const SampleSeries* right) {
    validate(s);
    EmgReport report;
    report.config = config;
    report.rate_hz = s.rate_hz;
    report.sample_count = s.samples.size();
    if (s.samples.empty()) {
        return report;
    }

    const SampleSeries filtered = dc_filter(s, config.filter_cutoff_hz);
    report.rms = rms(filtered);
    report.integral_average = integral_average(filtered);
    if (filtered.samples.size() >= window_samples(filtered, config.peak_trace_s)) {
        report.peak_to_peak_avg = peak_to_peak_average(filtered, config.peak_trace_s);
    }

    const SampleSeries envelope = smooth(rectify(filtered), config.smooth_window_s);
    double threshold = 0.0;
    if (config.activation_threshold) {
        threshold = *config.activation_threshold;
    } else {
        const std::size_t n = std::min(envelope.samples.size(), window_samples(envelope, config.baseline_s));
        SampleSeries baseline{std::vector<double>(envelope.samples.begin(),
                                                  envelope.samples.begin() + static_cast<std::ptrdiff_t>(n)),
                              envelope.rate_hz};
        threshold = 2.0 * rms(baseline);
    }
    report.threshold_used = threshold;
    if (threshold > 0.0) {
        report.activations = activation_timing(envelope, threshold, config.min_activation_s);
    }
    if (envelope.duration_s() >= 2.0) {
        report.fatigue_slope = fatigue_slope(envelope);
    }
    if (right != nullptr) {
        report.symmetry_ratio = symmetry_ratio(filtered, dc_filter(*right, config.filter_cutoff_hz));
    }
    return report;
}

}  // namespace bsn
