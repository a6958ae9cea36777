#include "illusion/audio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "illusion/error.hpp"

namespace illusion {

AudioClip::AudioClip(std::vector<double> samples, std::uint32_t sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (sample_rate_ < kMinSampleRate) {
        throw InvalidInput("sample rate " + std::to_string(sample_rate_) + " below 8000 Hz");
    }
    for (double s : samples_) {
        if (!std::isfinite(s) || std::abs(s) > 1.0) {
            throw InvalidInput("sample outside [-1, 1] or not finite");
        }
    }
}

AudioClip AudioClip::empty(std::uint32_t sample_rate) { return AudioClip({}, sample_rate); }

AudioClip AudioClip::peak_normalized(std::vector<double> samples, std::uint32_t sample_rate,
                                     double peak) {
    double max_abs = 0.0;
    for (double s : samples) max_abs = std::max(max_abs, std::abs(s));
    if (max_abs > 0.0) {
        const double gain = peak / max_abs;
        for (double& s : samples) s = std::clamp(s * gain, -1.0, 1.0);
    }
    return AudioClip(std::move(samples), sample_rate);
}

double AudioClip::duration_seconds() const {
    return static_cast<double>(samples_.size()) / static_cast<double>(sample_rate_);
}

double AudioClip::peak() const {
    double max_abs = 0.0;
    for (double s : samples_) max_abs = std::max(max_abs, std::abs(s));
    return max_abs;
}

AudioClip AudioClip::scaled(double gain) const {
    std::vector<double> out(samples_);
    for (double& s : out) s *= gain;
    return AudioClip(std::move(out), sample_rate_);
}

AudioClip AudioClip::slice(std::size_t begin, std::size_t end) const {
    begin = std::min(begin, samples_.size());
    end = std::clamp(end, begin, samples_.size());
    return AudioClip(std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                         samples_.begin() + static_cast<std::ptrdiff_t>(end)),
                     sample_rate_);
}

Envelope rms_envelope(const AudioClip& clip, std::size_t frame_length, std::size_t hop_length) {
    if (frame_length == 0 || hop_length == 0) {
        throw InvalidInput("rms_envelope: frame and hop must be >= 1");
    }
    Envelope env{{}, frame_length, hop_length};
    const auto x = clip.samples();
    const std::size_t n = x.size();
    if (n == 0) {
        env.values.push_back(0.0);
        return env;
    }
    std::size_t frames = 1;
    if (n >= frame_length) frames = (n - frame_length + hop_length - 1) / hop_length + 1;
    env.values.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const std::size_t start = i * hop_length;
        const std::size_t stop = std::min(start + frame_length, n);
        double energy = 0.0;
        for (std::size_t j = start; j < stop; ++j) energy += x[j] * x[j];
        // Samples past the end count as zeros.
        env.values.push_back(std::sqrt(energy / static_cast<double>(frame_length)));
    }
    return env;
}

std::vector<double> resample_linear(std::span<const double> values, std::size_t target_count) {
    if (target_count == 0) throw InvalidInput("resample: target_count must be >= 1");
    std::vector<double> out(target_count, 0.0);
    const std::size_t n = values.size();
    if (n == 0) return out;
    if (n == 1 || target_count == 1) {
        std::fill(out.begin(), out.end(), values[0]);
        return out;
    }
    const double step = static_cast<double>(n - 1) / static_cast<double>(target_count - 1);
    for (std::size_t i = 0; i < target_count; ++i) {
        const double pos = static_cast<double>(i) * step;
        auto left = static_cast<std::size_t>(pos);
        if (left >= n - 1) {
            out[i] = values[n - 1];
            continue;
        }
        const double frac = pos - static_cast<double>(left);
        out[i] = frac == 0.0 ? values[left] : values[left] + frac * (values[left + 1] - values[left]);
    }
    return out;
}

AudioClip resample(const AudioClip& clip, std::size_t target_count) {
    auto out = resample_linear(clip.samples(), target_count);
    for (double& s : out) s = std::clamp(s, -1.0, 1.0);
    return AudioClip(std::move(out), clip.sample_rate());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    const double mean_a = std::accumulate(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0) return 0.0;
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace illusion
