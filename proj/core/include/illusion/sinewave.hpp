#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "illusion/audio.hpp"

namespace illusion {

// Analysis/synthesis settings for sine-wave speech. The first three fields
// are the renderer's public knobs; the rest tune the formant tracker.
struct SineWaveParams {
    std::size_t window_size = 512;
    std::size_t hop_length = 160;
    std::size_t num_formants = 4;
    std::size_t lpc_order = 12;
    double pre_emphasis = 0.97;

    double max_bandwidth_hz = 400.0;
    double silence_floor = 0.01;
    // Poles below this are spectral tilt, not formants.
    double min_frequency_hz = 50.0;

    // Throws InvalidInput when an invariant is violated.
    void validate() const;
};

struct Partial {
    double frequency_hz = 0.0;
    double amplitude = 0.0;
};

// Per-frame partials. Frame i is centred on sample i*hop + window/2.
struct FormantTrack {
    std::vector<std::vector<Partial>> frames;
    std::size_t hop_length = 0;
    std::size_t window_size = 0;
    std::size_t source_length = 0;
    std::uint32_t sample_rate = kCanonicalSampleRate;

    std::size_t num_formants() const { return frames.empty() ? 0 : frames.front().size(); }
    double frame_center(std::size_t frame) const {
        return static_cast<double>(frame * hop_length) + static_cast<double>(window_size) / 2.0;
    }
    double max_frequency() const;
};

FormantTrack analyze_formants(const AudioClip& clip, const SineWaveParams& params);

// One continuous-phase oscillator per partial slot; frequency and amplitude
// are interpolated linearly between frame centres. Peak-normalized to 0.9.
AudioClip synthesize(const FormantTrack& track);

AudioClip render_sinewave(const AudioClip& clip, const SineWaveParams& params);

std::string track_to_json(const FormantTrack& track);
FormantTrack track_from_json(const std::string& text);

}  // namespace illusion
