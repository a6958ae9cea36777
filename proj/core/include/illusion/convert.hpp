#pragma once

#include <cstdint>
#include <optional>

#include "illusion/audio.hpp"

namespace illusion {

struct ConversionParams {
    double phi_min = 0.5;
    double phi_max = 0.8;
    std::uint64_t seed = 0;
    // Test-only override; bypasses sampling when set.
    std::optional<double> forced_phi;

    void validate() const;
};

// Downsampling factor for one clip, uniform on [phi_min, phi_max] and a pure
// function of (seed, draw_index). Honors forced_phi.
double sample_phi(const ConversionParams& params, std::uint64_t draw_index);

// Linear-interpolation resample to floor(phi * L) samples, keeping the input
// sample rate. No normalization.
AudioClip downsample(const AudioClip& clip, double phi);

struct Conversion {
    AudioClip clip;
    double phi = 1.0;
};

// Randomized irreversible conversion: downsample by a sampled phi, relabel at
// the original rate (time-compressed playback, frequencies scaled by 1/phi),
// then peak-normalize to 0.9.
Conversion irreversible_convert(const AudioClip& clip, const ConversionParams& params,
                                std::uint64_t draw_index);

}  // namespace illusion
