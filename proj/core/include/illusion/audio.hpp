#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace illusion {

inline constexpr std::uint32_t kCanonicalSampleRate = 16000;
inline constexpr std::uint32_t kMinSampleRate = 8000;

// Mono PCM audio. Samples are finite and within [-1, 1]; the rate is at
// least 8 kHz. Both are checked on construction and never change afterwards.
class AudioClip {
public:
    AudioClip() = default;
    AudioClip(std::vector<double> samples, std::uint32_t sample_rate);

    // Zero-length clip at the given rate.
    static AudioClip empty(std::uint32_t sample_rate = kCanonicalSampleRate);
    // Scales so that max |sample| == peak. All-zero input is returned as is.
    static AudioClip peak_normalized(std::vector<double> samples, std::uint32_t sample_rate,
                                     double peak = 0.9);

    std::span<const double> samples() const { return samples_; }
    std::uint32_t sample_rate() const { return sample_rate_; }
    std::size_t size() const { return samples_.size(); }
    bool is_empty() const { return samples_.empty(); }
    double duration_seconds() const;
    double peak() const;

    AudioClip scaled(double gain) const;
    AudioClip slice(std::size_t begin, std::size_t end) const;

    friend bool operator==(const AudioClip&, const AudioClip&) = default;

private:
    std::vector<double> samples_;
    std::uint32_t sample_rate_ = kCanonicalSampleRate;
};

struct Envelope {
    std::vector<double> values;
    std::size_t frame_length = 0;
    std::size_t hop_length = 0;
};

// Frame-wise RMS. value[i] covers samples [i*hop, i*hop + frame); the final
// partial frame is zero-padded. An empty clip yields {0.0}.
Envelope rms_envelope(const AudioClip& clip, std::size_t frame_length, std::size_t hop_length);

// Linear interpolation onto target_count points spanning the same first and
// last sample. The output keeps the input's sample rate; callers relabel it
// if their policy differs.
AudioClip resample(const AudioClip& clip, std::size_t target_count);
std::vector<double> resample_linear(std::span<const double> values, std::size_t target_count);

// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// ---- WAV (RIFF, PCM 16-bit) ----

// Reads 16-bit PCM mono or stereo (downmixed by averaging).
AudioClip load_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

// Writes 16-bit PCM mono. Out-of-range samples are clamped.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

std::int16_t quantize_sample(double value);

}  // namespace illusion
