#include "illusion/sinewave.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <json.hpp>

#include "illusion/error.hpp"
#include "illusion/lpc.hpp"

namespace illusion {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// White-noise correction on r[0] (-40 dB floor) keeps near-singular frames
// such as pure tones well conditioned.
constexpr double kNoiseFloorCorrection = 1.0001;

std::vector<double> hamming(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return w;
}

std::vector<Partial> default_partials(std::size_t k) {
    std::vector<Partial> out(k);
    for (std::size_t j = 0; j < k; ++j) out[j] = {500.0 * static_cast<double>(j + 1), 0.0};
    return out;
}

std::vector<Partial> silent_like(const std::vector<Partial>& previous) {
    std::vector<Partial> out = previous;
    for (auto& p : out) p.amplitude = 0.0;
    return out;
}

}  // namespace

void SineWaveParams::validate() const {
    if (hop_length < 1 || window_size < 2 * hop_length) {
        throw InvalidInput("window_size must be >= 2 * hop_length >= 2");
    }
    if (num_formants < 1 || num_formants > 8) throw InvalidInput("num_formants must be in [1, 8]");
    if (lpc_order < 2 * num_formants + 2) throw InvalidInput("lpc_order must be >= 2 * num_formants + 2");
    if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) throw InvalidInput("pre_emphasis must be in [0, 1)");
    if (!(max_bandwidth_hz > 0.0)) throw InvalidInput("max_bandwidth_hz must be positive");
    if (!(silence_floor >= 0.0)) throw InvalidInput("silence_floor must be non-negative");
}

double FormantTrack::max_frequency() const {
    double best = 0.0;
    for (const auto& frame : frames) {
        for (const auto& p : frame) best = std::max(best, p.frequency_hz);
    }
    return best;
}

FormantTrack analyze_formants(const AudioClip& clip, const SineWaveParams& params) {
    params.validate();
    const auto x = clip.samples();
    const std::size_t window = params.window_size;
    if (x.size() < window) {
        throw TooShortError("clip has " + std::to_string(x.size()) + " samples, window needs " +
                            std::to_string(window));
    }
    const double rate = static_cast<double>(clip.sample_rate());
    const double nyquist = rate / 2.0;
    const std::size_t k = params.num_formants;
    const std::size_t frame_count = (x.size() - window) / params.hop_length + 1;
    const auto taper = hamming(window);

    FormantTrack track;
    track.hop_length = params.hop_length;
    track.window_size = window;
    track.source_length = x.size();
    track.sample_rate = clip.sample_rate();
    track.frames.reserve(frame_count);

    std::vector<Partial> previous = default_partials(k);
    std::vector<double> frame(window);

    for (std::size_t f = 0; f < frame_count; ++f) {
        const std::size_t start = f * params.hop_length;
        double energy = 0.0;
        for (std::size_t i = 0; i < window; ++i) energy += x[start + i] * x[start + i];
        const double rms = std::sqrt(energy / static_cast<double>(window));
        if (rms < params.silence_floor) {
            track.frames.push_back(silent_like(previous));
            continue;
        }

        for (std::size_t i = 0; i < window; ++i) {
            const std::size_t n = start + i;
            const double before = n > 0 ? x[n - 1] : x[n];
            frame[i] = (x[n] - params.pre_emphasis * before) * taper[i];
        }
        auto r = lpc::autocorrelation(frame, params.lpc_order);
        r[0] *= kNoiseFloorCorrection;
        const auto model = lpc::levinson_durbin(r, params.lpc_order);
        const auto roots = lpc::polynomial_roots(model.coefficients);

        std::vector<double> candidates;
        for (const auto& z : roots) {
            if (z.imag() <= 0.0) continue;
            const double magnitude = std::abs(z);
            if (magnitude <= 0.0 || magnitude >= 1.0) continue;
            const double freq = std::arg(z) * rate / kTwoPi;
            const double bandwidth = -std::log(magnitude) * rate / std::numbers::pi;
            if (bandwidth > params.max_bandwidth_hz) continue;
            if (freq < params.min_frequency_hz || freq >= nyquist) continue;
            candidates.push_back(freq);
        }
        std::sort(candidates.begin(), candidates.end());
        if (candidates.size() > k) candidates.resize(k);

        // Spectral envelope at each candidate, with the pre-emphasis tilt undone.
        const double gain = std::sqrt(std::max(model.error, 0.0));
        std::vector<double> envelope(candidates.size());
        double envelope_power = 0.0;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            const double omega = kTwoPi * candidates[j] / rate;
            const double a_mag = std::max(lpc::response_magnitude(model.coefficients, omega), 1e-12);
            const double tilt = std::max(std::abs(1.0 - params.pre_emphasis * std::polar(1.0, -omega)), 1e-12);
            envelope[j] = gain / a_mag / tilt;
            envelope_power += envelope[j] * envelope[j];
        }
        // Partial powers (a^2 / 2) sum to the frame's mean-square level.
        const double scale = envelope_power > 0.0 ? rms * std::sqrt(2.0 / envelope_power) : 0.0;

        std::vector<Partial> partials;
        partials.reserve(k);
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            partials.push_back({candidates[j], std::min(envelope[j] * scale, 1.0)});
        }
        // Pad from the previous frame, skipping the frequencies each candidate
        // continues, so oscillators keep their own trajectories.
        std::vector<bool> continued(previous.size(), false);
        for (double c : candidates) {
            std::size_t best = previous.size();
            for (std::size_t j = 0; j < previous.size(); ++j) {
                if (continued[j]) continue;
                if (best == previous.size() ||
                    std::abs(previous[j].frequency_hz - c) < std::abs(previous[best].frequency_hz - c)) {
                    best = j;
                }
            }
            if (best < previous.size()) continued[best] = true;
        }
        for (std::size_t j = 0; j < previous.size() && partials.size() < k; ++j) {
            if (!continued[j]) partials.push_back({previous[j].frequency_hz, 0.0});
        }
        std::sort(partials.begin(), partials.end(),
                  [](const Partial& a, const Partial& b) { return a.frequency_hz < b.frequency_hz; });
        track.frames.push_back(partials);
        previous = std::move(partials);
    }
    return track;
}

AudioClip synthesize(const FormantTrack& track) {
    const std::size_t length = track.source_length;
    std::vector<double> out(length, 0.0);
    if (track.frames.empty() || length == 0) return AudioClip(std::move(out), track.sample_rate);

    const double rate = static_cast<double>(track.sample_rate);
    const std::size_t slots = track.num_formants();
    const std::size_t last = track.frames.size() - 1;
    const double first_center = track.frame_center(0);
    const double hop = static_cast<double>(track.hop_length);

    std::vector<double> phase(slots, 0.0);
    for (std::size_t n = 0; n < length; ++n) {
        const double pos = (static_cast<double>(n) - first_center) / hop;
        std::size_t left = 0;
        double frac = 0.0;
        if (pos <= 0.0) {
            left = 0;
        } else if (pos >= static_cast<double>(last)) {
            left = last;
        } else {
            left = static_cast<std::size_t>(pos);
            frac = pos - static_cast<double>(left);
        }
        const std::size_t right = std::min(left + 1, last);
        const auto& a = track.frames[left];
        const auto& b = track.frames[right];
        double acc = 0.0;
        for (std::size_t j = 0; j < slots; ++j) {
            const double freq = a[j].frequency_hz + frac * (b[j].frequency_hz - a[j].frequency_hz);
            const double amp = a[j].amplitude + frac * (b[j].amplitude - a[j].amplitude);
            acc += amp * std::sin(phase[j]);
            phase[j] = std::fmod(phase[j] + kTwoPi * freq / rate, kTwoPi);
        }
        out[n] = acc;
    }
    return AudioClip::peak_normalized(std::move(out), track.sample_rate, 0.9);
}

AudioClip render_sinewave(const AudioClip& clip, const SineWaveParams& params) {
    return synthesize(analyze_formants(clip, params));
}

std::string track_to_json(const FormantTrack& track) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& frame : track.frames) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& p : frame) row.push_back({p.frequency_hz, p.amplitude});
        frames.push_back(std::move(row));
    }
    nlohmann::json doc{{"sample_rate", track.sample_rate},
                       {"hop_length", track.hop_length},
                       {"window_size", track.window_size},
                       {"source_length", track.source_length},
                       {"num_formants", track.num_formants()},
                       {"frames", std::move(frames)}};
    return doc.dump();
}

FormantTrack track_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        FormantTrack track;
        track.sample_rate = doc.at("sample_rate").get<std::uint32_t>();
        track.hop_length = doc.at("hop_length").get<std::size_t>();
        track.window_size = doc.at("window_size").get<std::size_t>();
        track.source_length = doc.at("source_length").get<std::size_t>();
        for (const auto& row : doc.at("frames")) {
            std::vector<Partial> frame;
            for (const auto& pair : row) frame.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
            track.frames.push_back(std::move(frame));
        }
        return track;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad formant track JSON: ") + e.what());
    }
}

}  // namespace illusion
