#include "illusion/formant_tts.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "illusion/seed.hpp"
#include "illusion/text.hpp"

namespace illusion {
namespace {

constexpr double kRate = 16000.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One phone: formant targets, voicing and frication levels, and timing.
struct Phone {
    std::array<double, 4> formants;
    double voicing;
    double noise;
    double noise_center_hz;
    double duration_ms;
};

const std::map<std::string, Phone>& phone_table() {
    static const std::map<std::string, Phone> table = {
        {"iy", {{270, 2290, 3010, 3600}, 1.00, 0.0, 0, 150}},
        {"ih", {{390, 1990, 2550, 3600}, 0.95, 0.0, 0, 110}},
        {"eh", {{530, 1840, 2480, 3600}, 1.00, 0.0, 0, 130}},
        {"ey", {{480, 2000, 2600, 3600}, 1.00, 0.0, 0, 170}},
        {"ah", {{640, 1190, 2390, 3600}, 1.00, 0.0, 0, 130}},
        {"ao", {{570, 840, 2410, 3600}, 1.00, 0.0, 0, 170}},
        {"ow", {{450, 900, 2400, 3600}, 1.00, 0.0, 0, 170}},
        {"uw", {{300, 870, 2240, 3600}, 0.95, 0.0, 0, 160}},
        {"ay", {{730, 1090, 2440, 3600}, 1.00, 0.0, 0, 120}},
        {"ay2", {{400, 1950, 2600, 3600}, 0.90, 0.0, 0, 90}},
        {"r", {{490, 1350, 1690, 3600}, 0.70, 0.0, 0, 70}},
        {"w", {{300, 610, 2200, 3600}, 0.60, 0.0, 0, 60}},
        {"n", {{250, 1200, 2500, 3600}, 0.35, 0.0, 0, 70}},
        {"v", {{300, 1500, 2400, 3600}, 0.25, 0.20, 3500, 70}},
        {"z", {{300, 1700, 2500, 3600}, 0.25, 0.30, 5000, 90}},
        {"f", {{400, 1500, 2500, 3600}, 0.00, 0.18, 4000, 100}},
        {"th", {{400, 1400, 2500, 3600}, 0.00, 0.14, 4500, 90}},
        {"s", {{400, 1600, 2600, 3600}, 0.00, 0.15, 5500, 110}},
        {"k", {{400, 1800, 2500, 3600}, 0.00, 0.00, 2500, 55}},
        {"kb", {{400, 1800, 2500, 3600}, 0.00, 0.40, 2500, 20}},
        {"t", {{400, 1700, 2600, 3600}, 0.00, 0.00, 4500, 50}},
        {"tb", {{400, 1700, 2600, 3600}, 0.00, 0.45, 4500, 20}},
    };
    return table;
}

std::vector<std::string> pronounce(const std::string& word) {
    static const std::map<std::string, std::vector<std::string>> lexicon = {
        {"zero", {"z", "iy", "r", "ow"}},
        {"oh", {"ow", "uw"}},
        {"one", {"w", "ah", "n"}},
        {"two", {"t", "tb", "uw"}},
        {"three", {"th", "r", "iy"}},
        {"four", {"f", "ao", "r"}},
        {"five", {"f", "ay", "ay2", "v"}},
        {"six", {"s", "ih", "k", "kb", "s"}},
        {"seven", {"s", "eh", "v", "ah", "n"}},
        {"eight", {"ey", "iy", "t", "tb"}},
        {"nine", {"n", "ay", "ay2", "n"}},
    };
    auto it = lexicon.find(word);
    if (it != lexicon.end()) return it->second;
    return {"ah", "n"};
}

// Second-order resonator with unity gain at DC (Klatt form).
class Resonator {
public:
    void set(double freq, double bandwidth) {
        const double r = std::exp(-std::numbers::pi * bandwidth / kRate);
        c_ = -r * r;
        b_ = 2.0 * r * std::cos(kTwoPi * freq / kRate);
        a_ = 1.0 - b_ - c_;
    }
    double step(double x) {
        const double y = a_ * x + b_ * y1_ + c_ * y2_;
        y2_ = y1_;
        y1_ = y;
        return y;
    }

private:
    double a_ = 1.0, b_ = 0.0, c_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

struct Segment {
    Phone phone;
    std::size_t samples;
};

}  // namespace

AudioClip FormantDigitTts::synthesize(const std::string& prompt, const ProviderSettings& settings,
                                      std::uint64_t seed) {
    Rng rng(derive_seed(seed, "formant-tts"));
    double rate_scale = 0.9 + 0.2 * rng.uniform();
    if (auto it = settings.find("rate"); it != settings.end()) rate_scale *= std::stod(it->second);
    double f0_base = 95.0 + 50.0 * rng.uniform();
    if (auto it = settings.find("f0"); it != settings.end()) f0_base = std::stod(it->second);
    const double level = 0.75 + 0.15 * rng.uniform();

    std::size_t pause_markers = 0;
    {
        std::istringstream in(prompt);
        for (std::string w; in >> w;) pause_markers += (w == kPauseMarker) ? 1 : 0;
    }
    const auto words = text::tokens(prompt);

    const auto ms = [&](double v) { return static_cast<std::size_t>(v * kRate / 1000.0 / rate_scale); };
    const Phone silence{{500, 1500, 2500, 3600}, 0.0, 0.0, 0.0, 0.0};

    std::vector<Segment> plan;
    plan.push_back({silence, ms(60.0 + 80.0 * rng.uniform())});
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) plan.push_back({silence, ms(40.0 + 100.0 * rng.uniform())});
        const double stretch = 0.85 + 0.3 * rng.uniform();
        const double stress = 0.7 + 0.3 * rng.uniform();
        for (const auto& name : pronounce(words[w])) {
            Phone p = phone_table().at(name);
            p.voicing *= stress;
            p.noise *= stress;
            plan.push_back({p, ms(p.duration_ms * stretch)});
        }
    }
    plan.push_back({silence, ms(60.0 + 80.0 * rng.uniform()) + pause_markers * ms(200.0)});

    std::size_t total = 0;
    for (const auto& s : plan) total += s.samples;

    // Formant targets pass through two cascaded 15 ms one-pole smoothers
    // (peak glide about 25 Hz/ms for a 1 kHz step, within the range of
    // natural coarticulation). Levels use a single faster pole.
    const double formant_smooth = 1.0 - std::exp(-1.0 / (0.015 * kRate));
    const double level_smooth = 1.0 - std::exp(-1.0 / (0.006 * kRate));
    std::array<double, 4> formant_stage = plan.front().phone.formants;
    std::array<double, 4> formants = formant_stage;
    const std::array<double, 4> bandwidths{70.0, 100.0, 140.0, 200.0};
    double voicing = 0.0, noise = 0.0, noise_center = 3000.0;

    std::array<Resonator, 4> cascade;
    Resonator glottal, frication;
    glottal.set(0.0, 120.0);
    double radiation_prev = 0.0;
    double pitch_phase = 0.0;

    std::vector<double> out;
    out.reserve(total);
    std::size_t produced = 0;
    for (const auto& seg : plan) {
        for (std::size_t i = 0; i < seg.samples; ++i, ++produced) {
            const double progress = static_cast<double>(produced) / static_cast<double>(std::max<std::size_t>(total, 1));
            for (std::size_t j = 0; j < 4; ++j) {
                formant_stage[j] += formant_smooth * (seg.phone.formants[j] - formant_stage[j]);
                formants[j] += formant_smooth * (formant_stage[j] - formants[j]);
            }
            voicing += level_smooth * (seg.phone.voicing - voicing);
            noise += level_smooth * (seg.phone.noise - noise);
            if (seg.phone.noise_center_hz > 0.0) noise_center += formant_smooth * (seg.phone.noise_center_hz - noise_center);

            const double f0 = f0_base * (1.12 - 0.25 * progress);
            pitch_phase += f0 / kRate;
            double pulse = 0.0;
            if (pitch_phase >= 1.0) {
                pitch_phase -= 1.0;
                pulse = 1.0;
            }
            const double shaped = glottal.step(pulse);
            const double radiated = shaped - radiation_prev;
            radiation_prev = shaped;

            double voiced = radiated * voicing * 40.0;
            for (std::size_t j = 0; j < 4; ++j) {
                cascade[j].set(formants[j], bandwidths[j]);
                voiced = cascade[j].step(voiced);
            }
            frication.set(noise_center, 1800.0);
            const double hiss = frication.step((2.0 * rng.uniform() - 1.0) * noise) * 0.015;
            out.push_back(voiced + hiss);
        }
    }

    AudioClip clip = AudioClip::peak_normalized(std::move(out), static_cast<std::uint32_t>(kRate), level);
    if (registry_ != nullptr) registry_->record(clip, text::join(words));
    return clip;
}

}  // namespace illusion
