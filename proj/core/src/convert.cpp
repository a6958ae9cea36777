#include "illusion/convert.hpp"

#include <cmath>
#include <vector>

#include "illusion/error.hpp"
#include "illusion/seed.hpp"

namespace illusion {

void ConversionParams::validate() const {
    if (!(phi_min > 0.0 && phi_min <= phi_max && phi_max <= 1.0)) {
        throw InvalidInput("conversion requires 0 < phi_min <= phi_max <= 1");
    }
    if (forced_phi && !(*forced_phi > 0.0 && *forced_phi <= 1.0)) {
        throw InvalidInput("forced phi must lie in (0, 1]");
    }
}

double sample_phi(const ConversionParams& params, std::uint64_t draw_index) {
    params.validate();
    if (params.forced_phi) return *params.forced_phi;
    Rng rng(derive_seed(params.seed, "convert.phi", draw_index));
    return params.phi_min + rng.uniform() * (params.phi_max - params.phi_min);
}

AudioClip downsample(const AudioClip& clip, double phi) {
    if (clip.is_empty()) throw InvalidInput("cannot convert an empty clip");
    const auto target = static_cast<std::size_t>(std::floor(phi * static_cast<double>(clip.size())));
    if (target == 0) throw InvalidInput("conversion would produce an empty clip");
    return resample(clip, target);
}

Conversion irreversible_convert(const AudioClip& clip, const ConversionParams& params,
                                std::uint64_t draw_index) {
    const double phi = sample_phi(params, draw_index);
    const AudioClip reduced = downsample(clip, phi);
    std::vector<double> samples(reduced.samples().begin(), reduced.samples().end());
    return {AudioClip::peak_normalized(std::move(samples), clip.sample_rate(), 0.9), phi};
}

}  // namespace illusion
