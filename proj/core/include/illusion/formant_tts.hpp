#pragma once

#include <memory>
#include <string>

#include "illusion/corpus.hpp"
#include "illusion/providers.hpp"

namespace illusion {

// Rule-based cascade formant synthesizer for spoken English digits
// ("zero" .. "nine", "oh"). Unknown words become a neutral vowel. Prompts are
// read through text::tokens, so respelled words ("f-i-v-e") are spoken as
// the word; each pause marker adds 200 ms of trailing silence.
//
// The seed varies pitch, speaking rate, pauses and level. Settings:
//   "rate"  speaking-rate multiplier (default 1.0)
//   "f0"    base pitch in Hz (default drawn from the seed, 95..145)
// Output is 16 kHz mono. When a registry is attached, every clip is recorded
// with its spoken text so RegistryAsr can act as a perfect listener.
class FormantDigitTts final : public TtsProvider {
public:
    FormantDigitTts() = default;
    explicit FormantDigitTts(TranscriptRegistry* registry) : registry_(registry) {}

    AudioClip synthesize(const std::string& prompt, const ProviderSettings& settings,
                         std::uint64_t seed) override;
    bool concurrent_safe() const override { return true; }

private:
    TranscriptRegistry* registry_ = nullptr;
};

}  // namespace illusion
