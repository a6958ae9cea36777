#include "illusion/providers.hpp"

#include <fstream>

#include <json.hpp>

#include "illusion/seed.hpp"

namespace illusion {

std::uint64_t clip_fingerprint(const AudioClip& clip) {
    std::string bytes;
    bytes.reserve(clip.size() * 2 + 4);
    const std::uint32_t rate = clip.sample_rate();
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((rate >> (8 * i)) & 0xFF));
    for (double s : clip.samples()) {
        const auto q = static_cast<std::uint16_t>(quantize_sample(s));
        bytes.push_back(static_cast<char>(q & 0xFF));
        bytes.push_back(static_cast<char>(q >> 8));
    }
    return fnv1a64(bytes);
}

void TranscriptRegistry::record(const AudioClip& clip, std::string transcript) {
    const auto key = clip_fingerprint(clip);
    std::lock_guard lock(mutex_);
    entries_[key] = std::move(transcript);
}

std::string TranscriptRegistry::lookup(const AudioClip& clip) const {
    const auto key = clip_fingerprint(clip);
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    return it == entries_.end() ? std::string{} : it->second;
}

std::size_t TranscriptRegistry::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

DirectoryTtsProvider::DirectoryTtsProvider(const std::filesystem::path& dir) {
    const auto index_path = dir / "index.json";
    std::ifstream in(index_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + index_path.string());
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& j : doc.at("clips")) {
            Recording r;
            r.prompt = j.at("prompt").get<std::string>();
            r.seed = j.value("seed", std::uint64_t{0});
            r.clip = load_wav(dir / j.at("wav").get<std::string>());
            if (j.contains("transcript")) transcripts_.record(r.clip, j.at("transcript").get<std::string>());
            recordings_.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad TTS index " + index_path.string() + ": " + e.what());
    }
}

AudioClip DirectoryTtsProvider::synthesize(const std::string& prompt, const ProviderSettings&,
                                           std::uint64_t seed) {
    for (const auto& r : recordings_) {
        if (r.prompt == prompt && r.seed == seed) return r.clip;
    }
    const std::string wanted = canonical_text(prompt);
    std::vector<const Recording*> same_text;
    for (const auto& r : recordings_) {
        if (canonical_text(r.prompt) == wanted) same_text.push_back(&r);
    }
    if (same_text.empty()) throw InvalidInput("no recording for prompt \"" + prompt + "\"");
    return same_text[seed % same_text.size()]->clip;
}

}  // namespace illusion
