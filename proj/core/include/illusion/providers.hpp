#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "illusion/corpus.hpp"

namespace illusion {

// Content hash of a clip at 16-bit precision (rate included).
std::uint64_t clip_fingerprint(const AudioClip& clip);

// Thread-safe fingerprint -> transcript table.
class TranscriptRegistry {
public:
    void record(const AudioClip& clip, std::string transcript);
    // Empty string for clips never recorded.
    std::string lookup(const AudioClip& clip) const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::uint64_t, std::string> entries_;
};

// ASR that answers from a registry filled by whoever produced the audio.
class RegistryAsr final : public AsrProvider {
public:
    explicit RegistryAsr(const TranscriptRegistry& registry) : registry_(registry) {}
    std::string transcribe(const AudioClip& clip) override { return registry_.lookup(clip); }
    bool concurrent_safe() const override { return true; }

private:
    const TranscriptRegistry& registry_;
};

// Serves pre-recorded TTS output. The directory holds index.json:
//   {"clips": [{"prompt": "...", "seed": 1, "wav": "a.wav", "transcript": "..."}]}
// Lookup is by exact (prompt, seed); otherwise the recordings whose prompt
// has the same canonical text are indexed by seed modulo their count.
// "transcript" is optional and feeds transcripts() for DirectoryAsr use.
class DirectoryTtsProvider final : public TtsProvider {
public:
    explicit DirectoryTtsProvider(const std::filesystem::path& dir);
    AudioClip synthesize(const std::string& prompt, const ProviderSettings& settings,
                         std::uint64_t seed) override;
    bool concurrent_safe() const override { return true; }
    const TranscriptRegistry& transcripts() const { return transcripts_; }

private:
    struct Recording {
        std::string prompt;
        std::uint64_t seed = 0;
        AudioClip clip;
    };
    std::vector<Recording> recordings_;
    TranscriptRegistry transcripts_;
};

// Function-backed stubs for tests and scripted pipelines.
class ScriptedTts final : public TtsProvider {
public:
    using Fn = std::function<AudioClip(const std::string& prompt, std::uint64_t seed)>;
    explicit ScriptedTts(Fn fn, bool concurrent = false) : fn_(std::move(fn)), concurrent_(concurrent) {}
    AudioClip synthesize(const std::string& prompt, const ProviderSettings&, std::uint64_t seed) override {
        return fn_(prompt, seed);
    }
    bool concurrent_safe() const override { return concurrent_; }

private:
    Fn fn_;
    bool concurrent_;
};

class ScriptedAsr final : public AsrProvider {
public:
    using Fn = std::function<std::string(const AudioClip& clip)>;
    explicit ScriptedAsr(Fn fn, bool concurrent = false) : fn_(std::move(fn)), concurrent_(concurrent) {}
    std::string transcribe(const AudioClip& clip) override { return fn_(clip); }
    bool concurrent_safe() const override { return concurrent_; }

private:
    Fn fn_;
    bool concurrent_;
};

}  // namespace illusion
