#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "illusion/audio.hpp"
#include "illusion/error.hpp"

namespace illusion {

// Opaque provider settings passed through to the TTS backend.
using ProviderSettings = std::map<std::string, std::string>;

// Marker appended to a prompt when clips were cut for running long. It
// normalizes to nothing, so transcript comparison ignores it.
inline constexpr const char* kPauseMarker = "...";

struct GenerationConfig {
    std::string initial_prompt;
    std::size_t candidates_per_round = 8;
    std::size_t target_size = 30;
    double max_duration_s = 2.0;
    double score_threshold = 0.8;
    std::size_t refinement_budget = 3;
    std::size_t max_rounds = 16;
    ProviderSettings provider_settings;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScoredClip {
    std::string id;
    AudioClip clip;
    std::string prompt;
    std::size_t prompt_revision = 0;
    std::string transcript;
    double score = 0.0;
    std::uint64_t seed = 0;
};

struct Feedback {
    std::size_t truncated_count = 0;
    std::vector<std::pair<std::string, std::string>> mismatch_tokens;
    double mean_score = 0.0;

    bool empty() const { return truncated_count == 0 && mismatch_tokens.empty(); }
};

// Diagnostic record of one generation round.
struct RoundLog {
    std::size_t round = 0;
    std::string prompt;
    std::size_t prompt_revision = 0;
    std::size_t synthesized = 0;
    std::size_t dropped_for_duration = 0;
    std::size_t passed = 0;
    std::size_t taken = 0;
    Feedback feedback;
};

struct Corpus {
    std::vector<ScoredClip> entries;
    std::filesystem::path manifest_path;
    std::vector<RoundLog> rounds;
};

class TtsProvider {
public:
    virtual ~TtsProvider() = default;
    // Must be deterministic in (prompt, settings, seed).
    virtual AudioClip synthesize(const std::string& prompt, const ProviderSettings& settings,
                                 std::uint64_t seed) = 0;
    // True when synthesize may be called from several threads at once.
    virtual bool concurrent_safe() const { return false; }
};

class AsrProvider {
public:
    virtual ~AsrProvider() = default;
    virtual std::string transcribe(const AudioClip& clip) = 0;
    virtual bool concurrent_safe() const { return false; }
};

// Raised when max_rounds runs out before the target size is reached.
class PartialCorpusError : public Error {
public:
    PartialCorpusError(Corpus partial, std::vector<Feedback> history);
    const Corpus& partial() const { return partial_; }
    const std::vector<Feedback>& history() const { return history_; }

private:
    Corpus partial_;
    std::vector<Feedback> history_;
};

// 0.6 * (1 - token edit distance) + 0.2 * loudness + 0.2 * no-clipping.
double intelligibility_score(const AudioClip& clip, const std::string& prompt, const std::string& transcript);

// Mean of the 400/160 RMS envelope, the loudness measure used by the score.
double mean_rms(const AudioClip& clip);

Feedback build_feedback(const std::vector<ScoredClip>& round_clips, std::size_t truncated_count = 0);

std::string refine_prompt(const std::string& prompt, const Feedback& feedback);

// Prompt with respellings and pause markers undone: the content it asks for.
std::string canonical_text(const std::string& prompt);

Corpus build_corpus(const GenerationConfig& config, TtsProvider& tts, AsrProvider& asr);

// One generation loop per prompt, each seeded from derive_seed(config.seed,
// "corpus", prompt ordinal), merged in prompt order with sequential ids.
Corpus build_corpus_set(const std::vector<std::string>& prompts, const GenerationConfig& config,
                        TtsProvider& tts, AsrProvider& asr);

// Writes <dir>/manifest.json and one WAV per entry.
void save_corpus(Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& manifest_path);
std::string corpus_manifest_json(const Corpus& corpus);

}  // namespace illusion
