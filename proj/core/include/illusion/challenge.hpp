#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "illusion/audio.hpp"
#include "illusion/convert.hpp"
#include "illusion/corpus.hpp"
#include "illusion/sinewave.hpp"

namespace illusion {

struct IllusionEntry {
    std::string source_id;
    // Index of the clean clip in the corpus this entry was built from.
    std::size_t clean_index = 0;
    // canonical_text of the source prompt; distinct texts are distinct sources.
    std::string source_text;
    AudioClip illusion;
    SineWaveParams psi;
    // Absent when built without the irreversible conversion (ablation).
    std::optional<double> phi;
};

struct IllusionCorpus {
    std::vector<IllusionEntry> entries;
    std::vector<std::string> warnings;
};

// Sine-wave render of every corpus clip followed, when `conversion` is set,
// by the irreversible conversion with draw_index = entry ordinal. Clips that
// cannot be rendered are skipped with a warning.
IllusionCorpus build_illusion_corpus(const Corpus& corpus, const SineWaveParams& psi,
                                     const std::optional<ConversionParams>& conversion);

std::string illusion_manifest_json(const IllusionCorpus& corpus);
void save_illusion_corpus(const IllusionCorpus& corpus, const std::filesystem::path& dir);

enum class OptionKind { IllusionCorrect, IllusionDistractor, CleanDistractor };

std::string to_string(OptionKind kind);
OptionKind option_kind_from_string(const std::string& name);

struct Option {
    std::string option_id;
    AudioClip clip;
    OptionKind kind = OptionKind::IllusionDistractor;
    double segment_length_s = 1.0;
    std::string source_id;
    std::optional<double> phi;
};

struct Challenge {
    std::string challenge_id;
    std::string reference_id;
    AudioClip reference;
    std::string reference_prompt;
    std::vector<Option> options;
    std::size_t answer_index = 0;
    std::uint64_t rng_seed = 0;
    std::string instruction;
    double segment_length_s = 1.0;
    // Stamped by whoever issues the challenge; generation itself is pure.
    std::optional<std::int64_t> created_at;
};

// What a client may see: locators only, never kinds or the answer.
struct ChallengeView {
    std::string challenge_id;
    std::string reference_id;
    std::vector<std::string> option_ids;
    std::string instruction;
    double segment_length_s = 1.0;
    std::size_t reference_segments = 0;
    std::vector<std::size_t> option_segments;
};

inline constexpr std::size_t kDefaultOptions = 3;
inline constexpr double kDefaultCleanDecoyProb = 0.3;
inline constexpr double kDefaultSegmentSeconds = 1.0;

const std::vector<std::string>& instruction_templates();

// Pure in its arguments. Throws InvalidInput when the illusions cover fewer
// than n_options distinct sources.
Challenge generate_challenge(const Corpus& clean, const IllusionCorpus& illusions, std::size_t n_options,
                             double clean_decoy_prob, std::uint64_t rng_seed,
                             double segment_length_s = kDefaultSegmentSeconds);

bool verify_answer(const Challenge& challenge, std::size_t selected_index);

// Samples [i*seg, min((i+1)*seg, L)); empty past the end.
AudioClip segment(const AudioClip& clip, std::size_t segment_index, double segment_length_s);
std::size_t segment_count(const AudioClip& clip, double segment_length_s);

ChallengeView view_of(const Challenge& challenge);
std::string view_to_json(const ChallengeView& view);
ChallengeView view_from_json(const std::string& text);

}  // namespace illusion
