#include "illusion/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "illusion/seed.hpp"
#include "illusion/text.hpp"
#include "parallel.hpp"

namespace illusion {

void GenerationConfig::validate() const {
    if (candidates_per_round < 1) throw InvalidInput("candidates_per_round must be >= 1");
    if (target_size < 1) throw InvalidInput("target_size must be >= 1");
    if (!(max_duration_s > 0.0)) throw InvalidInput("max_duration_s must be positive");
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) throw InvalidInput("score_threshold must be in [0, 1]");
    if (max_rounds < 1) throw InvalidInput("max_rounds must be >= 1");
}

PartialCorpusError::PartialCorpusError(Corpus partial, std::vector<Feedback> history)
    : Error("corpus generation stopped at " + std::to_string(partial.entries.size()) +
            " entries after " + std::to_string(history.size()) + " rounds"),
      partial_(std::move(partial)),
      history_(std::move(history)) {}

double mean_rms(const AudioClip& clip) {
    const auto env = rms_envelope(clip, 400, 160);
    double sum = 0.0;
    for (double v : env.values) sum += v;
    return sum / static_cast<double>(env.values.size());
}

double intelligibility_score(const AudioClip& clip, const std::string& prompt, const std::string& transcript) {
    const double match = 1.0 - text::normalized_edit_distance(text::tokens(prompt), text::tokens(transcript));
    const double loudness = mean_rms(clip);
    const double loudness_term = (loudness >= 0.05 && loudness <= 0.7) ? 1.0 : 0.0;
    std::size_t clipped = 0;
    for (double s : clip.samples()) clipped += std::abs(s) > 0.99 ? 1 : 0;
    const double clipped_fraction =
        clip.is_empty() ? 0.0 : static_cast<double>(clipped) / static_cast<double>(clip.size());
    const double clipping_term = clipped_fraction < 0.001 ? 1.0 : 0.0;
    return 0.6 * match + 0.2 * loudness_term + 0.2 * clipping_term;
}

Feedback build_feedback(const std::vector<ScoredClip>& round_clips, std::size_t truncated_count) {
    Feedback fb;
    fb.truncated_count = truncated_count;
    double total = 0.0;
    for (const auto& c : round_clips) {
        total += c.score;
        for (auto& m : text::token_mismatches(text::tokens(c.prompt), text::tokens(c.transcript))) {
            if (std::find(fb.mismatch_tokens.begin(), fb.mismatch_tokens.end(), m) == fb.mismatch_tokens.end()) {
                fb.mismatch_tokens.push_back(std::move(m));
            }
        }
    }
    fb.mean_score = round_clips.empty() ? 0.0 : total / static_cast<double>(round_clips.size());
    return fb;
}

namespace {

std::string spell_out(const std::string& word) {
    std::string out;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (i > 0) out.push_back('-');
        out.push_back(word[i]);
    }
    return out;
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

std::string refine_prompt(const std::string& prompt, const Feedback& feedback) {
    std::vector<std::string> flagged;
    for (const auto& [expected, heard] : feedback.mismatch_tokens) {
        if (!expected.empty()) flagged.push_back(expected);
    }
    auto words = split_words(prompt);
    if (flagged.empty() && feedback.truncated_count == 0) return prompt;
    for (auto& w : words) {
        const std::string norm = text::normalize(w);
        if (norm.empty()) continue;
        if (std::find(flagged.begin(), flagged.end(), norm) != flagged.end()) w = spell_out(norm);
    }
    if (feedback.truncated_count > 0 && (words.empty() || words.back() != kPauseMarker)) {
        words.emplace_back(kPauseMarker);
    }
    return text::join(words);
}

std::string canonical_text(const std::string& prompt) { return text::join(text::tokens(prompt)); }

Corpus build_corpus(const GenerationConfig& config, TtsProvider& tts, AsrProvider& asr) {
    config.validate();
    Corpus corpus;
    std::vector<Feedback> history;
    std::string prompt = config.initial_prompt;
    std::size_t revision = 0;
    const std::size_t k = config.candidates_per_round;
    const std::size_t tts_threads = tts.concurrent_safe() ? detail::default_threads() : 1;
    const std::size_t asr_threads = asr.concurrent_safe() ? detail::default_threads() : 1;

    for (std::size_t round = 0; round < config.max_rounds; ++round) {
        RoundLog log;
        log.round = round;
        log.prompt = prompt;
        log.prompt_revision = revision;

        std::vector<std::uint64_t> seeds(k);
        for (std::size_t i = 0; i < k; ++i) seeds[i] = derive_seed(config.seed, "corpus.candidate", round * k + i);
        std::vector<AudioClip> candidates(k);
        detail::parallel_for(k, tts_threads, [&](std::size_t i) {
            candidates[i] = tts.synthesize(prompt, config.provider_settings, seeds[i]);
        });
        log.synthesized = k;

        // Duration gate before any transcription.
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < k; ++i) {
            if (candidates[i].duration_seconds() <= config.max_duration_s) kept.push_back(i);
        }
        log.dropped_for_duration = k - kept.size();

        std::vector<ScoredClip> scored(kept.size());
        detail::parallel_for(kept.size(), asr_threads, [&](std::size_t j) {
            const std::size_t i = kept[j];
            ScoredClip& sc = scored[j];
            sc.clip = candidates[i];
            sc.prompt = prompt;
            sc.prompt_revision = revision;
            sc.seed = seeds[i];
            sc.transcript = asr.transcribe(sc.clip);
            sc.score = intelligibility_score(sc.clip, prompt, sc.transcript);
        });

        std::vector<ScoredClip> good;
        for (auto& sc : scored) {
            if (sc.score >= config.score_threshold) good.push_back(std::move(sc));
        }
        log.passed = good.size();
        std::stable_sort(good.begin(), good.end(), [](const ScoredClip& a, const ScoredClip& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.seed < b.seed;
        });

        const std::size_t room = config.target_size - corpus.entries.size();
        const std::size_t take = std::min(room, good.size());
        for (std::size_t i = 0; i < take; ++i) corpus.entries.push_back(good[i]);
        log.taken = take;

        if (round < config.refinement_budget) {
            log.feedback = build_feedback(good, log.dropped_for_duration);
            const std::string next = refine_prompt(prompt, log.feedback);
            if (next != prompt) ++revision;
            prompt = next;
        }
        history.push_back(log.feedback);
        corpus.rounds.push_back(std::move(log));

        if (corpus.entries.size() >= config.target_size) return corpus;
    }
    throw PartialCorpusError(std::move(corpus), std::move(history));
}

Corpus build_corpus_set(const std::vector<std::string>& prompts, const GenerationConfig& config,
                        TtsProvider& tts, AsrProvider& asr) {
    if (prompts.empty()) throw InvalidInput("no prompts given");
    Corpus merged;
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        GenerationConfig per_prompt = config;
        per_prompt.initial_prompt = prompts[p];
        per_prompt.seed = derive_seed(config.seed, "corpus", p);
        Corpus part = build_corpus(per_prompt, tts, asr);
        for (auto& e : part.entries) merged.entries.push_back(std::move(e));
        for (auto& r : part.rounds) merged.rounds.push_back(std::move(r));
    }
    return merged;
}

namespace {

std::string entry_id(std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "clip-%04zu", ordinal);
    return buf;
}

}  // namespace

std::string corpus_manifest_json(const Corpus& corpus) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
        const auto& e = corpus.entries[i];
        const std::string id = e.id.empty() ? entry_id(i) : e.id;
        entries.push_back({{"id", id},
                           {"wav_path", id + ".wav"},
                           {"prompt", e.prompt},
                           {"prompt_revision", e.prompt_revision},
                           {"transcript", e.transcript},
                           {"score", e.score},
                           {"seed", e.seed},
                           {"duration_s", e.clip.duration_seconds()}});
    }
    return nlohmann::json{{"entries", std::move(entries)}}.dump(2) + "\n";
}

void save_corpus(Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
        auto& e = corpus.entries[i];
        if (e.id.empty()) e.id = entry_id(i);
        save_wav(e.clip, dir / (e.id + ".wav"));
    }
    corpus.manifest_path = dir / "manifest.json";
    std::ofstream out(corpus.manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + corpus.manifest_path.string());
    out << corpus_manifest_json(corpus);
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    Corpus corpus;
    corpus.manifest_path = manifest_path;
    try {
        const auto doc = nlohmann::json::parse(in);
        const auto dir = manifest_path.parent_path();
        for (const auto& j : doc.at("entries")) {
            ScoredClip e;
            e.id = j.at("id").get<std::string>();
            e.clip = load_wav(dir / j.at("wav_path").get<std::string>());
            e.prompt = j.at("prompt").get<std::string>();
            e.prompt_revision = j.at("prompt_revision").get<std::size_t>();
            e.transcript = j.at("transcript").get<std::string>();
            e.score = j.at("score").get<double>();
            e.seed = j.at("seed").get<std::uint64_t>();
            corpus.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad corpus manifest " + manifest_path.string() + ": " + e.what());
    }
    return corpus;
}

}  // namespace illusion
