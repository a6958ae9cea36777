#include "illusion/challenge.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "illusion/seed.hpp"

namespace illusion {
namespace {

std::string hex_id(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

}  // namespace

IllusionCorpus build_illusion_corpus(const Corpus& corpus, const SineWaveParams& psi,
                                     const std::optional<ConversionParams>& conversion) {
    if (corpus.entries.empty()) throw InvalidInput("corpus is empty");
    psi.validate();
    if (conversion) conversion->validate();
    IllusionCorpus out;
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
        const auto& clean = corpus.entries[i];
        const std::string source_id = clean.id.empty() ? "entry-" + std::to_string(i) : clean.id;
        try {
            IllusionEntry entry;
            entry.source_id = source_id;
            entry.clean_index = i;
            entry.source_text = canonical_text(clean.prompt);
            entry.psi = psi;
            entry.illusion = render_sinewave(clean.clip, psi);
            if (conversion) {
                auto converted = irreversible_convert(entry.illusion, *conversion, i);
                entry.illusion = std::move(converted.clip);
                entry.phi = converted.phi;
            }
            out.entries.push_back(std::move(entry));
        } catch (const Error& e) {
            out.warnings.push_back("skipped " + source_id + ": " + e.what());
        }
    }
    if (out.entries.empty()) throw InvalidInput("no corpus entry could be rendered");
    return out;
}

std::string illusion_manifest_json(const IllusionCorpus& corpus) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : corpus.entries) {
        entries.push_back({{"source_id", e.source_id},
                           {"wav_path", e.source_id + ".illusion.wav"},
                           {"source_text", e.source_text},
                           {"samples", e.illusion.size()},
                           {"psi",
                            {{"window_size", e.psi.window_size},
                             {"hop_length", e.psi.hop_length},
                             {"num_formants", e.psi.num_formants},
                             {"lpc_order", e.psi.lpc_order},
                             {"pre_emphasis", e.psi.pre_emphasis}}},
                           {"phi", e.phi ? nlohmann::json(*e.phi) : nlohmann::json(nullptr)}});
    }
    return nlohmann::json{{"entries", std::move(entries)}, {"warnings", corpus.warnings}}.dump(2) + "\n";
}

void save_illusion_corpus(const IllusionCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& e : corpus.entries) save_wav(e.illusion, dir / (e.source_id + ".illusion.wav"));
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << illusion_manifest_json(corpus);
}

std::string to_string(OptionKind kind) {
    switch (kind) {
        case OptionKind::IllusionCorrect: return "illusion-correct";
        case OptionKind::IllusionDistractor: return "illusion-distractor";
        case OptionKind::CleanDistractor: return "clean-distractor";
    }
    return "unknown";
}

OptionKind option_kind_from_string(const std::string& name) {
    if (name == "illusion-correct") return OptionKind::IllusionCorrect;
    if (name == "illusion-distractor") return OptionKind::IllusionDistractor;
    if (name == "clean-distractor") return OptionKind::CleanDistractor;
    throw FormatError("unknown option kind \"" + name + "\"");
}

const std::vector<std::string>& instruction_templates() {
    static const std::vector<std::string> pool = {
        "Listen to the reference, then pick the tone pattern that says the same thing.",
        "Which of the following whistled clips matches the words of the reference recording?",
        "Play every option. Select the one whose hidden speech matches the reference.",
        "The reference speaks a short phrase. Choose the sine-wave clip carrying the same phrase.",
        "Find the synthetic clip that repeats what you heard in the reference audio.",
    };
    return pool;
}

Challenge generate_challenge(const Corpus& clean, const IllusionCorpus& illusions, std::size_t n_options,
                             double clean_decoy_prob, std::uint64_t rng_seed, double segment_length_s) {
    if (n_options < 1) throw InvalidInput("n_options must be >= 1");
    if (!(clean_decoy_prob >= 0.0 && clean_decoy_prob <= 1.0)) throw InvalidInput("clean_decoy_prob must be in [0, 1]");
    if (!(segment_length_s > 0.0)) throw InvalidInput("segment length must be positive");

    // First illusion per distinct source text.
    std::vector<const IllusionEntry*> sources;
    std::map<std::string, bool> seen;
    for (const auto& e : illusions.entries) {
        if (e.clean_index >= clean.entries.size()) throw InvalidInput("illusion entry points outside the clean corpus");
        if (seen.emplace(e.source_text, true).second) sources.push_back(&e);
    }
    if (sources.size() < n_options) {
        throw InvalidInput("need " + std::to_string(n_options) + " distinct sources, have " +
                           std::to_string(sources.size()));
    }

    Rng rng(rng_seed);
    const std::size_t target = rng.index(sources.size());
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (i != target) others.push_back(i);
    }
    // Partial Fisher-Yates: the first n_options - 1 picks are the distractors.
    for (std::size_t i = 0; i + 1 < n_options; ++i) {
        const std::size_t j = i + rng.index(others.size() - i);
        std::swap(others[i], others[j]);
    }
    const bool use_clean_decoy = rng.bernoulli(clean_decoy_prob) && n_options >= 2;

    Challenge ch;
    ch.rng_seed = rng_seed;
    ch.segment_length_s = segment_length_s;
    ch.challenge_id = hex_id(derive_seed(rng_seed, "challenge.id"));
    ch.reference_id = hex_id(derive_seed(rng_seed, "challenge.reference"));
    const auto& target_entry = *sources[target];
    ch.reference = clean.entries[target_entry.clean_index].clip;
    ch.reference_prompt = clean.entries[target_entry.clean_index].prompt;

    std::vector<Option> options;
    options.push_back({"", target_entry.illusion, OptionKind::IllusionCorrect, segment_length_s,
                       target_entry.source_id, target_entry.phi});
    for (std::size_t i = 0; i + 1 < n_options; ++i) {
        const auto& src = *sources[others[i]];
        if (i == 0 && use_clean_decoy) {
            options.push_back({"", clean.entries[src.clean_index].clip, OptionKind::CleanDistractor,
                               segment_length_s, src.source_id, std::nullopt});
        } else {
            options.push_back({"", src.illusion, OptionKind::IllusionDistractor, segment_length_s, src.source_id,
                               src.phi});
        }
    }
    rng.shuffle(options);
    for (std::size_t i = 0; i < options.size(); ++i) {
        options[i].option_id = hex_id(derive_seed(rng_seed, "challenge.option", i));
        if (options[i].kind == OptionKind::IllusionCorrect) ch.answer_index = i;
    }
    ch.options = std::move(options);
    const auto& pool = instruction_templates();
    ch.instruction = pool[rng.index(pool.size())];
    return ch;
}

bool verify_answer(const Challenge& challenge, std::size_t selected_index) {
    if (selected_index >= challenge.options.size()) {
        throw InvalidInput("option index " + std::to_string(selected_index) + " out of range");
    }
    return selected_index == challenge.answer_index;
}

namespace {

std::size_t segment_samples(const AudioClip& clip, double segment_length_s) {
    if (!(segment_length_s > 0.0)) throw InvalidInput("segment length must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(segment_length_s * clip.sample_rate())));
}

}  // namespace

AudioClip segment(const AudioClip& clip, std::size_t segment_index, double segment_length_s) {
    const std::size_t seg = segment_samples(clip, segment_length_s);
    if (segment_index > clip.size() / seg) return AudioClip::empty(clip.sample_rate());
    const std::size_t begin = segment_index * seg;
    return clip.slice(begin, std::min(begin + seg, clip.size()));
}

std::size_t segment_count(const AudioClip& clip, double segment_length_s) {
    const std::size_t seg = segment_samples(clip, segment_length_s);
    return (clip.size() + seg - 1) / seg;
}

ChallengeView view_of(const Challenge& challenge) {
    ChallengeView v;
    v.challenge_id = challenge.challenge_id;
    v.reference_id = challenge.reference_id;
    v.instruction = challenge.instruction;
    v.segment_length_s = challenge.segment_length_s;
    v.reference_segments = segment_count(challenge.reference, challenge.segment_length_s);
    for (const auto& o : challenge.options) {
        v.option_ids.push_back(o.option_id);
        v.option_segments.push_back(segment_count(o.clip, o.segment_length_s));
    }
    return v;
}

std::string view_to_json(const ChallengeView& view) {
    nlohmann::json options = nlohmann::json::array();
    for (std::size_t i = 0; i < view.option_ids.size(); ++i) {
        options.push_back({{"id", view.option_ids[i]}, {"segments", view.option_segments.at(i)}});
    }
    nlohmann::json doc{{"challenge_id", view.challenge_id},
                       {"instruction", view.instruction},
                       {"segment_length_s", view.segment_length_s},
                       {"reference", {{"id", view.reference_id}, {"segments", view.reference_segments}}},
                       {"options", std::move(options)}};
    return doc.dump(2) + "\n";
}

ChallengeView view_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        ChallengeView v;
        v.challenge_id = doc.at("challenge_id").get<std::string>();
        v.instruction = doc.at("instruction").get<std::string>();
        v.segment_length_s = doc.at("segment_length_s").get<double>();
        v.reference_id = doc.at("reference").at("id").get<std::string>();
        v.reference_segments = doc.at("reference").at("segments").get<std::size_t>();
        for (const auto& o : doc.at("options")) {
            v.option_ids.push_back(o.at("id").get<std::string>());
            v.option_segments.push_back(o.at("segments").get<std::size_t>());
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad challenge view JSON: ") + e.what());
    }
}

}  // namespace illusion
