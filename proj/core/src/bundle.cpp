#include "illusion/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "illusion/error.hpp"

namespace illusion {
namespace {

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string answer_json(const Challenge& challenge) {
    nlohmann::json kinds = nlohmann::json::array();
    nlohmann::json phis = nlohmann::json::array();
    nlohmann::json sources = nlohmann::json::array();
    for (const auto& o : challenge.options) {
        kinds.push_back(to_string(o.kind));
        phis.push_back(o.phi ? nlohmann::json(*o.phi) : nlohmann::json(nullptr));
        sources.push_back(o.source_id);
    }
    nlohmann::json doc{{"challenge_id", challenge.challenge_id},
                       {"answer_index", challenge.answer_index},
                       {"kinds", std::move(kinds)},
                       {"phi", std::move(phis)},
                       {"sources", std::move(sources)},
                       {"reference_prompt", challenge.reference_prompt},
                       {"seed", challenge.rng_seed}};
    return doc.dump(2) + "\n";
}

std::filesystem::path write_challenge_bundle(const Challenge& challenge, const std::filesystem::path& root) {
    const auto dir = root / challenge.challenge_id;
    std::filesystem::create_directories(dir);
    write_text(dir / "manifest.json", view_to_json(view_of(challenge)));
    write_text(dir / "answer.json", answer_json(challenge));
    save_wav(challenge.reference, dir / (challenge.reference_id + ".wav"));
    for (const auto& o : challenge.options) save_wav(o.clip, dir / (o.option_id + ".wav"));
    return dir;
}

Challenge read_challenge_bundle(const std::filesystem::path& bundle_dir) {
    const ChallengeView view = view_from_json(read_text(bundle_dir / "manifest.json"));
    Challenge ch;
    ch.challenge_id = view.challenge_id;
    ch.reference_id = view.reference_id;
    ch.instruction = view.instruction;
    ch.segment_length_s = view.segment_length_s;
    ch.reference = load_wav(bundle_dir / (view.reference_id + ".wav"));
    try {
        const auto answer = nlohmann::json::parse(read_text(bundle_dir / "answer.json"));
        ch.answer_index = answer.at("answer_index").get<std::size_t>();
        ch.rng_seed = answer.at("seed").get<std::uint64_t>();
        ch.reference_prompt = answer.value("reference_prompt", std::string{});
        const auto& kinds = answer.at("kinds");
        if (kinds.size() != view.option_ids.size()) throw FormatError("answer.json kinds do not match options");
        for (std::size_t i = 0; i < view.option_ids.size(); ++i) {
            Option o;
            o.option_id = view.option_ids[i];
            o.clip = load_wav(bundle_dir / (o.option_id + ".wav"));
            o.kind = option_kind_from_string(kinds[i].get<std::string>());
            o.segment_length_s = view.segment_length_s;
            if (answer.contains("phi") && !answer["phi"][i].is_null()) o.phi = answer["phi"][i].get<double>();
            if (answer.contains("sources")) o.source_id = answer["sources"][i].get<std::string>();
            ch.options.push_back(std::move(o));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad answer.json in " + bundle_dir.string() + ": " + e.what());
    }
    if (ch.answer_index >= ch.options.size()) throw FormatError("answer index out of range in " + bundle_dir.string());
    return ch;
}

std::vector<Challenge> read_challenge_pool(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) throw IoError("pool directory not found: " + root.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<Challenge> pool;
    pool.reserve(dirs.size());
    for (const auto& d : dirs) pool.push_back(read_challenge_bundle(d));
    return pool;
}

}  // namespace illusion
