#include "illusion/service.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "illusion/bundle.hpp"
#include "illusion/error.hpp"
#include "illusion/seed.hpp"

namespace illusion {
namespace {

HttpResponse json_response(int status, const nlohmann::json& body) {
    return {status, "application/json", body.dump()};
}

HttpResponse error_response(int status, const std::string& code) {
    return json_response(status, {{"error", code}});
}

std::string bytes_to_string(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<std::size_t> parse_index(const std::string& text) {
    if (text.empty() || text.size() > 9) return std::nullopt;
    for (unsigned char c : text) {
        if (!std::isdigit(c)) return std::nullopt;
    }
    return static_cast<std::size_t>(std::stoul(text));
}

std::uint64_t entropy64() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

ServedChallenge make_served(Challenge challenge) {
    ServedChallenge served;
    served.wav_bytes[challenge.reference_id] = bytes_to_string(encode_wav(challenge.reference));
    for (const auto& o : challenge.options) served.wav_bytes[o.option_id] = bytes_to_string(encode_wav(o.clip));
    served.challenge = std::move(challenge);
    return served;
}

std::vector<ServedChallenge> load_served_pool(const std::filesystem::path& root) {
    std::vector<ServedChallenge> pool;
    for (auto& challenge : read_challenge_pool(root)) {
        ServedChallenge served;
        const auto dir = root / challenge.challenge_id;
        served.wav_bytes[challenge.reference_id] = read_file(dir / (challenge.reference_id + ".wav"));
        for (const auto& o : challenge.options) served.wav_bytes[o.option_id] = read_file(dir / (o.option_id + ".wav"));
        served.challenge = std::move(challenge);
        pool.push_back(std::move(served));
    }
    return pool;
}

ChallengeService::ChallengeService(std::vector<ServedChallenge> pool, ServiceConfig config,
                                   std::function<Clock::time_point()> now)
    : pool_(std::move(pool)), config_(std::move(config)), now_(std::move(now)) {
    if (config_.max_attempts < 1) throw InvalidInput("max_attempts must be >= 1");
    selection_state_ = config_.selection_seed ? *config_.selection_seed : entropy64();
    id_salt_ = entropy64();
}

std::string ChallengeService::new_session_id() {
    std::uint64_t a = 0, b = 0;
    {
        std::lock_guard lock(rng_mutex_);
        ++id_counter_;
        a = derive_seed(id_salt_, "session.a", id_counter_);
        b = derive_seed(entropy64(), "session.b", id_counter_);
    }
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016" PRIx64 "%016" PRIx64, a, b);
    return buf;
}

std::shared_ptr<ChallengeService::Session> ChallengeService::find_session(const std::string& id) {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    return it->second;
}

bool ChallengeService::admit(const std::string& client) {
    if (config_.rate_limit_per_minute == 0) return true;
    const auto now = now_();
    std::lock_guard lock(rate_mutex_);
    auto& [window_start, count] = windows_[client];
    if (count == 0 || now - window_start >= std::chrono::minutes(1)) {
        window_start = now;
        count = 0;
    }
    if (count >= config_.rate_limit_per_minute) return false;
    ++count;
    return true;
}

HttpResponse ChallengeService::get_challenge(const std::string& client) {
    if (!admit(client)) return error_response(429, "rate_limited");
    if (pool_.empty()) return error_response(503, "no_challenges");
    purge_expired();
    std::size_t pick = 0;
    {
        std::lock_guard lock(rng_mutex_);
        Rng rng(derive_seed(selection_state_, "service.pick", id_counter_));
        pick = rng.index(pool_.size());
    }
    auto session = std::make_shared<Session>();
    session->challenge = pick;
    session->last_seen = now_();
    const std::string id = new_session_id();
    {
        std::unique_lock lock(sessions_mutex_);
        sessions_.emplace(id, session);
    }
    const auto view = view_of(pool_[pick].challenge);
    nlohmann::json body{{"session_id", id}, {"challenge", nlohmann::json::parse(view_to_json(view))}};
    return json_response(200, body);
}

HttpResponse ChallengeService::get_audio(const std::string& session_id, const std::string& clip_id,
                                         const std::optional<std::string>& segment_param, const std::string& client) {
    if (!admit(client)) return error_response(429, "rate_limited");
    auto session = find_session(session_id);
    if (!session) return error_response(404, "unknown_session");
    std::lock_guard lock(session->mutex);
    if (now_() - session->last_seen > config_.session_ttl) return error_response(404, "unknown_session");
    session->last_seen = now_();

    const auto& served = pool_[session->challenge];
    const auto bytes = served.wav_bytes.find(clip_id);
    if (bytes == served.wav_bytes.end()) return error_response(403, "clip_not_in_session");

    if (!segment_param) {
        session->fetched.insert(clip_id);
        return {200, "audio/wav", bytes->second};
    }
    const auto index = parse_index(*segment_param);
    if (!index) return error_response(400, "bad_segment");

    const Challenge& ch = served.challenge;
    const AudioClip* clip = &ch.reference;
    for (const auto& o : ch.options) {
        if (o.option_id == clip_id) clip = &o.clip;
    }
    const std::size_t total = segment_count(*clip, ch.segment_length_s);
    if (total > 0 && *index == total - 1) session->fetched.insert(clip_id);
    const AudioClip piece = segment(*clip, *index, ch.segment_length_s);
    return {200, "audio/wav", bytes_to_string(encode_wav(piece))};
}

HttpResponse ChallengeService::post_answer(const std::string& body, const std::string& client) {
    if (!admit(client)) return error_response(429, "rate_limited");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        return error_response(400, "bad_json");
    }
    if (!doc.is_object() || !doc.contains("session_id") || !doc["session_id"].is_string()) {
        return error_response(400, "missing_session_id");
    }
    auto session = find_session(doc["session_id"].get<std::string>());
    if (!session) return error_response(404, "unknown_session");

    std::lock_guard lock(session->mutex);
    if (now_() - session->last_seen > config_.session_ttl) return error_response(404, "unknown_session");
    session->last_seen = now_();
    if (session->resolved) return error_response(410, "session_resolved");

    const Challenge& ch = pool_[session->challenge].challenge;
    if (!session->fetched.count(ch.reference_id)) return error_response(409, "must_listen_first");
    for (const auto& o : ch.options) {
        if (!session->fetched.count(o.option_id)) return error_response(409, "must_listen_first");
    }

    const auto& index = doc.contains("option_index") ? doc["option_index"] : nlohmann::json();
    if (!index.is_number_integer() || index.get<std::int64_t>() < 0 ||
        index.get<std::int64_t>() >= static_cast<std::int64_t>(ch.options.size())) {
        return error_response(400, "bad_option_index");
    }
    const bool correct = verify_answer(ch, index.get<std::size_t>());
    ++session->attempts;
    const bool locked = !correct && session->attempts >= config_.max_attempts;
    if (correct || locked) session->resolved = true;
    return json_response(200, {{"correct", correct}, {"attempts", session->attempts}, {"locked", locked}});
}

std::size_t ChallengeService::session_count() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

std::size_t ChallengeService::purge_expired() {
    const auto now = now_();
    std::unique_lock lock(sessions_mutex_);
    std::size_t removed = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        bool expired = false;
        {
            std::lock_guard session_lock(it->second->mutex);
            expired = now - it->second->last_seen > config_.session_ttl;
        }
        if (expired) {
            it = sessions_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

}  // namespace illusion
