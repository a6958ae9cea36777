#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "illusion/challenge.hpp"

namespace illusion {

struct ServiceConfig {
    std::size_t max_attempts = 5;
    std::chrono::seconds session_ttl{15 * 60};
    // Requests per client address per fixed one-minute window; 0 disables.
    std::size_t rate_limit_per_minute = 60;
    std::string allow_origin;
    // Seed for challenge selection; nullopt draws one from std::random_device.
    std::optional<std::uint64_t> selection_seed;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// A challenge plus the exact WAV bytes served for each clip id.
struct ServedChallenge {
    Challenge challenge;
    std::map<std::string, std::string> wav_bytes;
};

ServedChallenge make_served(Challenge challenge);
std::vector<ServedChallenge> load_served_pool(const std::filesystem::path& root);

// Transport-independent challenge service. Every method is safe to call
// concurrently; per-session state changes are serialized per session.
class ChallengeService {
public:
    using Clock = std::chrono::steady_clock;

    ChallengeService(std::vector<ServedChallenge> pool, ServiceConfig config,
                     std::function<Clock::time_point()> now = Clock::now);

    HttpResponse get_challenge(const std::string& client = {});
    HttpResponse get_audio(const std::string& session_id, const std::string& clip_id,
                           const std::optional<std::string>& segment, const std::string& client = {});
    HttpResponse post_answer(const std::string& body, const std::string& client = {});

    // Fixed-window limiter; false means the request should get a 429.
    bool admit(const std::string& client);

    std::size_t session_count() const;
    std::size_t purge_expired();
    const ServiceConfig& config() const { return config_; }

private:
    struct Session {
        std::mutex mutex;
        std::size_t challenge = 0;
        std::set<std::string> fetched;
        std::size_t attempts = 0;
        bool resolved = false;
        Clock::time_point last_seen;
    };

    std::shared_ptr<Session> find_session(const std::string& id);
    std::string new_session_id();

    std::vector<ServedChallenge> pool_;
    ServiceConfig config_;
    std::function<Clock::time_point()> now_;

    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    std::mutex rng_mutex_;
    std::uint64_t selection_state_ = 0;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_ = 0;

    std::mutex rate_mutex_;
    std::map<std::string, std::pair<Clock::time_point, std::size_t>> windows_;
};

// Binds the service to HTTP routes:
//   GET  /api/v1/challenge
//   GET  /api/v1/audio/{session}/{clip}?segment=i
//   POST /api/v1/answer
class HttpFrontend {
public:
    explicit HttpFrontend(ChallengeService& service);
    ~HttpFrontend();
    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    // Starts listening on a background thread; port 0 picks a free port.
    // Returns the bound port.
    int start(const std::string& host, int port);
    // Blocks in the calling thread until stop() is called from elsewhere.
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace illusion
