#include <doctest.h>

// Eigen first: the resolver header pulled in by httplib defines _res.
#include "oracles.hpp"

#include <atomic>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "illusion/bundle.hpp"
#include "illusion/seed.hpp"
#include "illusion/service.hpp"

using namespace illusion;
using json = nlohmann::json;

namespace {

std::vector<Challenge> small_pool(std::size_t n) {
    Corpus clean;
    for (std::size_t i = 0; i < 4; ++i) {
        ScoredClip e;
        e.id = "p" + std::to_string(i);
        e.prompt = "phrase " + std::to_string(i);
        e.clip = AudioClip(oracle::sine(220.0 * static_cast<double>(i + 1), 0.4, 16000.0, 20000 + 900 * i), 16000);
        clean.entries.push_back(std::move(e));
    }
    const auto ill = build_illusion_corpus(clean, SineWaveParams{}, std::nullopt);
    std::vector<Challenge> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(generate_challenge(clean, ill, 3, 0.3, derive_seed(4, "svc", i)));
    return out;
}

std::vector<ServedChallenge> served(std::size_t n) {
    std::vector<ServedChallenge> out;
    for (auto& c : small_pool(n)) out.push_back(make_served(std::move(c)));
    return out;
}

struct FakeClock {
    ChallengeService::Clock::time_point t{};
    std::function<ChallengeService::Clock::time_point()> fn() {
        return [this] { return t; };
    }
};

ServiceConfig test_config() {
    ServiceConfig c;
    c.selection_seed = 1;
    c.rate_limit_per_minute = 0;
    return c;
}

struct Issued {
    std::string session;
    json challenge;
    std::vector<std::string> clip_ids() const {
        std::vector<std::string> ids{challenge["reference"]["id"].get<std::string>()};
        for (const auto& o : challenge["options"]) ids.push_back(o["id"].get<std::string>());
        return ids;
    }
};

Issued issue(ChallengeService& svc) {
    const auto r = svc.get_challenge("c");
    REQUIRE(r.status == 200);
    const auto doc = json::parse(r.body);
    return {doc["session_id"].get<std::string>(), doc["challenge"]};
}

void listen_all(ChallengeService& svc, const Issued& s) {
    for (const auto& id : s.clip_ids()) REQUIRE(svc.get_audio(s.session, id, std::nullopt, "c").status == 200);
}

std::size_t answer_of(const std::vector<ServedChallenge>& pool, const Issued& s) {
    for (const auto& sc : pool) {
        if (sc.challenge.challenge_id == s.challenge["challenge_id"]) return sc.challenge.answer_index;
    }
    FAIL("challenge not in pool");
    return 0;
}

std::string answer_body(const std::string& session, json index) {
    return json{{"session_id", session}, {"option_index", index}}.dump();
}

std::string error_of(const HttpResponse& r) { return json::parse(r.body).value("error", ""); }

}  // namespace

TEST_CASE("challenge response carries the view and no secrets") {
    ChallengeService svc(served(3), test_config());
    const auto r = svc.get_challenge();
    CHECK(r.status == 200);
    CHECK(r.content_type == "application/json");
    for (const char* secret : {"answer", "kind", "correct", "phi", "prompt"}) CHECK(r.body.find(secret) == std::string::npos);
    const auto doc = json::parse(r.body);
    CHECK(doc["session_id"].get<std::string>().size() == 32);
    CHECK(doc["challenge"]["options"].size() == 3);
    CHECK(svc.session_count() == 1);
    // Session ids are not reused.
    CHECK(json::parse(svc.get_challenge().body)["session_id"] != doc["session_id"]);
}

TEST_CASE("empty pool gives 503") {
    ChallengeService svc({}, test_config());
    CHECK(svc.get_challenge().status == 503);
}

TEST_CASE("answers before listening get 409") {
    const auto pool = served(2);
    ChallengeService svc(pool, test_config());
    const auto s = issue(svc);
    auto r = svc.post_answer(answer_body(s.session, 0));
    CHECK(r.status == 409);
    CHECK(error_of(r) == "must_listen_first");
    // Listening to all but one option still blocks.
    const auto ids = s.clip_ids();
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) svc.get_audio(s.session, ids[i], std::nullopt);
    CHECK(svc.post_answer(answer_body(s.session, 0)).status == 409);
    svc.get_audio(s.session, ids.back(), std::nullopt);
    CHECK(svc.post_answer(answer_body(s.session, answer_of(pool, s))).status == 200);
}

TEST_CASE("audio fetch errors: 403 for foreign clips, 404 for unknown sessions, 400 for bad segments") {
    ChallengeService svc(served(4), test_config());
    const auto a = issue(svc);
    Issued b = issue(svc);
    while (b.challenge["challenge_id"] == a.challenge["challenge_id"]) b = issue(svc);
    auto r = svc.get_audio(a.session, b.clip_ids()[1], std::nullopt);
    CHECK(r.status == 403);
    CHECK(error_of(r) == "clip_not_in_session");
    CHECK(svc.get_audio("nope", a.clip_ids()[0], std::nullopt).status == 404);
    for (const char* bad : {"", "-1", "x", "1.5", "9999999999"}) {
        CHECK(svc.get_audio(a.session, a.clip_ids()[0], std::string(bad)).status == 400);
    }
    const auto ok = svc.get_audio(a.session, a.clip_ids()[0], std::nullopt);
    CHECK(ok.status == 200);
    CHECK(ok.content_type == "audio/wav");
    CHECK(ok.body.substr(0, 4) == "RIFF");
}

TEST_CASE("segments concatenate to the full clip, and the final segment counts as listened") {
    const auto pool = served(1);
    ChallengeService svc(pool, test_config());
    const auto s = issue(svc);
    const double seg_s = s.challenge["segment_length_s"];
    REQUIRE(seg_s == 1.0);
    const auto& ch = pool[0].challenge;
    for (std::size_t k = 0; k < s.clip_ids().size(); ++k) {
        const auto id = s.clip_ids()[k];
        const std::size_t segs = k == 0 ? s.challenge["reference"]["segments"].get<std::size_t>()
                                        : s.challenge["options"][k - 1]["segments"].get<std::size_t>();
        REQUIRE(segs == 2);
        std::vector<double> joined;
        for (std::size_t i = 0; i < segs; ++i) {
            const auto r = svc.get_audio(s.session, id, std::to_string(i));
            REQUIRE(r.status == 200);
            const auto piece = decode_wav(std::vector<std::uint8_t>(r.body.begin(), r.body.end()));
            joined.insert(joined.end(), piece.samples().begin(), piece.samples().end());
        }
        const AudioClip& full = k == 0 ? ch.reference : ch.options[k - 1].clip;
        const auto expected = decode_wav(encode_wav(full));
        CHECK(AudioClip(joined, 16000) == expected);
        // Past the end: an empty clip.
        const auto tail = svc.get_audio(s.session, id, std::to_string(segs + 3));
        CHECK(decode_wav(std::vector<std::uint8_t>(tail.body.begin(), tail.body.end())).size() == 0);
    }
    CHECK(svc.post_answer(answer_body(s.session, ch.answer_index)).status == 200);
}

TEST_CASE("correct answer resolves the session; later posts get 410") {
    const auto pool = served(2);
    ChallengeService svc(pool, test_config());
    const auto s = issue(svc);
    listen_all(svc, s);
    const auto r = svc.post_answer(answer_body(s.session, answer_of(pool, s)));
    REQUIRE(r.status == 200);
    const auto doc = json::parse(r.body);
    CHECK(doc["correct"] == true);
    CHECK(doc["attempts"] == 1);
    CHECK(doc["locked"] == false);
    CHECK(svc.post_answer(answer_body(s.session, 0)).status == 410);
}

TEST_CASE("lockout after max attempts") {
    const auto pool = served(2);
    ChallengeService svc(pool, test_config());
    const auto s = issue(svc);
    listen_all(svc, s);
    const std::size_t wrong = (answer_of(pool, s) + 1) % 3;
    for (int i = 1; i <= 5; ++i) {
        const auto doc = json::parse(svc.post_answer(answer_body(s.session, wrong)).body);
        CHECK(doc["correct"] == false);
        CHECK(doc["attempts"] == i);
        CHECK(doc["locked"] == (i == 5));
    }
    const auto after = svc.post_answer(answer_body(s.session, answer_of(pool, s)));
    CHECK(after.status == 410);
    CHECK(error_of(after) == "session_resolved");
}

TEST_CASE("concurrent answers on one session are serialized") {
    const auto pool = served(1);
    auto cfg = test_config();
    cfg.max_attempts = 1000;
    ChallengeService svc(pool, cfg);
    const auto s = issue(svc);
    listen_all(svc, s);
    const std::size_t wrong = (answer_of(pool, s) + 1) % 3;
    std::vector<std::thread> threads;
    std::mutex m;
    std::vector<int> attempt_numbers;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 25; ++i) {
                const auto doc = json::parse(svc.post_answer(answer_body(s.session, wrong)).body);
                std::lock_guard lock(m);
                attempt_numbers.push_back(doc["attempts"].get<int>());
            }
        });
    }
    for (auto& t : threads) t.join();
    std::sort(attempt_numbers.begin(), attempt_numbers.end());
    for (int i = 0; i < 200; ++i) CHECK(attempt_numbers[i] == i + 1);

    // One correct answer among racing posts: exactly one success, the rest 410 or wrong.
    const auto s2 = issue(svc);
    listen_all(svc, s2);
    std::atomic<int> correct{0}, gone{0};
    threads.clear();
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            const auto r = svc.post_answer(answer_body(s2.session, answer_of(pool, s2)));
            if (r.status == 200 && json::parse(r.body)["correct"] == true) ++correct;
            if (r.status == 410) ++gone;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(correct == 1);
    CHECK(gone == 7);
}

TEST_CASE("sessions expire after the TTL") {
    FakeClock clock;
    auto cfg = test_config();
    cfg.session_ttl = std::chrono::seconds(60);
    const auto pool = served(1);
    ChallengeService svc(pool, cfg, clock.fn());
    const auto s = issue(svc);
    clock.t += std::chrono::seconds(50);
    listen_all(svc, s);  // refreshes last_seen
    clock.t += std::chrono::seconds(59);
    CHECK(svc.get_audio(s.session, s.clip_ids()[0], std::nullopt).status == 200);
    clock.t += std::chrono::seconds(61);
    CHECK(svc.post_answer(answer_body(s.session, 0)).status == 404);
    CHECK(svc.get_audio(s.session, s.clip_ids()[0], std::nullopt).status == 404);
    CHECK(svc.purge_expired() == 1);
    CHECK(svc.session_count() == 0);
    // New challenges purge stale sessions as a side effect.
    issue(svc);
    clock.t += std::chrono::seconds(120);
    issue(svc);
    CHECK(svc.session_count() == 1);
}

TEST_CASE("rate limit per client per minute") {
    FakeClock clock;
    auto cfg = test_config();
    cfg.rate_limit_per_minute = 3;
    ChallengeService svc(served(1), cfg, clock.fn());
    for (int i = 0; i < 3; ++i) CHECK(svc.get_challenge("a").status == 200);
    const auto limited = svc.get_challenge("a");
    CHECK(limited.status == 429);
    CHECK(error_of(limited) == "rate_limited");
    CHECK(svc.post_answer("{}", "a").status == 429);
    CHECK(svc.get_challenge("b").status == 200);
    clock.t += std::chrono::seconds(60);
    CHECK(svc.get_challenge("a").status == 200);
}

TEST_CASE("answer body schema fuzz never escapes the error contract") {
    const auto pool = served(1);
    ChallengeService svc(pool, test_config());
    const auto s = issue(svc);
    listen_all(svc, s);
    const std::vector<std::pair<std::string, std::string>> cases{
        {"", "bad_json"},
        {"{", "bad_json"},
        {"[]", "missing_session_id"},
        {"null", "missing_session_id"},
        {R"({"option_index": 1})", "missing_session_id"},
        {R"({"session_id": 5, "option_index": 1})", "missing_session_id"},
        {R"({"session_id": "zzz", "option_index": 1})", "unknown_session"},
        {answer_body(s.session, "1"), "bad_option_index"},
        {answer_body(s.session, 1.5), "bad_option_index"},
        {answer_body(s.session, -1), "bad_option_index"},
        {answer_body(s.session, 3), "bad_option_index"},
        {answer_body(s.session, nullptr), "bad_option_index"},
        {json{{"session_id", s.session}}.dump(), "bad_option_index"},
    };
    for (const auto& [body, code] : cases) {
        const auto r = svc.post_answer(body);
        CHECK_MESSAGE(error_of(r) == code, body);
        CHECK(r.status >= 400);
    }
    // Random byte soup.
    std::mt19937 gen(9);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 64);
    for (int i = 0; i < 500; ++i) {
        std::string body(static_cast<std::size_t>(len(gen)), '\0');
        for (auto& c : body) c = static_cast<char>(byte(gen));
        const auto r = svc.post_answer(body);
        CHECK(r.status >= 400);
        CHECK(r.status < 500);
        CHECK_NOTHROW(json::parse(r.body));
    }
    // Bad index attempts were not counted.
    const auto ok = json::parse(svc.post_answer(answer_body(s.session, answer_of(pool, s))).body);
    CHECK(ok["attempts"] == 1);
}

TEST_CASE("pool loaded from bundles serves the stored bytes") {
    fixtures::TempDir dir;
    for (const auto& c : small_pool(3)) write_challenge_bundle(c, dir.path());
    const auto pool = load_served_pool(dir.path());
    REQUIRE(pool.size() == 3);
    for (const auto& sc : pool) {
        const auto& c = sc.challenge;
        CHECK(sc.wav_bytes.at(c.reference_id) == fixtures::read_file(dir / c.challenge_id / (c.reference_id + ".wav")));
        CHECK(sc.wav_bytes.size() == 4);
    }
}

TEST_CASE("HTTP front end on an ephemeral port") {
    const auto pool = served(2);
    auto cfg = test_config();
    cfg.allow_origin = "https://example.test";
    ChallengeService svc(pool, cfg);
    HttpFrontend http(svc);
    const int port = http.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    auto res = client.Get("/api/v1/challenge");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "https://example.test");
    CHECK(res->get_header_value("Cache-Control") == "no-store");
    const auto doc = json::parse(res->body);
    const Issued s{doc["session_id"], doc["challenge"]};

    CHECK(client.Post("/api/v1/answer", answer_body(s.session, 0), "application/json")->status == 409);
    for (std::size_t k = 0; k < s.clip_ids().size(); ++k) {
        const auto id = s.clip_ids()[k];
        const std::size_t segs = k == 0 ? s.challenge["reference"]["segments"].get<std::size_t>()
                                        : s.challenge["options"][k - 1]["segments"].get<std::size_t>();
        std::vector<double> joined;
        for (std::size_t i = 0; i < segs; ++i) {
            auto piece = client.Get("/api/v1/audio/" + s.session + "/" + id + "?segment=" + std::to_string(i));
            REQUIRE(piece);
            REQUIRE(piece->status == 200);
            CHECK(piece->get_header_value("Content-Type") == "audio/wav");
            const auto clip = decode_wav(std::vector<std::uint8_t>(piece->body.begin(), piece->body.end()));
            joined.insert(joined.end(), clip.samples().begin(), clip.samples().end());
        }
        auto full = client.Get("/api/v1/audio/" + s.session + "/" + id);
        REQUIRE(full);
        CHECK(AudioClip(joined, 16000) == decode_wav(std::vector<std::uint8_t>(full->body.begin(), full->body.end())));
    }
    CHECK(client.Get("/api/v1/audio/" + s.session + "/ffffffffffffffff")->status == 403);
    CHECK(client.Options("/api/v1/answer")->status == 204);
    auto ans = client.Post("/api/v1/answer", answer_body(s.session, answer_of(pool, s)), "application/json");
    REQUIRE(ans);
    CHECK(ans->status == 200);
    CHECK(json::parse(ans->body)["correct"] == true);
    CHECK(client.Post("/api/v1/answer", "garbage", "application/json")->status == 400);
    CHECK(client.Get("/api/v1/nothing")->status == 404);
    http.stop();
}
