#include <doctest.h>

#include <atomic>
#include <thread>

// Eigen first: the resolver header pulled in by httplib defines _res.
#include "oracles.hpp"

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "illusion/adapter.hpp"
#include "illusion/challenge.hpp"
#include "illusion/evaluate.hpp"
#include "illusion/seed.hpp"

using namespace illusion;

namespace {

// Small challenge set whose clips all differ in length, so a mock model
// can read the answer off the audio it receives.
struct Fixture {
    Corpus clean;
    IllusionCorpus illusions;
    std::vector<Challenge> challenges;

    Fixture() {
        for (std::size_t i = 0; i < 5; ++i) {
            ScoredClip e;
            e.id = "s" + std::to_string(i);
            e.prompt = "words " + std::to_string(i);
            e.clip = AudioClip(oracle::sine(300.0 + 200.0 * static_cast<double>(i), 0.4, 16000.0, 6000 + 1000 * i), 16000);
            clean.entries.push_back(std::move(e));
        }
        illusions = build_illusion_corpus(clean, SineWaveParams{}, std::nullopt);
        for (std::uint64_t s = 0; s < 12; ++s) challenges.push_back(generate_challenge(clean, illusions, 3, 0.3, s));
    }

    // Answer index known only from the clip lengths: the correct option has
    // the same length as the reference (no conversion).
    static std::size_t answer_from_audio(const std::vector<std::vector<std::uint8_t>>& audio) {
        const auto ref = decode_wav(audio[0]).size();
        for (std::size_t i = 1; i < audio.size(); ++i) {
            const auto opt = decode_wav(audio[i]);
            if (opt.size() == ref && std::abs(opt.peak() - 0.9) < 1e-3) return i - 1;
        }
        return 0;
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

class LambdaAdapter final : public ExternalAdapter {
public:
    explicit LambdaAdapter(std::function<std::string(const AdapterRequest&)> fn) : fn_(std::move(fn)) {}
    std::string send(const AdapterRequest& r) override { return fn_(r); }

private:
    std::function<std::string(const AdapterRequest&)> fn_;
};

double bypass(std::shared_ptr<Solver> solver) {
    return evaluate({std::move(solver)}, fixture().challenges).rows.at(0).bypass_rate;
}

}  // namespace

TEST_CASE("choice extraction") {
    CHECK(extract_choice("Option 2", 3) == 1u);
    CHECK(extract_choice("2", 3) == 1u);
    CHECK(extract_choice("two", 3) == 1u);
    CHECK(extract_choice("I think the answer is option number 3.", 3) == 2u);
    CHECK(extract_choice("Option 1 sounds close, but the final answer: option 2", 3) == 1u);
    CHECK(extract_choice("Answer: B", 3) == 1u);
    CHECK(extract_choice("The answer is second", 3) == 1u);
    CHECK(extract_choice("Clip 3 matches.", 3) == 2u);
    // Bare digits: one distinct label accepted, conflicting labels abstain.
    CHECK(extract_choice("I pick 3 because 3 is closest", 3) == 2u);
    CHECK_FALSE(extract_choice("either 1 or 2", 3).has_value());
    CHECK_FALSE(extract_choice("I cannot determine which audio matches.", 3).has_value());
    CHECK_FALSE(extract_choice("Option 4", 3).has_value());
    CHECK_FALSE(extract_choice("", 3).has_value());
    CHECK_FALSE(extract_choice("0", 3).has_value());
    CHECK_FALSE(extract_choice("Option 1", 0).has_value());
    CHECK_FALSE(extract_choice("12345", 3).has_value());
}

TEST_CASE("base64 round trip and known vectors") {
    auto enc = [](const std::string& s) {
        return base64_encode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foobar") == "Zm9vYmFy");
    std::vector<std::uint8_t> all(256);
    for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
    for (std::size_t n = 0; n <= all.size(); n += 37) {
        std::vector<std::uint8_t> part(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
        CHECK(base64_decode(base64_encode(part)) == part);
    }
    CHECK_THROWS_AS(base64_decode("ab*d"), FormatError);
}

TEST_CASE("adapter request JSON round trip") {
    AdapterRequest r;
    r.task = "answer";
    r.challenge_id = "abc";
    r.prompt_template = "zero-shot";
    r.instruction = "pick one\nplease";
    r.audio = {{1, 2, 3}, {}, {255}};
    r.transcripts = {"one", "two"};
    const auto json = request_to_json(r);
    const auto doc = nlohmann::json::parse(json);
    CHECK(doc.at("protocol") == "illusion-adapter/1");
    CHECK(doc.at("audio").at(0) == "AQID");
    const auto back = request_from_json(json);
    CHECK(back.task == r.task);
    CHECK(back.challenge_id == r.challenge_id);
    CHECK(back.instruction == r.instruction);
    CHECK(back.audio == r.audio);
    CHECK(back.transcripts == r.transcripts);
    CHECK_THROWS_AS(request_from_json(R"({"protocol": "other/9"})"), FormatError);
    CHECK_THROWS_AS(request_from_json("[]"), FormatError);
    CHECK(response_from_json(response_to_json("Option 2")) == "Option 2");
    CHECK_THROWS_AS(response_from_json(R"({"answer": 1})"), FormatError);
}

TEST_CASE("family and prompt-mode pairing") {
    CHECK(mode_allowed(SolverFamily::EndToEnd, PromptMode::ZeroShot));
    CHECK(mode_allowed(SolverFamily::EndToEnd, PromptMode::ChainOfThought));
    CHECK_FALSE(mode_allowed(SolverFamily::EndToEnd, PromptMode::PromptGuided));
    CHECK(mode_allowed(SolverFamily::TwoStage, PromptMode::NonPromptGuided));
    auto a = std::make_shared<LambdaAdapter>([](const AdapterRequest&) { return std::string("1"); });
    CHECK_THROWS_AS(ExternalSolver("x", a, SolverFamily::TwoStage, PromptMode::ZeroShot), InvalidInput);
    CHECK_THROWS_AS(ExternalSolver("x", nullptr, SolverFamily::EndToEnd, PromptMode::ZeroShot), InvalidInput);
    for (auto m : {PromptMode::ZeroShot, PromptMode::ChainOfThought, PromptMode::PromptGuided, PromptMode::NonPromptGuided}) {
        CHECK(prompt_mode_from_string(to_string(m)) == m);
    }
    CHECK(solver_family_from_string("lalm") == SolverFamily::EndToEnd);
    CHECK(solver_family_from_string("asr-llm") == SolverFamily::TwoStage);
    CHECK_THROWS_AS(prompt_mode_from_string("few-shot"), InvalidInput);
}

TEST_CASE("mock oracle end-to-end solver bypasses every challenge") {
    std::atomic<int> calls{0};
    auto oracle_adapter = std::make_shared<LambdaAdapter>([&](const AdapterRequest& r) {
        ++calls;
        CHECK(r.task == "answer");
        CHECK(r.audio.size() == 4);
        CHECK(r.prompt_template == "chain-of-thought");
        return "Reasoning... Answer: option " + std::to_string(Fixture::answer_from_audio(r.audio) + 1);
    });
    CHECK(bypass(std::make_shared<ExternalSolver>("oracle", oracle_adapter, SolverFamily::EndToEnd,
                                                  PromptMode::ChainOfThought)) == 1.0);
    CHECK(calls == 12);
}

TEST_CASE("abstaining solver bypasses nothing") {
    auto abstain = std::make_shared<LambdaAdapter>(
        [](const AdapterRequest&) { return std::string("I am unable to tell these apart."); });
    CHECK(bypass(std::make_shared<ExternalSolver>("abstain", abstain, SolverFamily::EndToEnd,
                                                  PromptMode::ZeroShot)) == 0.0);
}

TEST_CASE("two-stage solver: transcribe each clip, then reason over transcripts") {
    std::vector<std::string> tasks;
    std::mutex m;
    auto adapter = std::make_shared<LambdaAdapter>([&](const AdapterRequest& r) -> std::string {
        std::lock_guard lock(m);
        tasks.push_back(r.task);
        if (r.task == "transcribe") {
            REQUIRE(r.audio.size() == 1);
            CHECK(r.instruction.empty());  // non-prompt-guided
            return "len " + std::to_string(decode_wav(r.audio[0]).size());
        }
        CHECK(r.task == "reason");
        REQUIRE(r.transcripts.size() == 4);
        for (std::size_t i = 1; i < 4; ++i) {
            if (r.transcripts[i] == r.transcripts[0]) return "Option " + std::to_string(i);
        }
        return "none";
    });
    auto solver = std::make_shared<ExternalSolver>("two", adapter, SolverFamily::TwoStage, PromptMode::NonPromptGuided);
    const auto v = solver->solve(attacker_view(fixture().challenges[0]));
    CHECK(tasks == std::vector<std::string>{"transcribe", "transcribe", "transcribe", "transcribe", "reason"});
    REQUIRE(v.chosen_index.has_value());
    CHECK(verify_answer(fixture().challenges[0], *v.chosen_index));
}

TEST_CASE("transport errors are retried, then count as abstention") {
    int calls = 0;
    auto flaky = std::make_shared<LambdaAdapter>([&](const AdapterRequest&) -> std::string {
        if (++calls < 3) throw TransportError("connection reset");
        return "Option 1";
    });
    ExternalSolver retrying("flaky", flaky, SolverFamily::EndToEnd, PromptMode::ZeroShot, 2);
    CHECK(retrying.solve(attacker_view(fixture().challenges[0])).chosen_index == 0u);
    CHECK(calls == 3);

    calls = 0;
    ExternalSolver impatient("flaky", flaky, SolverFamily::EndToEnd, PromptMode::ZeroShot, 1);
    const auto v = impatient.solve(attacker_view(fixture().challenges[0]));
    CHECK_FALSE(v.chosen_index.has_value());
    CHECK(v.raw_response.find("transport error") == 0);
    CHECK(calls == 2);
}

TEST_CASE("stdio adapter talks to a child process line by line") {
    fixtures::TempDir dir;
    // Replies "Option <number of audio clips - 1>"; exits after the third request.
    const auto script = dir / "adapter.sh";
    fixtures::write_file(script,
                         "#!/bin/sh\n"
                         "n=0\n"
                         "while IFS= read -r line; do\n"
                         "  n=$((n+1))\n"
                         "  count=$(printf '%s' \"$line\" | grep -o 'UklGR' | wc -l)\n"
                         "  printf '{\"text\": \"Option %d\"}\\n' $((count-1))\n"
                         "  [ $n -ge 3 ] && exit 0\n"
                         "done\n");
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    auto adapter = std::make_shared<StdioAdapter>(std::vector<std::string>{"/bin/sh", script.string()});
    AdapterRequest r;
    r.task = "answer";
    r.audio = {encode_wav(AudioClip(std::vector<double>(10, 0.1), 16000)),
               encode_wav(AudioClip(std::vector<double>(10, 0.2), 16000)),
               encode_wav(AudioClip(std::vector<double>(10, 0.3), 16000))};
    for (int i = 0; i < 3; ++i) CHECK(adapter->send(r) == "Option 2");
    CHECK_THROWS_AS(adapter->send(r), TransportError);
    CHECK(adapter->send(r) == "Option 2");  // respawned
    r.audio.pop_back();
    CHECK(adapter->send(r) == "Option 1");

    StdioAdapter broken({"/bin/sh", "-c", "echo not-json"});
    CHECK_THROWS_AS(broken.send(r), TransportError);
    StdioAdapter silent({"/bin/true"});
    CHECK_THROWS_AS(silent.send(r), TransportError);
}

TEST_CASE("http adapter posts the request and reads the reply") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/solve", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        const auto r = request_from_json(req.body);
        res.set_content(response_to_json("Answer: option " + std::to_string(Fixture::answer_from_audio(r.audio) + 1)),
                        "application/json");
    });
    server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    auto solver = std::make_shared<ExternalSolver>("http", std::make_shared<HttpAdapter>(base + "/v1/solve", 5.0),
                                                   SolverFamily::EndToEnd, PromptMode::ZeroShot);
    CHECK(bypass(solver) == 1.0);
    CHECK(hits == 12);

    HttpAdapter broken(base + "/v1/broken", 5.0);
    CHECK_THROWS_AS(broken.send(AdapterRequest{}), TransportError);
    server.stop();
    t.join();
    HttpAdapter down(base + "/v1/solve", 1.0);
    CHECK_THROWS_AS(down.send(AdapterRequest{}), TransportError);
    CHECK_THROWS_AS(HttpAdapter("localhost:80/x"), InvalidInput);
}
