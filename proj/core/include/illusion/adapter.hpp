#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "illusion/error.hpp"
#include "illusion/solver.hpp"

namespace illusion {

// Solver families evaluated through external model deployments.
enum class SolverFamily { EndToEnd, TwoStage };

enum class PromptMode { ZeroShot, ChainOfThought, PromptGuided, NonPromptGuided };

std::string to_string(PromptMode mode);
PromptMode prompt_mode_from_string(const std::string& name);
std::string to_string(SolverFamily family);
SolverFamily solver_family_from_string(const std::string& name);
// Zero-shot / chain-of-thought for end-to-end; (non-)prompt-guided for two-stage.
bool mode_allowed(SolverFamily family, PromptMode mode);

// One adapter message. See docs/adapter.md for the exact wire form.
struct AdapterRequest {
    std::string task;  // "answer", "transcribe" or "reason"
    std::string challenge_id;
    std::string prompt_template;
    std::string instruction;
    std::vector<std::vector<std::uint8_t>> audio;  // WAV bytes
    std::vector<std::string> transcripts;
};

inline constexpr const char* kAdapterProtocol = "illusion-adapter/1";

std::string request_to_json(const AdapterRequest& request);
AdapterRequest request_from_json(const std::string& text);
std::string response_to_json(const std::string& text);
// Throws FormatError when the body is not {"text": "..."}.
std::string response_from_json(const std::string& body);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Retriable failure talking to an adapter.
class TransportError : public Error {
public:
    using Error::Error;
};

class ExternalAdapter {
public:
    virtual ~ExternalAdapter() = default;
    // Returns the model's free-text reply. Throws TransportError.
    virtual std::string send(const AdapterRequest& request) = 0;
};

// POSTs the request JSON to a URL such as http://127.0.0.1:8080/v1/solve.
class HttpAdapter final : public ExternalAdapter {
public:
    explicit HttpAdapter(std::string url, double timeout_s = 120.0);
    std::string send(const AdapterRequest& request) override;

private:
    std::string origin_;
    std::string path_;
    double timeout_s_;
};

// Long-lived child process speaking one JSON object per line on stdin/stdout.
class StdioAdapter final : public ExternalAdapter {
public:
    explicit StdioAdapter(std::vector<std::string> argv);
    ~StdioAdapter() override;
    StdioAdapter(const StdioAdapter&) = delete;
    StdioAdapter& operator=(const StdioAdapter&) = delete;

    std::string send(const AdapterRequest& request) override;

private:
    void spawn();
    void shutdown();

    std::vector<std::string> argv_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
};

// Prompt text for each template id.
std::string prompt_template_text(PromptMode mode);
std::string reasoning_prompt(const std::vector<std::string>& transcripts, const std::string& instruction);

// Maps a free-text answer onto an option index, or nullopt (abstain).
// Explicit "option/choice/answer <label>" phrases win, last one first;
// otherwise a single distinct bare digit label is accepted.
std::optional<std::size_t> extract_choice(const std::string& response, std::size_t n_options);

class ExternalSolver final : public Solver {
public:
    ExternalSolver(std::string name, std::shared_ptr<ExternalAdapter> adapter, SolverFamily family,
                   PromptMode mode, int max_retries = 2);

    std::string name() const override { return name_; }
    std::string mode() const override { return to_string(mode_); }
    SolverVerdict solve(const AttackerView& challenge) override;

private:
    std::string call(const AdapterRequest& request);

    std::string name_;
    std::shared_ptr<ExternalAdapter> adapter_;
    SolverFamily family_;
    PromptMode mode_;
    int max_retries_;
};

}  // namespace illusion
