#include "illusion/adapter.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "illusion/text.hpp"

namespace illusion {

std::string to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::ZeroShot: return "zero-shot";
        case PromptMode::ChainOfThought: return "chain-of-thought";
        case PromptMode::PromptGuided: return "prompt-guided";
        case PromptMode::NonPromptGuided: return "non-prompt-guided";
    }
    return "unknown";
}

PromptMode prompt_mode_from_string(const std::string& name) {
    if (name == "zero-shot") return PromptMode::ZeroShot;
    if (name == "chain-of-thought") return PromptMode::ChainOfThought;
    if (name == "prompt-guided") return PromptMode::PromptGuided;
    if (name == "non-prompt-guided") return PromptMode::NonPromptGuided;
    throw InvalidInput("unknown prompt mode \"" + name + "\"");
}

std::string to_string(SolverFamily family) {
    return family == SolverFamily::EndToEnd ? "end-to-end" : "two-stage";
}

SolverFamily solver_family_from_string(const std::string& name) {
    if (name == "end-to-end" || name == "lalm") return SolverFamily::EndToEnd;
    if (name == "two-stage" || name == "asr-llm") return SolverFamily::TwoStage;
    throw InvalidInput("unknown solver family \"" + name + "\"");
}

bool mode_allowed(SolverFamily family, PromptMode mode) {
    if (family == SolverFamily::EndToEnd) return mode == PromptMode::ZeroShot || mode == PromptMode::ChainOfThought;
    return mode == PromptMode::PromptGuided || mode == PromptMode::NonPromptGuided;
}

// ---- base64 ----

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    if (i < bytes.size()) {
        std::uint32_t v = bytes[i] << 16;
        if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value(c);
        if (v < 0) throw FormatError("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

// ---- wire format ----

std::string request_to_json(const AdapterRequest& request) {
    nlohmann::json audio = nlohmann::json::array();
    for (const auto& wav : request.audio) audio.push_back(base64_encode(wav));
    nlohmann::json doc{{"protocol", kAdapterProtocol},
                       {"task", request.task},
                       {"challenge_id", request.challenge_id},
                       {"prompt_template", request.prompt_template},
                       {"instruction", request.instruction},
                       {"audio", std::move(audio)},
                       {"transcripts", request.transcripts}};
    return doc.dump();
}

AdapterRequest request_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("protocol").get<std::string>() != kAdapterProtocol) throw FormatError("unknown adapter protocol");
        AdapterRequest r;
        r.task = doc.at("task").get<std::string>();
        r.challenge_id = doc.at("challenge_id").get<std::string>();
        r.prompt_template = doc.at("prompt_template").get<std::string>();
        r.instruction = doc.at("instruction").get<std::string>();
        for (const auto& a : doc.at("audio")) r.audio.push_back(base64_decode(a.get<std::string>()));
        r.transcripts = doc.at("transcripts").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad adapter request: ") + e.what());
    }
}

std::string response_to_json(const std::string& text) { return nlohmann::json{{"text", text}}.dump(); }

std::string response_from_json(const std::string& body) {
    try {
        const auto doc = nlohmann::json::parse(body);
        return doc.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad adapter response: ") + e.what());
    }
}

// ---- HTTP transport ----

HttpAdapter::HttpAdapter(std::string url, double timeout_s) : timeout_s_(timeout_s) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidInput("adapter URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpAdapter::send(const AdapterRequest& request) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_s_);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    auto res = client.Post(path_, request_to_json(request), "application/json");
    if (!res) throw TransportError("adapter request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("adapter returned HTTP " + std::to_string(res->status));
    }
    try {
        return response_from_json(res->body);
    } catch (const FormatError& e) {
        throw TransportError(e.what());
    }
}

// ---- stdio transport ----

StdioAdapter::StdioAdapter(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw InvalidInput("stdio adapter needs a command");
    spawn();
}

StdioAdapter::~StdioAdapter() { shutdown(); }

void StdioAdapter::spawn() {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) throw TransportError("pipe failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw TransportError("pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> args;
        for (auto& a : argv_) args.push_back(a.data());
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    pending_.clear();
}

void StdioAdapter::shutdown() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }
    pid_ = -1;
}

std::string StdioAdapter::send(const AdapterRequest& request) {
    std::lock_guard lock(mutex_);
    if (pid_ < 0) spawn();
    const std::string line = request_to_json(request) + "\n";
    // A dead child would otherwise kill us with SIGPIPE.
    struct sigaction ignore {}, previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            sigaction(SIGPIPE, &previous, nullptr);
            shutdown();
            throw TransportError("adapter process closed its input");
        }
        written += static_cast<std::size_t>(n);
    }
    sigaction(SIGPIPE, &previous, nullptr);

    char buf[4096];
    while (pending_.find('\n') == std::string::npos) {
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            shutdown();
            throw TransportError("adapter process exited before replying");
        }
        pending_.append(buf, static_cast<std::size_t>(n));
    }
    const auto newline = pending_.find('\n');
    const std::string reply = pending_.substr(0, newline);
    pending_.erase(0, newline + 1);
    try {
        return response_from_json(reply);
    } catch (const FormatError& e) {
        throw TransportError(e.what());
    }
}

// ---- prompts and answer extraction ----

std::string prompt_template_text(PromptMode mode) {
    switch (mode) {
        case PromptMode::ZeroShot:
            return "The first audio is a reference recording; the remaining audios are numbered options "
                   "starting at 1. Answer with the option number only.";
        case PromptMode::ChainOfThought:
            return "The first audio is a reference recording; the remaining audios are numbered options "
                   "starting at 1. Think step by step: describe what is said in each audio, compare the "
                   "options with the reference, then finish with a line of the form 'Answer: option N'.";
        case PromptMode::PromptGuided:
            return "This clip is part of an audio challenge. It may contain short spoken English phrases, "
                   "possibly rendered as whistle-like sine-wave speech. Transcribe the spoken words exactly.";
        case PromptMode::NonPromptGuided:
            return "";
    }
    return "";
}

std::string reasoning_prompt(const std::vector<std::string>& transcripts, const std::string& instruction) {
    std::ostringstream out;
    out << instruction << "\n";
    if (!transcripts.empty()) out << "Reference transcript: " << transcripts.front() << "\n";
    for (std::size_t i = 1; i < transcripts.size(); ++i) {
        out << "Option " << i << " transcript: " << transcripts[i] << "\n";
    }
    out << "Which option matches the reference? Answer with the option number.";
    return out.str();
}

namespace {

std::optional<std::size_t> parse_label(const std::string& token, std::size_t n_options, bool allow_words) {
    if (token.empty()) return std::nullopt;
    if (std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) {
        if (token.size() > 3) return std::nullopt;
        const std::size_t v = std::stoul(token);
        if (v >= 1 && v <= n_options) return v - 1;
        return std::nullopt;
    }
    if (token.size() == 1 && token[0] >= 'a' && token[0] < static_cast<char>('a' + std::min<std::size_t>(n_options, 26))) {
        return static_cast<std::size_t>(token[0] - 'a');
    }
    if (allow_words) {
        static const std::vector<std::string> words = {"one", "two", "three", "four", "five",
                                                       "six", "seven", "eight", "nine"};
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (token == words[i] && i < n_options) return i;
        }
        static const std::vector<std::string> ordinals = {"first", "second", "third", "fourth", "fifth"};
        for (std::size_t i = 0; i < ordinals.size(); ++i) {
            if (token == ordinals[i] && i < n_options) return i;
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::size_t> extract_choice(const std::string& response, std::size_t n_options) {
    if (n_options == 0) return std::nullopt;
    const auto words = text::tokens(response);
    static const std::vector<std::string> keywords = {"option", "choice", "answer", "clip"};
    static const std::vector<std::string> fillers = {"is", "number", "no", "was", "be", "would"};

    std::optional<std::size_t> explicit_choice;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (std::find(keywords.begin(), keywords.end(), words[i]) == keywords.end()) continue;
        std::size_t j = i + 1;
        while (j < words.size() && std::find(fillers.begin(), fillers.end(), words[j]) != fillers.end()) ++j;
        if (j < words.size()) {
            if (auto label = parse_label(words[j], n_options, true)) explicit_choice = label;
        }
    }
    if (explicit_choice) return explicit_choice;

    if (words.size() == 1) return parse_label(words.front(), n_options, true);

    std::optional<std::size_t> bare;
    for (const auto& w : words) {
        if (w.empty() || !std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) continue;
        const auto label = parse_label(w, n_options, false);
        if (!label) continue;
        if (bare && *bare != *label) return std::nullopt;
        bare = label;
    }
    return bare;
}

// ---- external solver ----

ExternalSolver::ExternalSolver(std::string name, std::shared_ptr<ExternalAdapter> adapter, SolverFamily family,
                               PromptMode mode, int max_retries)
    : name_(std::move(name)), adapter_(std::move(adapter)), family_(family), mode_(mode), max_retries_(max_retries) {
    if (!adapter_) throw InvalidInput("external solver needs an adapter");
    if (!mode_allowed(family_, mode_)) {
        throw InvalidInput("prompt mode " + to_string(mode_) + " is not valid for " + to_string(family_) + " solvers");
    }
}

std::string ExternalSolver::call(const AdapterRequest& request) {
    for (int attempt = 0;; ++attempt) {
        try {
            return adapter_->send(request);
        } catch (const TransportError&) {
            if (attempt >= max_retries_) throw;
        }
    }
}

SolverVerdict ExternalSolver::solve(const AttackerView& challenge) {
    const auto start = std::chrono::steady_clock::now();
    SolverVerdict verdict;
    verdict.challenge_id = challenge.view.challenge_id;
    const std::size_t n = challenge.options.size();
    try {
        if (family_ == SolverFamily::EndToEnd) {
            AdapterRequest req;
            req.task = "answer";
            req.challenge_id = challenge.view.challenge_id;
            req.prompt_template = to_string(mode_);
            req.instruction = challenge.view.instruction + "\n" + prompt_template_text(mode_);
            req.audio.push_back(encode_wav(challenge.reference));
            for (const auto& o : challenge.options) req.audio.push_back(encode_wav(o));
            verdict.raw_response = call(req);
        } else {
            std::vector<std::string> transcripts;
            std::vector<const AudioClip*> clips{&challenge.reference};
            for (const auto& o : challenge.options) clips.push_back(&o);
            for (const AudioClip* clip : clips) {
                AdapterRequest req;
                req.task = "transcribe";
                req.challenge_id = challenge.view.challenge_id;
                req.prompt_template = to_string(mode_);
                req.instruction = prompt_template_text(mode_);
                req.audio.push_back(encode_wav(*clip));
                transcripts.push_back(call(req));
            }
            AdapterRequest reason;
            reason.task = "reason";
            reason.challenge_id = challenge.view.challenge_id;
            reason.prompt_template = to_string(mode_);
            reason.instruction = reasoning_prompt(transcripts, challenge.view.instruction);
            reason.transcripts = transcripts;
            verdict.raw_response = call(reason);
        }
        verdict.chosen_index = extract_choice(verdict.raw_response, n);
    } catch (const TransportError& e) {
        verdict.chosen_index.reset();
        verdict.raw_response = std::string("transport error: ") + e.what();
    }
    verdict.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return verdict;
}

}  // namespace illusion
