// illusion: command-line front end for the CAPTCHA pipeline.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "illusion/adapter.hpp"
#include "illusion/audio.hpp"
#include "illusion/bundle.hpp"
#include "illusion/challenge.hpp"
#include "illusion/convert.hpp"
#include "illusion/corpus.hpp"
#include "illusion/error.hpp"
#include "illusion/evaluate.hpp"
#include "illusion/formant_tts.hpp"
#include "illusion/providers.hpp"
#include "illusion/seed.hpp"
#include "illusion/service.hpp"
#include "illusion/sinewave.hpp"
#include "illusion/solver.hpp"

namespace fs = std::filesystem;
using namespace illusion;

namespace {

// Bad flag combination or value; exits with status 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Params>
void validate_flags(const Params& params) {
    try {
        params.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::string> read_prompts(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> prompts;
    for (std::string line; std::getline(in, line);) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        prompts.push_back(line.substr(first, last - first + 1));
    }
    if (prompts.empty()) throw InvalidInput("no prompts in " + path.string());
    return prompts;
}

void write_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
}

struct PsiOptions {
    SineWaveParams psi;

    void attach(CLI::App* app) {
        app->add_option("--window", psi.window_size, "analysis window (samples)")->capture_default_str();
        app->add_option("--hop", psi.hop_length, "hop length (samples)")->capture_default_str();
        app->add_option("--formants", psi.num_formants, "number of sine partials")->capture_default_str();
        app->add_option("--lpc-order", psi.lpc_order, "linear-prediction order")->capture_default_str();
    }
};

struct CorpusBuildCmd {
    fs::path prompts_file;
    std::vector<std::string> prompts;
    std::string tts = "formant";
    fs::path tts_dir;
    fs::path out;
    GenerationConfig config;

    int run(std::uint64_t seed) {
        std::vector<std::string> all = prompts;
        if (!prompts_file.empty()) {
            const auto file_prompts = read_prompts(prompts_file);
            all.insert(all.end(), file_prompts.begin(), file_prompts.end());
        }
        if (all.empty()) throw UsageError("give --prompts or --prompt");
        validate_flags(config);
        config.seed = seed;

        Corpus corpus;
        if (tts == "formant") {
            TranscriptRegistry registry;
            FormantDigitTts provider(&registry);
            RegistryAsr asr(registry);
            corpus = build_corpus_set(all, config, provider, asr);
        } else {
            if (tts_dir.empty()) throw UsageError("--tts dir needs --tts-dir");
            DirectoryTtsProvider provider(tts_dir);
            RegistryAsr asr(provider.transcripts());
            corpus = build_corpus_set(all, config, provider, asr);
        }
        save_corpus(corpus, out);
        std::cout << "wrote " << corpus.entries.size() << " clips to " << corpus.manifest_path.string() << "\n";
        return 0;
    }
};

struct RenderCmd {
    fs::path in;
    fs::path out;
    fs::path dump_track;
    PsiOptions psi;

    int run() {
        validate_flags(psi.psi);
        const AudioClip clip = load_wav(in);
        const FormantTrack track = analyze_formants(clip, psi.psi);
        if (!dump_track.empty()) write_file(dump_track, track_to_json(track));
        save_wav(synthesize(track), out);
        return 0;
    }
};

struct ConvertCmd {
    fs::path in;
    fs::path out;
    ConversionParams params;
    std::uint64_t draw_index = 0;
    std::optional<double> force_phi;

    int run(std::uint64_t seed) {
        params.seed = derive_seed(seed, "convert");
        params.forced_phi = force_phi;
        validate_flags(params);
        const Conversion conv = irreversible_convert(load_wav(in), params, draw_index);
        save_wav(conv.clip, out);
        std::cout << std::setprecision(17) << "phi " << conv.phi << "\n";
        return 0;
    }
};

struct ChallengeGenCmd {
    fs::path corpus_manifest;
    fs::path out;
    fs::path illusion_out;
    std::size_t count = 30;
    std::size_t options = kDefaultOptions;
    double decoy_prob = kDefaultCleanDecoyProb;
    double segment_s = kDefaultSegmentSeconds;
    bool no_convert = false;
    double phi_min = 0.5;
    double phi_max = 0.8;
    PsiOptions psi;

    int run(std::uint64_t seed) {
        validate_flags(psi.psi);
        if (decoy_prob < 0.0 || decoy_prob > 1.0) throw UsageError("--decoy-prob must be in [0, 1]");
        const Corpus corpus = load_corpus(corpus_manifest);
        std::optional<ConversionParams> conversion;
        if (!no_convert) {
            conversion = ConversionParams{phi_min, phi_max, derive_seed(seed, "convert"), std::nullopt};
            validate_flags(*conversion);
        }
        const IllusionCorpus illusions = build_illusion_corpus(corpus, psi.psi, conversion);
        for (const auto& w : illusions.warnings) std::cerr << "warning: " << w << "\n";
        if (!illusion_out.empty()) save_illusion_corpus(illusions, illusion_out);

        fs::create_directories(out);
        for (std::size_t i = 0; i < count; ++i) {
            const Challenge ch = generate_challenge(corpus, illusions, options, decoy_prob,
                                                    derive_seed(seed, "challenge", i), segment_s);
            write_challenge_bundle(ch, out);
        }
        std::cout << "wrote " << count << " challenges to " << out.string() << "\n";
        return 0;
    }
};

struct ServeCmd {
    fs::path pool_dir;
    std::string host = "0.0.0.0";
    int port = 8080;
    ServiceConfig config;
    long session_ttl_s = 900;

    int run() {
        config.session_ttl = std::chrono::seconds(session_ttl_s);
        if (config.max_attempts == 0) throw UsageError("--max-attempts must be positive");
        auto pool = load_served_pool(pool_dir);
        std::cerr << "serving " << pool.size() << " challenges on " << host << ":" << port << "\n";
        ChallengeService service(std::move(pool), config);
        HttpFrontend frontend(service);
        frontend.run(host, port);
        return 0;
    }
};

struct EvalCmd {
    fs::path pool_dir;
    std::vector<std::string> solvers{"rms", "random"};
    bool json = false;
    fs::path report;
    std::size_t concurrency = 1;
    std::string adapter_url;
    std::vector<std::string> adapter_cmd;
    std::string family = "end-to-end";
    std::string mode = "zero-shot";
    std::string external_name = "external";
    int retries = 2;

    int run(std::uint64_t seed) {
        const auto challenges = read_challenge_pool(pool_dir);
        if (challenges.empty()) throw InvalidInput("no challenges under " + pool_dir.string());

        std::vector<std::shared_ptr<Solver>> list;
        for (const auto& s : solvers) {
            if (s == "rms") {
                list.push_back(std::make_shared<RmsSolver>());
            } else if (s == "random") {
                list.push_back(std::make_shared<RandomSolver>(derive_seed(seed, "eval.random")));
            } else if (s == "external") {
                std::shared_ptr<ExternalAdapter> adapter;
                if (!adapter_url.empty()) {
                    adapter = std::make_shared<HttpAdapter>(adapter_url);
                } else if (!adapter_cmd.empty()) {
                    adapter = std::make_shared<StdioAdapter>(adapter_cmd);
                } else {
                    throw UsageError("external solver needs --adapter-url or --adapter-cmd");
                }
                SolverFamily fam{};
                PromptMode pm{};
                try {
                    fam = solver_family_from_string(family);
                    pm = prompt_mode_from_string(mode);
                } catch (const InvalidInput& e) {
                    throw UsageError(e.what());
                }
                if (!mode_allowed(fam, pm)) throw UsageError(mode + " is not a " + family + " mode");
                list.push_back(std::make_shared<ExternalSolver>(external_name, adapter, fam, pm, retries));
            } else {
                throw UsageError("unknown solver " + s);
            }
        }

        const EvalReport rep = evaluate(list, challenges, EvalOptions{concurrency});
        const std::string js = report_to_json(rep);
        if (!report.empty()) write_file(report, js);
        std::cout << (json ? js : report_to_table(rep));
        return 0;
    }
};

struct RmsAttackCmd {
    fs::path bundle;
    bool json = false;

    int run() {
        const Challenge ch = read_challenge_bundle(bundle);
        const AttackerView view = attacker_view(ch);
        const std::vector<double> scores = rms_scores(view);
        const SolverVerdict verdict = RmsSolver().solve(view);
        if (json) {
            nlohmann::json doc{{"challenge_id", ch.challenge_id},
                               {"scores", scores},
                               {"chosen_index", verdict.chosen_index ? nlohmann::json(*verdict.chosen_index)
                                                                     : nlohmann::json(nullptr)},
                               {"correct", verdict.chosen_index && *verdict.chosen_index == ch.answer_index}};
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        std::cout << "challenge " << ch.challenge_id << "\n";
        for (std::size_t i = 0; i < scores.size(); ++i) {
            std::cout << "  option " << i << "  r = " << std::fixed << std::setprecision(4) << scores[i]
                      << (verdict.chosen_index == i ? "  <- chosen" : "") << "\n";
        }
        std::cout << "verdict: "
                  << (verdict.chosen_index && *verdict.chosen_index == ch.answer_index ? "correct" : "wrong") << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audio-illusion CAPTCHA toolkit"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "global seed for every randomized stage")->capture_default_str();

    int status = 0;

    CorpusBuildCmd corpus_build;
    auto* corpus = app.add_subcommand("corpus", "clean-audio corpus generation");
    corpus->require_subcommand(1);
    auto* build = corpus->add_subcommand("build", "run the generation loop over a prompt list");
    build->add_option("--prompts", corpus_build.prompts_file, "file with one prompt per line")->check(CLI::ExistingFile);
    build->add_option("--prompt", corpus_build.prompts, "prompt text (repeatable)");
    build->add_option("--tts", corpus_build.tts, "provider: formant or dir")
        ->check(CLI::IsMember({"formant", "dir"}))
        ->capture_default_str();
    build->add_option("--tts-dir", corpus_build.tts_dir, "directory provider root (index.json)");
    build->add_option("--out", corpus_build.out, "output directory")->required();
    build->add_option("--candidates", corpus_build.config.candidates_per_round, "candidates per round (K)")
        ->capture_default_str();
    build->add_option("--target", corpus_build.config.target_size, "clips kept per prompt")->default_val(1);
    build->add_option("--max-duration", corpus_build.config.max_duration_s, "duration gate in seconds")
        ->capture_default_str();
    build->add_option("--threshold", corpus_build.config.score_threshold, "intelligibility threshold")
        ->capture_default_str();
    build->add_option("--refinements", corpus_build.config.refinement_budget, "prompt refinement budget (R)")
        ->capture_default_str();
    build->add_option("--max-rounds", corpus_build.config.max_rounds, "round limit")->capture_default_str();
    build->callback([&] { status = corpus_build.run(seed); });

    RenderCmd render;
    auto* render_cmd = app.add_subcommand("render", "render a WAV as sine-wave speech");
    render_cmd->add_option("--in", render.in, "input WAV")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--out", render.out, "output WAV")->required();
    render_cmd->add_option("--dump-track", render.dump_track, "write the formant track as JSON");
    render.psi.attach(render_cmd);
    render_cmd->callback([&] { status = render.run(); });

    ConvertCmd convert;
    auto* convert_cmd = app.add_subcommand("convert", "apply the randomized irreversible conversion");
    convert_cmd->add_option("--in", convert.in, "input WAV")->required()->check(CLI::ExistingFile);
    convert_cmd->add_option("--out", convert.out, "output WAV")->required();
    convert_cmd->add_option("--phi-min", convert.params.phi_min)->capture_default_str();
    convert_cmd->add_option("--phi-max", convert.params.phi_max)->capture_default_str();
    convert_cmd->add_option("--draw-index", convert.draw_index, "draw counter for the phi sample")
        ->capture_default_str();
    convert_cmd->add_option("--force-phi", convert.force_phi)->group("");
    convert_cmd->callback([&] { status = convert.run(seed); });

    ChallengeGenCmd gen;
    auto* challenge = app.add_subcommand("challenge", "challenge generation");
    challenge->require_subcommand(1);
    auto* gen_cmd = challenge->add_subcommand("gen", "write challenge bundles from a corpus");
    gen_cmd->add_option("--corpus", gen.corpus_manifest, "corpus manifest.json")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "bundle root directory")->required();
    gen_cmd->add_option("--illusion-out", gen.illusion_out, "also save the illusion corpus here");
    gen_cmd->add_option("--count", gen.count, "number of challenges")->capture_default_str();
    gen_cmd->add_option("--options", gen.options, "options per challenge")->capture_default_str();
    gen_cmd->add_option("--decoy-prob", gen.decoy_prob, "clean decoy probability")->capture_default_str();
    gen_cmd->add_option("--segment-s", gen.segment_s, "segment length in seconds")->capture_default_str();
    gen_cmd->add_option("--phi-min", gen.phi_min)->capture_default_str();
    gen_cmd->add_option("--phi-max", gen.phi_max)->capture_default_str();
    gen_cmd->add_flag("--no-convert", gen.no_convert, "skip the irreversible conversion (ablation)");
    gen.psi.attach(gen_cmd);
    gen_cmd->callback([&] { status = gen.run(seed); });

    ServeCmd serve;
    auto* serve_cmd = app.add_subcommand("serve", "serve a challenge pool over HTTP");
    serve_cmd->add_option("--pool-dir", serve.pool_dir, "challenge bundle root")->required()->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--host", serve.host)->capture_default_str();
    serve_cmd->add_option("--port", serve.port)->envname("PORT")->capture_default_str();
    serve_cmd->add_option("--max-attempts", serve.config.max_attempts)->capture_default_str();
    serve_cmd->add_option("--session-ttl-s", serve.session_ttl_s)->capture_default_str();
    serve_cmd->add_option("--rate-limit", serve.config.rate_limit_per_minute, "requests per minute per client, 0 = off")
        ->capture_default_str();
    serve_cmd->add_option("--allow-origin", serve.config.allow_origin, "CORS origin for the web client");
    serve_cmd->callback([&] { status = serve.run(); });

    EvalCmd eval;
    auto* eval_cmd = app.add_subcommand("eval", "measure solver bypass rates over a challenge pool");
    eval_cmd->add_option("--pool-dir", eval.pool_dir, "challenge bundle root")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--solvers", eval.solvers, "rms, random, external")->delimiter(',')->capture_default_str();
    eval_cmd->add_flag("--json", eval.json, "print the JSON report instead of the table");
    eval_cmd->add_option("--report", eval.report, "also write the JSON report to this file");
    eval_cmd->add_option("--concurrency", eval.concurrency)->capture_default_str();
    eval_cmd->add_option("--adapter-url", eval.adapter_url, "HTTP adapter endpoint");
    eval_cmd->add_option("--adapter-cmd", eval.adapter_cmd, "stdio adapter command line")->expected(1, -1);
    eval_cmd->add_option("--family", eval.family, "end-to-end or two-stage")->capture_default_str();
    eval_cmd->add_option("--mode", eval.mode, "prompt mode")->capture_default_str();
    eval_cmd->add_option("--name", eval.external_name, "report label for the external solver")->capture_default_str();
    eval_cmd->add_option("--retries", eval.retries)->capture_default_str();
    eval_cmd->callback([&] { status = eval.run(seed); });

    RmsAttackCmd attack;
    auto* attack_cmd = app.add_subcommand("rms-attack", "per-option RMS correlations for one challenge bundle");
    attack_cmd->add_option("--bundle", attack.bundle, "challenge bundle directory")->required()->check(CLI::ExistingDirectory);
    attack_cmd->add_flag("--json", attack.json);
    attack_cmd->callback([&] { status = attack.run(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return status;
}
