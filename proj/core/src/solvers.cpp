#include "illusion/solver.hpp"

#include <chrono>

#include "illusion/seed.hpp"

namespace illusion {

AttackerView attacker_view(const Challenge& challenge) {
    AttackerView v{view_of(challenge), challenge.reference, {}};
    v.options.reserve(challenge.options.size());
    for (const auto& o : challenge.options) v.options.push_back(o.clip);
    return v;
}

std::vector<double> normalized_envelope(const AudioClip& clip, const RmsAttackSettings& settings) {
    const auto env = rms_envelope(clip, settings.frame_length, settings.hop_length);
    return resample_linear(env.values, settings.points);
}

std::vector<double> rms_scores(const AttackerView& challenge, const RmsAttackSettings& settings) {
    const auto reference = normalized_envelope(challenge.reference, settings);
    std::vector<double> scores;
    scores.reserve(challenge.options.size());
    for (const auto& option : challenge.options) {
        if (option.size() < settings.frame_length) {
            scores.push_back(-1.0);
            continue;
        }
        scores.push_back(pearson(reference, normalized_envelope(option, settings)));
    }
    return scores;
}

SolverVerdict RmsSolver::solve(const AttackerView& challenge) {
    const auto start = std::chrono::steady_clock::now();
    SolverVerdict verdict;
    verdict.challenge_id = challenge.view.challenge_id;
    const auto scores = rms_scores(challenge, settings_);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    if (!scores.empty()) verdict.chosen_index = best;
    std::string raw;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i > 0) raw += ' ';
        raw += std::to_string(scores[i]);
    }
    verdict.raw_response = raw;
    verdict.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return verdict;
}

SolverVerdict RandomSolver::solve(const AttackerView& challenge) {
    SolverVerdict verdict;
    verdict.challenge_id = challenge.view.challenge_id;
    const std::size_t n = challenge.options.size();
    if (n == 0) return verdict;
    Rng rng(derive_seed(seed_, "solver.random", fnv1a64(challenge.view.challenge_id)));
    verdict.chosen_index = rng.index(n);
    verdict.raw_response = std::to_string(*verdict.chosen_index + 1);
    return verdict;
}

}  // namespace illusion
