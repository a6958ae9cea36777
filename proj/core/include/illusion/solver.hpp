#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "illusion/challenge.hpp"

namespace illusion {

// The attacker's view of a challenge: locators plus audio, no answer key.
struct AttackerView {
    ChallengeView view;
    AudioClip reference;
    std::vector<AudioClip> options;
};

AttackerView attacker_view(const Challenge& challenge);

struct SolverVerdict {
    std::string challenge_id;
    // nullopt means the solver abstained.
    std::optional<std::size_t> chosen_index;
    std::string raw_response;
    double latency_ms = 0.0;
};

class Solver {
public:
    virtual ~Solver() = default;
    virtual std::string name() const = 0;
    // Prompt mode label for reports; "-" for solvers without one.
    virtual std::string mode() const { return "-"; }
    virtual SolverVerdict solve(const AttackerView& challenge) = 0;
    virtual bool concurrent_safe() const { return true; }
};

struct RmsAttackSettings {
    std::size_t frame_length = 400;
    std::size_t hop_length = 160;
    std::size_t points = 64;
};

// Envelope of `clip` time-normalized to settings.points samples.
std::vector<double> normalized_envelope(const AudioClip& clip, const RmsAttackSettings& settings = {});

// Pearson correlation of each option's normalized envelope with the
// reference's. Options shorter than one frame score -1.
std::vector<double> rms_scores(const AttackerView& challenge, const RmsAttackSettings& settings = {});

// Picks the option whose RMS envelope best tracks the reference.
class RmsSolver final : public Solver {
public:
    explicit RmsSolver(RmsAttackSettings settings = {}) : settings_(settings) {}
    std::string name() const override { return "rms"; }
    SolverVerdict solve(const AttackerView& challenge) override;

private:
    RmsAttackSettings settings_;
};

// Uniform guess, deterministic per (seed, challenge_id).
class RandomSolver final : public Solver {
public:
    explicit RandomSolver(std::uint64_t seed) : seed_(seed) {}
    std::string name() const override { return "random"; }
    SolverVerdict solve(const AttackerView& challenge) override;

private:
    std::uint64_t seed_;
};

}  // namespace illusion
