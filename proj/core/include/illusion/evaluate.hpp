#pragma once

#include <memory>
#include <string>
#include <vector>

#include "illusion/challenge.hpp"
#include "illusion/solver.hpp"

namespace illusion {

struct EvalRow {
    std::string solver;
    std::string mode;
    std::size_t solved = 0;
    std::size_t total = 0;
    double bypass_rate = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    // verdicts[s][c]: solver s on challenge c.
    std::vector<std::vector<SolverVerdict>> verdicts;
};

struct EvalOptions {
    // Challenges evaluated at once per solver (solvers that are not
    // concurrent_safe always run one at a time).
    std::size_t concurrency = 1;
};

// One attempt per solver per challenge. Solver exceptions count as
// abstentions; abstentions never count as solved.
EvalReport evaluate(const std::vector<std::shared_ptr<Solver>>& solvers, const std::vector<Challenge>& challenges,
                    const EvalOptions& options = {});

// [{"solver", "mode", "solved", "total", "bypass_rate"}, ...]
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace illusion
