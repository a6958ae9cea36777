#include "illusion/evaluate.hpp"

#include <cstdio>

#include <json.hpp>

#include "illusion/error.hpp"
#include "parallel.hpp"

namespace illusion {

EvalReport evaluate(const std::vector<std::shared_ptr<Solver>>& solvers, const std::vector<Challenge>& challenges,
                    const EvalOptions& options) {
    if (challenges.empty()) throw InvalidInput("challenge set is empty");
    std::vector<AttackerView> views;
    views.reserve(challenges.size());
    for (const auto& c : challenges) views.push_back(attacker_view(c));

    EvalReport report;
    for (const auto& solver : solvers) {
        std::vector<SolverVerdict> verdicts(challenges.size());
        const std::size_t threads = solver->concurrent_safe() ? std::max<std::size_t>(1, options.concurrency) : 1;
        detail::parallel_for(challenges.size(), threads, [&](std::size_t i) {
            try {
                verdicts[i] = solver->solve(views[i]);
            } catch (const std::exception& e) {
                verdicts[i] = SolverVerdict{challenges[i].challenge_id, std::nullopt, std::string("error: ") + e.what(), 0.0};
            }
            auto& chosen = verdicts[i].chosen_index;
            if (chosen && *chosen >= challenges[i].options.size()) chosen.reset();
        });
        EvalRow row{solver->name(), solver->mode(), 0, challenges.size(), 0.0};
        for (std::size_t i = 0; i < challenges.size(); ++i) {
            const auto& chosen = verdicts[i].chosen_index;
            if (chosen && verify_answer(challenges[i], *chosen)) ++row.solved;
        }
        row.bypass_rate = static_cast<double>(row.solved) / static_cast<double>(row.total);
        report.rows.push_back(row);
        report.verdicts.push_back(std::move(verdicts));
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"solver", r.solver},
                        {"mode", r.mode},
                        {"solved", r.solved},
                        {"total", r.total},
                        {"bypass_rate", r.bypass_rate}});
    }
    return rows.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-18s %8s %8s %10s\n", "solver", "mode", "solved", "total", "bypass");
    out += line;
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof line, "%-24s %-18s %8zu %8zu %9.2f%%\n", r.solver.c_str(), r.mode.c_str(), r.solved,
                      r.total, 100.0 * r.bypass_rate);
        out += line;
    }
    return out;
}

}  // namespace illusion
