#pragma once

// Exact weighted MaxSAT solving for the repair encodings: branch and bound
// over tuple variables with unit propagation on hard clauses, a greedy
// initial bound, and a disjoint-violated-clause lower bound.

#include "fairrep/wcnf.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

namespace fairrep {

struct SolveBudget {
    std::optional<std::uint64_t> max_decisions;
    std::optional<std::chrono::milliseconds> time_limit;
};

struct SolveResult {
    std::vector<bool> assignment;  // index v-1 holds the value of variable v
    long long soft_loss = 0;       // total weight of violated soft clauses
    bool optimal = false;          // exhausted the search space within budget
};

// Minimizes violated soft weight subject to the hard clauses. Always returns
// a hard-feasible assignment (the best found when the budget runs out).
// Throws ValidationError when the hard clauses alone are unsatisfiable,
// which the repair encodings cannot produce.
SolveResult solve(const WcnfProblem& problem, const SolveBudget& budget = {});

// Canonicalizes an optimal result: among all assignments with the same soft
// loss, returns the one whose disagreement with the soft-preferred values is
// lexicographically least over variable order (earlier variables keep their
// preferred value whenever any optimum allows it). Uses at most one bounded
// decision search per disagreeing variable. The input must be optimal.
SolveResult canonicalize_optimum(const WcnfProblem& problem, const SolveResult& optimum,
                                 const SolveBudget& budget = {});

// Runs `command <wcnf-path>` on a temporary export of the problem and decodes
// the model it prints. The returned loss is recomputed from the assignment;
// the optimal flag mirrors the solver's own status line.
SolveResult solve_external(const WcnfProblem& problem, const std::string& command);

}  // namespace fairrep
