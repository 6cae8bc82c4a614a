#pragma once

// Weighted partial MaxSAT problems over tuple-presence variables, plus
// DIMACS WCNF serialization.
//
// Literals use the DIMACS convention: variables are 1-based, a negative
// integer is the negation. Hard clauses must be satisfied; soft clauses
// carry positive integer weights and the objective is to minimize the total
// weight of violated soft clauses.

#include "fairrep/bag.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fairrep {

struct SoftClause {
    long long weight = 1;
    std::vector<int> literals;
};

struct WcnfProblem {
    std::size_t num_vars = 0;
    std::vector<std::vector<int>> hard;
    std::vector<SoftClause> soft;
    // Variable v describes tuples[v-1]; legend[v-1] is its rendering, kept
    // so exported files are readable without the source data.
    std::vector<Tuple> tuples;
    std::vector<std::string> legend;

    // Hard-clause weight in DIMACS output: total soft weight + 1.
    long long top() const;
};

// Weighted DIMACS text: comment legend, then `p wcnf <vars> <clauses> <top>`,
// then one clause per line as `<weight> <lit> ... 0`.
void export_wcnf(const WcnfProblem& problem, std::ostream& sink);
void export_wcnf_file(const WcnfProblem& problem, const std::string& path);

// Parses the format written by export_wcnf (legend comments optional).
// Clauses with weight >= top come back as hard.
WcnfProblem parse_wcnf(std::istream& source);

// Extracts an assignment from MaxSAT-solver output: integer `v` lines
// ("v 1 -2 ...") or the newer binary form ("v 0101"). Returns nullopt when
// no complete model is present. `claims_optimal` reflects an
// "s OPTIMUM FOUND" status line.
std::optional<std::vector<bool>> parse_solver_output(const std::string& text, std::size_t num_vars,
                                                     bool* claims_optimal);

}  // namespace fairrep
