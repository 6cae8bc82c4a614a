#pragma once

// Exact conditional-independence testing on empirical distributions,
// conditional mutual information, graphoid derivations and Markov-boundary
// learning.

#include "fairrep/bag.hpp"

#include <string>
#include <vector>

namespace fairrep {

// The statement (x independent of y given z). Sets are attribute names and
// must be pairwise disjoint; they need not cover the schema. When they do,
// the statement is saturated and equivalent to a multivalued dependency on
// deduplicated data.
struct CiStatement {
    std::vector<std::string> x;
    std::vector<std::string> y;
    std::vector<std::string> z;

    void validate(const Schema& schema) const;
    bool saturated(const Schema& schema) const;

    // The z ->> x dependency induced on deduplicated relations. Only valid
    // for saturated statements.
    Mvd as_mvd(const Schema& schema) const;
};

// JSON shape: {"x": ["name", ...], "y": [...], "z": [...]}.
CiStatement ci_from_json(const std::string& text);
std::string ci_to_json(const CiStatement& ci);

// Largest |Pr(x|y,z) - Pr(x|z)| over cells with Pr(y,z) > 0 and Pr(x,z) > 0.
// Exact; zero iff the statement holds on the empirical distribution.
Rat ci_gap(const Bag& bag, const CiStatement& ci);

// ci_gap <= tolerance, with early exit on the first offending cell.
bool holds_ci(const Bag& bag, const CiStatement& ci, const Rat& tolerance = Rat(0));

// I(X;Y|Z) in nats over the empirical distribution. Returns exactly 0.0 when
// the statement holds (every log-ratio is checked as a rational before any
// floating-point work), and a strictly positive value otherwise.
double conditional_mutual_information(const Bag& bag, const CiStatement& ci);

struct MarkovBoundary {
    std::string target;
    std::vector<std::string> boundary;  // schema order
};

// Grow-Shrink over the empirical distribution: grow adds attributes that are
// dependent on the target given the current set, shrink drops attributes that
// are independent given the rest. Attributes are visited in schema order, so
// the result is deterministic.
MarkovBoundary grow_shrink_boundary(const Bag& bag, const std::string& target,
                                    const Rat& tolerance = make_rat(1, 100));

struct GraphoidOptions {
    // Adds the intersection axiom, sound only for strictly positive
    // distributions. Never inferred from data; callers must opt in.
    bool assume_strict_positivity = false;
    std::size_t max_attributes = 10;
    std::size_t max_closure = 200000;
};

// True iff the conclusion is derivable from the premises under the semigraphoid
// axioms (symmetry, decomposition, weak union, contraction), by fixpoint
// saturation over attribute subsets.
bool graphoid_closure_check(const Schema& schema, const std::vector<CiStatement>& premises,
                            const CiStatement& conclusion, const GraphoidOptions& options = {});

struct ImpossibilityReport {
    bool s_indep_o_given_y = false;
    bool s_indep_y_given_o = false;
    bool s_indep_y = false;
    // Set when the first two statements hold but the third fails. No strictly
    // positive distribution admits that combination (it is the intersection
    // axiom followed by decomposition), so on full-support data this flag
    // means the tolerance mixed incompatible approximations or something is
    // broken upstream. Degenerate supports can trip it legitimately: with
    // Y = O almost surely, both conditional statements hold vacuously while
    // S and Y stay correlated.
    bool violated = false;
};

ImpossibilityReport impossibility_check(const Bag& bag, const std::string& s, const std::string& o,
                                        const std::string& y, const Rat& tolerance = Rat(0));

}  // namespace fairrep
