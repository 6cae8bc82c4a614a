#pragma once

// Minimal-change repair of multivalued dependencies and saturated
// conditional independence statements.
//
// The pipeline: build the candidate universe D* (join of the violating
// relation's projections), encode tuple presence as a weighted MaxSAT
// problem whose hard clauses are the dependency's violation witnesses and
// whose soft clauses prefer keeping the data unchanged, solve, and decode
// the assignment back into inserted and deleted tuples. Bags are repaired
// through their keyed-set reduction, one z-stratum at a time.

#include "fairrep/independence.hpp"
#include "fairrep/solver.hpp"

#include <cstdint>
#include <optional>

namespace fairrep {

// D* = join of the xz- and zy-projections. Contains the input relation,
// satisfies the dependency, and contains every tuple a minimal repair may
// use, so the search space below is complete.
Bag candidate_universe(const Bag& relation, const Mvd& mvd);

struct EncodeOptions {
    std::size_t clause_cap = 5'000'000;
    // Fraction of hard clauses kept, sampled uniformly without replacement.
    // Below 1 the result is a partial repair and never reported optimal.
    Rat soft_fraction = Rat(1);
    std::optional<std::uint64_t> seed;  // required when soft_fraction < 1
    // Deletion-only mode: candidate tuples outside the data get hard
    // negative units instead of soft ones.
    bool forbid_insertions = false;
};

// One Boolean variable per tuple of D* (in sorted tuple order); a hard
// clause (!t1 or !t2 or t3) for every violation witness pair sharing a
// z-value, skipping tautologies and duplicates; a soft unit per tuple
// preferring its current presence.
WcnfProblem encode(const Bag& relation, const Mvd& mvd, const EncodeOptions& options = {});

struct RepairOptions {
    SolveBudget budget;
    EncodeOptions encoding;
    std::size_t threads = 1;
    // Strata are batched so each worker task covers at least this many.
    std::size_t stratum_chunk_floor = 64;
};

struct RepairResult {
    Bag repaired;
    Bag inserted;
    Bag deleted;
    Count delta = 0;      // |inserted| + |deleted|, multiset counts
    bool optimal = false;
    // True when the backend finished its own search (MaxSAT proof, NMF
    // convergence, exact factorization). False means a budget ran out, as
    // opposed to `optimal`, which is also cleared by requested
    // approximations such as clause sampling or capped rescaling.
    bool solver_optimal = true;
    // Factorization repairs may rescale counts to keep the distribution
    // exact; maxsat repairs always leave this at 1. The repaired bag then
    // compares against the original scaled by this factor.
    Count scale = 1;
    // L1 distance between the original and repaired empirical distributions,
    // when the producing backend computes it.
    std::optional<Rat> l1;

    RepairResult(Bag r, Bag i, Bag d) : repaired(std::move(r)), inserted(std::move(i)), deleted(std::move(d)) {}
};

// Repairs a deduplicated relation against one MVD. The result satisfies the
// dependency whenever the optimal flag is set; among minimal repairs, the
// one keeping the earliest tuples (sorted order) unchanged is returned.
RepairResult repair_mvd(const Bag& relation, const Mvd& mvd, const RepairOptions& options = {});

// Repairs a bag against a saturated CI statement through the keyed-set
// reduction, stratum by stratum. soft_fraction below 1 drops the sampled-out
// witness clauses entirely (partial repair, non-optimal).
RepairResult repair_ci(const Bag& bag, const CiStatement& ci, const RepairOptions& options = {});

}  // namespace fairrep
