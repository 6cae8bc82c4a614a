#include "fairrep/repair.hpp"

#include "fairrep/det_rng.hpp"
#include "fairrep/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

namespace fairrep {

namespace {

Tuple pick(const Tuple& t, const std::vector<std::size_t>& idx) {
    Tuple out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(t[i]);
    return out;
}

bool agree_on(const Tuple& a, const Tuple& b, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

std::vector<std::string> concat_names(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
    std::vector<std::string> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Distinct draws from [0, total), Floyd's method: O(k) memory however large
// the index space is, and fully determined by the seed.
std::set<unsigned long long> sample_indices(DetRng& rng, unsigned long long total,
                                            unsigned long long k) {
    std::set<unsigned long long> out;
    for (unsigned long long j = total - k; j < total; ++j) {
        const unsigned long long pick_at = rng.below(j + 1);
        if (!out.insert(pick_at).second) out.insert(j);
    }
    return out;
}

}  // namespace

Bag candidate_universe(const Bag& relation, const Mvd& mvd) {
    mvd.check_partition(relation.schema());
    if (!relation.is_set()) {
        throw ValidationError("candidate universe is defined on deduplicated relations");
    }
    const Bag left = as_set(project(relation, concat_names(mvd.x, mvd.z)));
    const Bag right = as_set(project(relation, concat_names(mvd.z, mvd.y)));
    return align_schema(natural_join(left, right), relation.schema());
}

WcnfProblem encode(const Bag& relation, const Mvd& mvd, const EncodeOptions& options) {
    const Schema& schema = relation.schema();
    if (options.soft_fraction <= Rat(0) || options.soft_fraction > Rat(1)) {
        throw ValidationError("clause fraction must lie in (0, 1]");
    }
    const bool sampling = options.soft_fraction != Rat(1);
    if (sampling && !options.seed) {
        throw ValidationError("clause sampling needs a seed");
    }

    const Bag universe = candidate_universe(relation, mvd);
    const auto xi = schema.require_all(mvd.x);
    const auto yi = schema.require_all(mvd.y);
    const auto zi = schema.require_all(mvd.z);

    WcnfProblem problem;
    problem.num_vars = universe.distinct();
    problem.tuples.reserve(universe.distinct());
    problem.legend.reserve(universe.distinct());
    std::map<Tuple, int> var_of;
    {
        int v = 0;
        for (const auto& [t, mult] : universe.rows()) {
            problem.tuples.push_back(t);
            problem.legend.push_back(schema.render_tuple(t));
            var_of.emplace(t, ++v);
        }
    }

    // Witnesses live inside a z-stratum; group the variables accordingly.
    // rows() iterates in tuple order, so each group's list is ascending and
    // the clause generation order below is canonical.
    std::map<Tuple, std::vector<int>> groups;
    for (std::size_t i = 0; i < problem.tuples.size(); ++i) {
        groups[pick(problem.tuples[i], zi)].push_back(static_cast<int>(i) + 1);
    }

    // Count the clauses before materializing anything. A pair is skipped
    // exactly when it agrees on x or on y (the completed tuple then equals
    // one of the witnesses and the clause is a tautology); agreement on both
    // would make the witnesses identical, so the two corrections never
    // overlap and the count is exact.
    unsigned long long total_clauses = 0;
    for (const auto& [zt, vars] : groups) {
        const unsigned long long n = vars.size();
        std::map<Tuple, unsigned long long> by_x;
        std::map<Tuple, unsigned long long> by_y;
        for (int v : vars) {
            ++by_x[pick(problem.tuples[v - 1], xi)];
            ++by_y[pick(problem.tuples[v - 1], yi)];
        }
        unsigned long long skipped = 0;
        for (const auto& entry : by_x) skipped += entry.second * (entry.second - 1);
        for (const auto& entry : by_y) skipped += entry.second * (entry.second - 1);
        total_clauses += n * (n - 1) - skipped;
    }

    unsigned long long kept = total_clauses;
    std::set<unsigned long long> chosen;
    if (sampling) {
        const BigInt scaled = numerator(options.soft_fraction) * total_clauses;
        kept = BigInt(scaled / denominator(options.soft_fraction))
                   .convert_to<unsigned long long>();
        if (kept > options.clause_cap) {
            throw CapacityError("sampled witness clause count exceeds the cap", kept);
        }
        DetRng rng(*options.seed);
        chosen = sample_indices(rng, total_clauses, kept);
    } else if (total_clauses > options.clause_cap) {
        throw CapacityError("witness clause count exceeds the cap", total_clauses);
    }

    problem.hard.reserve(kept + (options.forbid_insertions ? problem.num_vars : 0));
    unsigned long long counter = 0;
    for (const auto& [zt, vars] : groups) {
        for (int a : vars) {
            const Tuple& t1 = problem.tuples[a - 1];
            for (int b : vars) {
                if (a == b) continue;
                const Tuple& t2 = problem.tuples[b - 1];
                if (agree_on(t1, t2, xi) || agree_on(t1, t2, yi)) continue;
                const unsigned long long index = counter++;
                if (sampling && chosen.find(index) == chosen.end()) continue;
                Tuple t3 = t2;
                for (std::size_t i : xi) t3[i] = t1[i];
                const auto completed = var_of.find(t3);
                if (completed == var_of.end()) {
                    throw std::logic_error("witness completion left the candidate universe");
                }
                problem.hard.push_back({-a, -b, completed->second});
            }
        }
    }
    if (counter != total_clauses) {
        throw std::logic_error("witness enumeration disagrees with the precount");
    }

    for (std::size_t i = 0; i < problem.tuples.size(); ++i) {
        const int var = static_cast<int>(i) + 1;
        if (relation.multiplicity(problem.tuples[i]) > 0) {
            problem.soft.push_back({1, {var}});
        } else if (options.forbid_insertions) {
            problem.hard.push_back({-var});
        } else {
            problem.soft.push_back({1, {-var}});
        }
    }
    return problem;
}

namespace {

struct DecodedRepair {
    Bag repaired;
    bool optimal = false;
};

// Encode, solve, canonicalize, decode: the shared per-relation step. The
// caller owns stratification and the bag-level bookkeeping.
DecodedRepair run_repair(const Bag& relation, const Mvd& mvd, const RepairOptions& options,
                         const EncodeOptions& encoding) {
    const WcnfProblem problem = encode(relation, mvd, encoding);
    SolveResult found = solve(problem, options.budget);
    if (found.optimal) {
        found = canonicalize_optimum(problem, found, options.budget);
    }
    DecodedRepair out{Bag(relation.schema()), found.optimal};
    for (std::size_t i = 0; i < problem.tuples.size(); ++i) {
        if (found.assignment[i]) out.repaired.add(problem.tuples[i]);
    }
    return out;
}

}  // namespace

RepairResult repair_mvd(const Bag& relation, const Mvd& mvd, const RepairOptions& options) {
    if (!relation.is_set()) {
        throw ValidationError("repair_mvd expects a deduplicated relation; bags go through repair_ci");
    }
    const bool full_encoding = options.encoding.soft_fraction == Rat(1);
    const DecodedRepair decoded = run_repair(relation, mvd, options, options.encoding);

    RepairResult result(decoded.repaired, Bag(relation.schema()), Bag(relation.schema()));
    split_difference(relation, result.repaired, result.inserted, result.deleted);
    result.delta = result.inserted.total() + result.deleted.total();
    result.optimal = decoded.optimal && full_encoding;
    result.solver_optimal = decoded.optimal;
    result.l1 = l1_distance(relation, result.repaired);
    if (full_encoding && !satisfies_mvd(result.repaired, mvd)) {
        throw std::logic_error("repair output violates the dependency it was built from");
    }
    return result;
}

RepairResult repair_ci(const Bag& bag, const CiStatement& ci, const RepairOptions& options) {
    ci.validate(bag.schema());
    if (!ci.saturated(bag.schema())) {
        throw ValidationError("repair needs a saturated independence statement");
    }
    const bool full_encoding = options.encoding.soft_fraction == Rat(1);
    if (!full_encoding && !options.encoding.seed) {
        throw ValidationError("clause sampling needs a seed");
    }

    const KeyedSet keyed = to_keyed_set(bag);
    const Schema& kschema = keyed.relation.schema();
    const Mvd kmvd = keyed_mvd(ci.as_mvd(bag.schema()));
    const auto zi = kschema.require_all(kmvd.z);

    // One independent sub-problem per distinct z value, in z order.
    std::map<Tuple, Bag> strata;
    for (const auto& [t, mult] : keyed.relation.rows()) {
        strata.try_emplace(pick(t, zi), kschema).first->second.add(t, mult);
    }
    std::vector<const Bag*> jobs;
    jobs.reserve(strata.size());
    for (const auto& [zt, sub] : strata) jobs.push_back(&sub);

    std::vector<DecodedRepair> outputs(jobs.size(), DecodedRepair{Bag(kschema), false});
    auto run_stratum = [&](std::size_t s) {
        EncodeOptions encoding = options.encoding;
        if (encoding.seed) encoding.seed = derive_seed(*options.encoding.seed, s);
        outputs[s] = run_repair(*jobs[s], kmvd, options, encoding);
    };

    const std::size_t workers =
        std::min(std::max<std::size_t>(options.threads, 1),
                 std::max<std::size_t>(jobs.size() / std::max<std::size_t>(options.stratum_chunk_floor, 1),
                                       1));
    if (workers <= 1) {
        for (std::size_t s = 0; s < jobs.size(); ++s) run_stratum(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex failure_lock;
        std::exception_ptr failure;
        auto worker = [&] {
            for (;;) {
                const std::size_t s = next.fetch_add(1);
                if (s >= jobs.size()) return;
                try {
                    run_stratum(s);
                } catch (...) {
                    const std::lock_guard<std::mutex> hold(failure_lock);
                    if (!failure) failure = std::current_exception();
                    next.store(jobs.size());
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    Bag repaired_keyed(kschema);
    bool all_optimal = true;
    for (const DecodedRepair& out : outputs) {
        all_optimal = all_optimal && out.optimal;
        for (const auto& [t, mult] : out.repaired.rows()) repaired_keyed.add(t, mult);
    }
    if (full_encoding && !satisfies_mvd(repaired_keyed, kmvd)) {
        throw std::logic_error("keyed repair violates the dependency it was built from");
    }

    RepairResult result(from_keyed_set(KeyedSet{std::move(repaired_keyed)}), Bag(bag.schema()),
                        Bag(bag.schema()));
    split_difference(bag, result.repaired, result.inserted, result.deleted);
    result.delta = result.inserted.total() + result.deleted.total();
    result.optimal = all_optimal && full_encoding;
    result.solver_optimal = all_optimal;
    result.l1 = l1_distance(bag, result.repaired);
    return result;
}

}  // namespace fairrep
