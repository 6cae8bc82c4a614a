#include "fairrep/solver.hpp"

#include "fairrep/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace fairrep {

namespace {

constexpr long long kInfiniteLoss = std::numeric_limits<long long>::max();

// Branch and bound over the tuple variables. Chronological backtracking with
// unit propagation on hard clauses is enough at repair scale: strata are
// solved one at a time and instances stay in the thousands of variables.
class BnbSearch {
public:
    BnbSearch(const WcnfProblem& problem, const SolveBudget& budget)
        : n_(problem.num_vars),
          budget_(budget),
          occ_(problem.num_vars),
          pref_(problem.num_vars, false),
          unit_weight_(problem.num_vars, 0) {
        // Hard clauses first, then soft; clause weight < 0 marks hard.
        for (const auto& lits : problem.hard) add_clause(lits, -1);
        for (const SoftClause& s : problem.soft) {
            if (s.weight <= 0) throw ValidationError("soft clause weight must be positive");
            add_clause(s.literals, s.weight);
            if (s.literals.size() == 1) {
                const std::size_t v = var_of(s.literals[0]);
                pref_[v] = s.literals[0] > 0;
                unit_weight_[v] += s.weight;
            }
        }
        // A hard clause qualifies for the lower bound when satisfying it
        // requires flipping some variable away from its preferred value.
        for (std::size_t c = 0; c < clauses_.size(); ++c) {
            if (weights_[c] >= 0) continue;
            bool all_anti = true;
            for (int lit : clauses_[c]) {
                const std::size_t v = var_of(lit);
                if (unit_weight_[v] == 0 || (lit > 0) == pref_[v]) {
                    all_anti = false;
                    break;
                }
            }
            if (all_anti) lb_clauses_.push_back(c);
        }
    }

    SolveResult run(const std::vector<std::pair<std::size_t, bool>>& assumptions,
                    long long stop_at) {
        start_ = std::chrono::steady_clock::now();
        decisions_ = 0;
        budget_hit_ = false;
        best_loss_ = kInfiniteLoss;
        best_.assign(n_, false);

        // Greedy feasible starts: the soft-preferred assignment, everything
        // true, everything false. At least one is feasible for every repair
        // encoding.
        seed_candidate(pref_, assumptions);
        seed_candidate(std::vector<bool>(n_, true), assumptions);
        seed_candidate(std::vector<bool>(n_, false), assumptions);

        assign_.assign(n_, -1);
        trail_.clear();
        for (auto& st : state_) st = {};
        for (std::size_t c = 0; c < clauses_.size(); ++c) {
            state_[c].free_count = static_cast<int>(clauses_[c].size());
        }
        cost_ = 0;
        conflict_ = false;

        bool root_ok = true;
        const std::size_t mark = trail_.size();
        for (const auto& [v, value] : assumptions) {
            if (!enqueue(v, value) || !propagate()) {
                root_ok = false;
                break;
            }
        }
        // Hard clauses that are unit from the start never trigger the
        // incremental scan, so force them here.
        for (std::size_t c = 0; root_ok && c < clauses_.size(); ++c) {
            if (weights_[c] >= 0 || clauses_[c].size() != 1) continue;
            const int lit = clauses_[c][0];
            if (!enqueue(var_of(lit), lit > 0) || !propagate()) root_ok = false;
        }
        if (root_ok && best_loss_ > stop_at) dfs(0, stop_at);
        undo_to(mark);

        if (best_loss_ == kInfiniteLoss) {
            throw ValidationError("hard clauses are unsatisfiable");
        }
        SolveResult result;
        result.assignment = best_;
        result.soft_loss = best_loss_;
        result.optimal = !budget_hit_;
        return result;
    }

    bool preferred(std::size_t v) const { return pref_[v]; }

private:
    static std::size_t var_of(int lit) { return static_cast<std::size_t>(lit < 0 ? -lit : lit) - 1; }

    struct ClauseState {
        int true_count = 0;
        int free_count = 0;
    };

    void add_clause(const std::vector<int>& lits, long long weight) {
        if (lits.empty()) {
            if (weight < 0) throw ValidationError("empty hard clause is unsatisfiable");
            base_loss_ += weight;
            return;
        }
        for (int lit : lits) {
            if (lit == 0 || var_of(lit) >= n_) {
                throw ValidationError("clause literal outside declared variables");
            }
        }
        const std::size_t c = clauses_.size();
        clauses_.push_back(lits);
        weights_.push_back(weight);
        state_.push_back({});
        for (int lit : lits) occ_[var_of(lit)].emplace_back(c, lit > 0);
    }

    void seed_candidate(std::vector<bool> candidate,
                        const std::vector<std::pair<std::size_t, bool>>& assumptions) {
        for (const auto& [v, value] : assumptions) candidate[v] = value;
        long long loss = base_loss_;
        for (std::size_t c = 0; c < clauses_.size(); ++c) {
            bool satisfied = false;
            for (int lit : clauses_[c]) {
                if (candidate[var_of(lit)] == (lit > 0)) {
                    satisfied = true;
                    break;
                }
            }
            if (satisfied) continue;
            if (weights_[c] < 0) return;  // infeasible candidate
            loss += weights_[c];
        }
        if (loss < best_loss_) {
            best_loss_ = loss;
            best_ = candidate;
        }
    }

    bool enqueue(std::size_t v, bool value) {
        if (assign_[v] != -1) return assign_[v] == int(value);
        assign_[v] = int(value);
        trail_.push_back(v);
        for (const auto& [c, positive] : occ_[v]) {
            ClauseState& st = state_[c];
            st.free_count--;
            if (positive == value) {
                st.true_count++;
            } else if (st.true_count == 0 && st.free_count == 0) {
                if (weights_[c] < 0) {
                    conflict_ = true;
                } else {
                    cost_ += weights_[c];
                }
            }
        }
        return !conflict_;
    }

    bool propagate() {
        // Scan for hard unit clauses until fixpoint. Plain but adequate:
        // clause sets per stratum are modest and the scan touches only
        // clauses of freshly assigned variables.
        std::size_t scanned = trail_.size() > 0 ? trail_.size() - 1 : 0;
        while (scanned < trail_.size()) {
            if (conflict_) return false;
            const std::size_t v = trail_[scanned++];
            for (const auto& [c, positive] : occ_[v]) {
                const ClauseState& st = state_[c];
                if (weights_[c] >= 0 || st.true_count > 0 || st.free_count != 1) continue;
                int unit = 0;
                for (int lit : clauses_[c]) {
                    if (assign_[var_of(lit)] == -1) {
                        unit = lit;
                        break;
                    }
                }
                if (unit == 0 || !enqueue(var_of(unit), unit > 0)) return false;
            }
        }
        return !conflict_;
    }

    void undo_to(std::size_t mark) {
        while (trail_.size() > mark) {
            const std::size_t v = trail_.back();
            trail_.pop_back();
            const bool value = assign_[v] == 1;
            for (const auto& [c, positive] : occ_[v]) {
                ClauseState& st = state_[c];
                if (positive == value) {
                    st.true_count--;
                } else if (st.true_count == 0 && st.free_count == 0) {
                    if (weights_[c] >= 0) cost_ -= weights_[c];
                }
                st.free_count++;
            }
            assign_[v] = -1;
        }
        conflict_ = false;
    }

    // Variable-disjoint hard clauses that each force one flip off the
    // preferred assignment; their cheapest flip weights add up to a valid
    // bound on the remaining cost.
    long long lower_bound() {
        if (lb_clauses_.empty()) return 0;
        lb_used_.assign(n_, false);
        long long bound = 0;
        for (std::size_t c : lb_clauses_) {
            const ClauseState& st = state_[c];
            if (st.true_count > 0 || st.free_count == 0) continue;
            long long cheapest = kInfiniteLoss;
            bool disjoint = true;
            for (int lit : clauses_[c]) {
                const std::size_t v = var_of(lit);
                if (assign_[v] != -1) continue;
                if (lb_used_[v]) {
                    disjoint = false;
                    break;
                }
                cheapest = std::min(cheapest, unit_weight_[v]);
            }
            if (!disjoint || cheapest == kInfiniteLoss) continue;
            bound += cheapest;
            for (int lit : clauses_[c]) {
                const std::size_t v = var_of(lit);
                if (assign_[v] == -1) lb_used_[v] = true;
            }
        }
        return bound;
    }

    bool out_of_budget() {
        if (budget_.max_decisions && decisions_ > *budget_.max_decisions) return true;
        if (budget_.time_limit && (decisions_ & 1023) == 0) {
            if (std::chrono::steady_clock::now() - start_ >= *budget_.time_limit) return true;
        }
        return false;
    }

    // Returns false to abort the whole search (budget or stop_at reached).
    bool dfs(std::size_t from, long long stop_at) {
        if (cost_ + base_loss_ + lower_bound() >= best_loss_) return true;
        std::size_t v = from;
        while (v < n_ && assign_[v] != -1) ++v;
        if (v == n_) {
            best_loss_ = cost_ + base_loss_;
            best_.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) best_[i] = assign_[i] == 1;
            return best_loss_ > stop_at;
        }
        ++decisions_;
        if (out_of_budget()) {
            budget_hit_ = true;
            return false;
        }
        const bool first = pref_[v];
        for (const bool value : {first, !first}) {
            const std::size_t mark = trail_.size();
            if (enqueue(v, value) && propagate()) {
                if (!dfs(v + 1, stop_at)) {
                    undo_to(mark);
                    return false;
                }
            }
            undo_to(mark);
        }
        return true;
    }

    std::size_t n_;
    SolveBudget budget_;
    std::vector<std::vector<int>> clauses_;
    std::vector<long long> weights_;  // negative marks hard
    std::vector<ClauseState> state_;
    std::vector<std::vector<std::pair<std::size_t, bool>>> occ_;
    std::vector<bool> pref_;
    std::vector<long long> unit_weight_;
    std::vector<std::size_t> lb_clauses_;
    std::vector<bool> lb_used_;

    std::vector<int> assign_;
    std::vector<std::size_t> trail_;
    long long cost_ = 0;
    long long base_loss_ = 0;
    bool conflict_ = false;

    long long best_loss_ = kInfiniteLoss;
    std::vector<bool> best_;
    std::uint64_t decisions_ = 0;
    bool budget_hit_ = false;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

SolveResult solve(const WcnfProblem& problem, const SolveBudget& budget) {
    BnbSearch search(problem, budget);
    return search.run({}, -1);
}

SolveResult canonicalize_optimum(const WcnfProblem& problem, const SolveResult& optimum,
                                 const SolveBudget& budget) {
    if (!optimum.optimal) {
        throw ValidationError("canonicalization needs an optimal starting point");
    }
    BnbSearch search(problem, budget);
    std::vector<std::pair<std::size_t, bool>> fixed;
    std::vector<bool> witness = optimum.assignment;
    for (std::size_t v = 0; v < problem.num_vars; ++v) {
        const bool preferred = search.preferred(v);
        if (witness[v] == preferred) {
            fixed.emplace_back(v, preferred);
            continue;
        }
        // The current witness flips v. Ask whether some optimum keeps it.
        auto probe = fixed;
        probe.emplace_back(v, preferred);
        bool kept = false;
        try {
            const SolveResult attempt = search.run(probe, optimum.soft_loss);
            if (attempt.soft_loss <= optimum.soft_loss) {
                witness = attempt.assignment;
                kept = true;
            }
        } catch (const ValidationError&) {
            // Hard-infeasible with v at its preferred value; the flip stays.
        }
        fixed.emplace_back(v, kept ? preferred : !preferred);
    }
    SolveResult result;
    result.assignment = witness;
    result.soft_loss = optimum.soft_loss;
    result.optimal = true;
    return result;
}

SolveResult solve_external(const WcnfProblem& problem, const std::string& command) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();
    const fs::path wcnf = dir / ("fairrep-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) +
                                 ".wcnf");
    export_wcnf_file(problem, wcnf.string());

    std::string output;
    const std::string full = command + " " + wcnf.string();
    if (FILE* pipe = ::popen(full.c_str(), "r")) {
        char buf[4096];
        std::size_t got = 0;
        while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
        ::pclose(pipe);
    } else {
        fs::remove(wcnf);
        throw ValidationError("cannot spawn external solver: " + command);
    }
    fs::remove(wcnf);

    bool claims_optimal = false;
    const auto model = parse_solver_output(output, problem.num_vars, &claims_optimal);
    if (!model) {
        throw ValidationError("external solver produced no complete model");
    }
    long long loss = 0;
    auto satisfied = [&](const std::vector<int>& lits) {
        for (int lit : lits) {
            const std::size_t v = static_cast<std::size_t>(lit < 0 ? -lit : lit) - 1;
            if ((*model)[v] == (lit > 0)) return true;
        }
        return false;
    };
    for (const auto& clause : problem.hard) {
        if (!satisfied(clause)) {
            throw ValidationError("external solver model violates a hard clause");
        }
    }
    for (const SoftClause& s : problem.soft) {
        if (!satisfied(s.literals)) loss += s.weight;
    }
    SolveResult result;
    result.assignment = *model;
    result.soft_loss = loss;
    result.optimal = claims_optimal;
    return result;
}

}  // namespace fairrep
