#include "fairrep/causal_model.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <set>

namespace fairrep {

namespace {

// Product of the domain sizes of `vars`, compared against a cap without
// overflowing.
std::size_t assignment_space(const Schema& schema, const std::vector<std::size_t>& vars,
                             std::size_t cap, const char* what) {
    std::size_t space = 1;
    for (std::size_t v : vars) {
        const std::size_t d = schema.at(v).domain.size();
        if (space > cap / d) {
            throw CapacityError(std::string(what) + " exceeds the configured size cap", cap + 1);
        }
        space *= d;
    }
    return space;
}

// Calls fn once per assignment of `vars`, writing values into `scratch` at
// the variable positions. Other positions of `scratch` are left untouched.
void for_each_assignment(const Schema& schema, const std::vector<std::size_t>& vars, Tuple* scratch,
                         const std::function<void()>& fn) {
    if (vars.empty()) {
        fn();
        return;
    }
    for (std::size_t v : vars) (*scratch)[v] = 0;
    while (true) {
        fn();
        std::size_t i = 0;
        for (; i < vars.size(); ++i) {
            const std::size_t v = vars[i];
            if (++(*scratch)[v] < schema.at(v).domain.size()) break;
            (*scratch)[v] = 0;
        }
        if (i == vars.size()) return;
    }
}

Assignment resolve_unique(const Schema& schema, const Assignment& pairs, const char* what) {
    std::set<std::string> seen;
    for (const auto& [name, label] : pairs) {
        schema.require_category(schema.require(name), label);
        if (!seen.insert(name).second) {
            throw ValidationError(std::string(what) + ": variable '" + name + "' assigned twice");
        }
    }
    return pairs;
}

}  // namespace

Rat Dist::total() const {
    Rat sum(0);
    for (const auto& [t, w] : weights) sum += w;
    return sum;
}

Dist Dist::marginal(const std::vector<std::string>& attrs) const {
    const std::vector<std::size_t> idx = schema.require_all(attrs);
    std::vector<Attribute> kept;
    kept.reserve(idx.size());
    for (std::size_t i : idx) kept.push_back(schema.at(i));
    Dist out{Schema(std::move(kept))};
    for (const auto& [t, w] : weights) {
        Tuple p;
        p.reserve(idx.size());
        for (std::size_t i : idx) p.push_back(t[i]);
        out.weights[p] += w;
    }
    return out;
}

namespace {

// Event as (position, value) pairs; nullopt when the assignment contradicts
// itself.
std::optional<std::vector<std::pair<std::size_t, Cat>>> to_cells(const Schema& schema,
                                                                 const Assignment& event) {
    std::vector<std::pair<std::size_t, Cat>> cells;
    for (const auto& [name, label] : event) {
        const std::size_t i = schema.require(name);
        const Cat c = schema.require_category(i, label);
        bool conflict = false;
        for (const auto& [j, v] : cells) {
            if (j == i && v != c) conflict = true;
        }
        if (conflict) return std::nullopt;
        cells.emplace_back(i, c);
    }
    return cells;
}

Rat mass_of(const Dist& dist, const std::vector<std::pair<std::size_t, Cat>>& cells) {
    Rat sum(0);
    for (const auto& [t, w] : dist.weights) {
        bool match = true;
        for (const auto& [i, c] : cells) {
            if (t[i] != c) {
                match = false;
                break;
            }
        }
        if (match) sum += w;
    }
    return sum;
}

}  // namespace

Rat event_probability(const Dist& dist, const Assignment& event) {
    const auto cells = to_cells(dist.schema, event);
    if (!cells) return Rat(0);
    return mass_of(dist, *cells);
}

Rat conditional_probability(const Dist& dist, const Assignment& event, const Assignment& given) {
    const auto given_cells = to_cells(dist.schema, given);
    if (!given_cells) return Rat(0);
    const Rat den = mass_of(dist, *given_cells);
    if (den == 0) return Rat(0);
    Assignment both = event;
    both.insert(both.end(), given.begin(), given.end());
    const auto joint_cells = to_cells(dist.schema, both);
    if (!joint_cells) return Rat(0);
    return mass_of(dist, *joint_cells) / den;
}

CausalModel::CausalModel(std::vector<ModelNode> nodes) : schema_([&] {
    std::vector<Attribute> attrs;
    attrs.reserve(nodes.size());
    for (const ModelNode& n : nodes) attrs.push_back(n.variable);
    return Schema(std::move(attrs));
}()) {
    const std::size_t n = nodes.size();
    if (n == 0) throw ValidationError("model: no variables");
    parents_.resize(n);
    children_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (const std::string& p : nodes[v].parents) {
            const std::size_t pi = schema_.require(p);
            if (pi == v) throw ValidationError("model: variable '" + p + "' lists itself as parent");
            if (std::find(parents_[v].begin(), parents_[v].end(), pi) != parents_[v].end()) {
                throw ValidationError("model: duplicate parent '" + p + "' of '" +
                                      nodes[v].variable.name + "'");
            }
            parents_[v].push_back(pi);
            children_[pi].push_back(v);
        }
    }

    // Kahn's algorithm; smallest-index-first gives a stable order.
    std::vector<std::size_t> indeg(n);
    for (std::size_t v = 0; v < n; ++v) indeg[v] = parents_[v].size();
    std::set<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indeg[v] == 0) ready.insert(v);
    }
    while (!ready.empty()) {
        const std::size_t v = *ready.begin();
        ready.erase(ready.begin());
        topo_.push_back(v);
        for (std::size_t c : children_[v]) {
            if (--indeg[c] == 0) ready.insert(c);
        }
    }
    if (topo_.size() != n) throw ValidationError("model: the variable graph has a cycle");

    reach_.assign(n, std::vector<bool>(n, false));
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        const std::size_t v = *it;
        for (std::size_t c : children_[v]) {
            reach_[v][c] = true;
            for (std::size_t w = 0; w < n; ++w) {
                if (reach_[c][w]) reach_[v][w] = true;
            }
        }
    }

    cpt_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t dv = schema_.at(v).domain.size();
        std::size_t rows = 1;
        for (std::size_t p : parents_[v]) rows *= schema_.at(p).domain.size();
        cpt_[v].assign(rows * dv, Rat(-1));

        if (nodes[v].rows.size() != rows) {
            throw ValidationError("model: cpt for '" + nodes[v].variable.name + "' expects " +
                                  std::to_string(rows) + " rows, found " +
                                  std::to_string(nodes[v].rows.size()));
        }
        for (const CptRow& row : nodes[v].rows) {
            const std::string where = "model: cpt row for '" + nodes[v].variable.name + "'";
            if (row.given.size() != parents_[v].size()) {
                throw ValidationError(where + ": wrong number of parent values");
            }
            std::size_t pi = 0;
            for (std::size_t k = 0; k < parents_[v].size(); ++k) {
                const std::size_t p = parents_[v][k];
                if (row.given[k] >= schema_.at(p).domain.size()) {
                    throw ValidationError(where + ": parent value out of domain");
                }
                pi = pi * schema_.at(p).domain.size() + row.given[k];
            }
            if (row.distribution.size() != dv) {
                throw ValidationError(where + ": distribution must cover the whole domain");
            }
            if (cpt_[v][pi * dv] >= 0) {
                throw ValidationError(where + ": parent assignment listed twice");
            }
            Rat sum(0);
            for (std::size_t c = 0; c < dv; ++c) {
                if (row.distribution[c] < 0) throw ValidationError(where + ": negative probability");
                sum += row.distribution[c];
                cpt_[v][pi * dv + c] = row.distribution[c];
            }
            if (sum != 1) {
                throw ValidationError(where + ": probabilities sum to " + rat_to_string(sum) +
                                      ", expected 1");
            }
        }
    }
}

bool CausalModel::reaches(std::size_t from, std::size_t to) const {
    return reach_[from][to];
}

std::size_t CausalModel::parent_index(std::size_t v, const Tuple& full) const {
    std::size_t pi = 0;
    for (std::size_t p : parents_[v]) pi = pi * schema_.at(p).domain.size() + full[p];
    return pi;
}

const Rat& CausalModel::cpt_entry(std::size_t v, const Tuple& full) const {
    const std::size_t dv = schema_.at(v).domain.size();
    return cpt_[v][parent_index(v, full) * dv + full[v]];
}

bool CausalModel::d_separated(const std::vector<std::string>& x, const std::vector<std::string>& y,
                              const std::vector<std::string>& z) const {
    const auto xi = schema_.require_all(x);
    const auto yi = schema_.require_all(y);
    const auto zi = schema_.require_all(z);
    std::vector<bool> in_z(schema_.size(), false);
    for (std::size_t v : zi) in_z[v] = true;
    for (std::size_t v : xi) {
        if (in_z[v]) throw ValidationError("d-separation: sets must be disjoint");
    }
    std::set<std::size_t> targets(yi.begin(), yi.end());
    for (std::size_t v : yi) {
        if (in_z[v] || std::find(xi.begin(), xi.end(), v) != xi.end()) {
            throw ValidationError("d-separation: sets must be disjoint");
        }
    }

    // Ancestors of z (inclusive): colliders on an active trail must have a
    // conditioned descendant.
    std::vector<bool> anc_z(schema_.size(), false);
    for (std::size_t v = 0; v < schema_.size(); ++v) {
        if (in_z[v]) {
            anc_z[v] = true;
            continue;
        }
        for (std::size_t w : zi) {
            if (reach_[v][w]) {
                anc_z[v] = true;
                break;
            }
        }
    }

    // Reachability over (node, arrival direction) states: kFromChild means
    // the trail enters v against an edge v -> c.
    enum Dir { kFromChild = 0, kFromParent = 1 };
    std::vector<std::array<bool, 2>> visited(schema_.size(), {false, false});
    std::deque<std::pair<std::size_t, Dir>> queue;
    for (std::size_t v : xi) queue.emplace_back(v, kFromChild);
    while (!queue.empty()) {
        const auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = true;
        if (!in_z[v] && targets.count(v)) return false;

        if (dir == kFromChild && !in_z[v]) {
            for (std::size_t p : parents_[v]) queue.emplace_back(p, kFromChild);
            for (std::size_t c : children_[v]) queue.emplace_back(c, kFromParent);
        } else if (dir == kFromParent) {
            if (!in_z[v]) {
                for (std::size_t c : children_[v]) queue.emplace_back(c, kFromParent);
            }
            if (anc_z[v]) {
                for (std::size_t p : parents_[v]) queue.emplace_back(p, kFromChild);
            }
        }
    }
    return true;
}

Dist CausalModel::joint_distribution(std::size_t cap) const {
    return intervene({}, cap);
}

Dist CausalModel::intervene(const Assignment& fixed, std::size_t cap) const {
    resolve_unique(schema_, fixed, "intervention");
    std::vector<bool> clamped(schema_.size(), false);
    Tuple full(schema_.size(), 0);
    for (const auto& [name, label] : fixed) {
        const std::size_t v = schema_.require(name);
        clamped[v] = true;
        full[v] = schema_.require_category(v, label);
    }

    std::vector<std::size_t> free_vars;
    std::vector<Attribute> free_attrs;
    for (std::size_t v = 0; v < schema_.size(); ++v) {
        if (!clamped[v]) {
            free_vars.push_back(v);
            free_attrs.push_back(schema_.at(v));
        }
    }
    assignment_space(schema_, free_vars, cap, "joint distribution");

    Dist out{Schema(std::move(free_attrs))};
    for_each_assignment(schema_, free_vars, &full, [&] {
        Rat w(1);
        for (std::size_t v : free_vars) {
            w *= cpt_entry(v, full);
            if (w == 0) break;
        }
        if (w == 0) return;
        Tuple key;
        key.reserve(free_vars.size());
        for (std::size_t v : free_vars) key.push_back(full[v]);
        out.weights[key] = w;
    });
    return out;
}

Dist CausalModel::extended_adjustment(const std::string& y, const Assignment& interventions,
                                      std::size_t cap) const {
    resolve_unique(schema_, interventions, "intervention");
    const std::size_t yi = schema_.require(y);

    std::vector<std::size_t> xs;
    Tuple xvals(schema_.size(), 0);
    for (const auto& [name, label] : interventions) {
        const std::size_t v = schema_.require(name);
        xs.push_back(v);
        xvals[v] = schema_.require_category(v, label);
    }
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (reach_[xs[i + 1]][xs[i]]) {
            throw ValidationError("adjustment: intervention on '" + schema_.at(xs[i]).name +
                                  "' must precede its non-descendants; reorder it after '" +
                                  schema_.at(xs[i + 1]).name + "'");
        }
    }

    // Z = union of the intervened variables' parents.
    std::set<std::size_t> z_set;
    for (std::size_t v : xs) z_set.insert(parents_[v].begin(), parents_[v].end());
    const std::vector<std::size_t> z_vars(z_set.begin(), z_set.end());

    const Dist joint = joint_distribution(cap);
    const Assignment x_event = interventions;

    std::vector<Attribute> y_attr{schema_.at(yi)};
    Dist out{Schema(std::move(y_attr))};
    Tuple scratch(schema_.size(), 0);
    for_each_assignment(schema_, z_vars, &scratch, [&] {
        Assignment z_event;
        for (std::size_t v : z_vars) {
            z_event.emplace_back(schema_.at(v).name, schema_.at(v).domain[scratch[v]]);
        }

        // Parent-compensation chain: Pr(pa(X_i) | pa(X_0..i-1), x_0..i-1).
        Rat chain(1);
        Assignment seen_pa;
        Assignment seen_x;
        for (std::size_t i = 0; i < xs.size() && chain != 0; ++i) {
            Assignment pa_event;
            for (std::size_t p : parents_[xs[i]]) {
                pa_event.emplace_back(schema_.at(p).name, schema_.at(p).domain[scratch[p]]);
            }
            Assignment given = seen_pa;
            given.insert(given.end(), seen_x.begin(), seen_x.end());
            chain *= conditional_probability(joint, pa_event, given);
            seen_pa.insert(seen_pa.end(), pa_event.begin(), pa_event.end());
            seen_x.emplace_back(schema_.at(xs[i]).name, schema_.at(xs[i]).domain[xvals[xs[i]]]);
        }
        if (chain == 0) return;

        Assignment xz = x_event;
        xz.insert(xz.end(), z_event.begin(), z_event.end());
        for (Cat c = 0; c < schema_.at(yi).domain.size(); ++c) {
            const Assignment y_event{{y, schema_.at(yi).domain[c]}};
            const Rat term = conditional_probability(joint, y_event, xz) * chain;
            if (term != 0) out.weights[Tuple{c}] += term;
        }
    });
    return out;
}

namespace {

Rat outcome_mass(const Dist& interved, const std::string& outcome, Cat value) {
    const std::size_t oi = interved.schema.require(outcome);
    Rat sum(0);
    for (const auto& [t, w] : interved.weights) {
        if (t[oi] == value) sum += w;
    }
    return sum;
}

}  // namespace

std::optional<KFairWitness> k_fair_witness(const CausalModel& model, const FairnessApplication& app,
                                           const std::vector<std::string>& k, const Rat& tolerance) {
    app.validate();
    const Schema& schema = model.schema();
    const std::size_t si = schema.require(app.protected_attr);
    const std::size_t oi = schema.require(app.outcome);
    if (schema.at(si).domain.size() != 2) {
        throw ValidationError("fairness checks need a binary protected attribute");
    }
    const std::vector<std::size_t> ki = schema.require_all(k);
    for (std::size_t v : ki) {
        if (v == si || v == oi) {
            throw ValidationError("intervened set must avoid the protected attribute and outcome");
        }
    }
    // Which protected category plays the "1" role only affects reporting.
    Cat s1 = 1;
    if (app.protected_value) s1 = schema.require_category(si, *app.protected_value);
    const Cat s0 = 1 - s1;

    assignment_space(schema, ki, 1000000, "fairness context enumeration");

    std::optional<KFairWitness> witness;
    Tuple scratch(schema.size(), 0);
    for_each_assignment(schema, ki, &scratch, [&] {
        if (witness) return;
        Assignment context;
        for (std::size_t v : ki) {
            context.emplace_back(schema.at(v).name, schema.at(v).domain[scratch[v]]);
        }
        auto with_s = [&](Cat s) {
            Assignment a{{app.protected_attr, schema.at(si).domain[s]}};
            a.insert(a.end(), context.begin(), context.end());
            return model.intervene(a);
        };
        const Dist d0 = with_s(s0);
        const Dist d1 = with_s(s1);
        for (Cat c = 0; c < schema.at(oi).domain.size(); ++c) {
            const Rat p0 = outcome_mass(d0, app.outcome, c);
            const Rat p1 = outcome_mass(d1, app.outcome, c);
            if (rat_abs(p1 - p0) > tolerance) {
                witness = KFairWitness{k, context, schema.at(oi).domain[c], p0, p1};
                return;
            }
        }
    });
    return witness;
}

bool k_fair(const CausalModel& model, const FairnessApplication& app,
            const std::vector<std::string>& k, const Rat& tolerance) {
    return !k_fair_witness(model, app, k, tolerance).has_value();
}

FairnessVerdict justifiably_fair(const CausalModel& model, const FairnessApplication& app,
                                 FairnessMode mode, const Rat& tolerance) {
    const Schema& schema = model.schema();
    app.validate_partition(schema);
    const std::size_t si = schema.require(app.protected_attr);
    const std::size_t oi = schema.require(app.outcome);

    FairnessVerdict verdict;
    verdict.mode = mode;

    if (mode == FairnessMode::kPathCriterion) {
        std::vector<bool> admissible(schema.size(), false);
        for (const std::string& a : app.admissible) admissible[schema.require(a)] = true;

        // Every directed path from the protected attribute to the outcome
        // must pass through an admissible variable. Depth-first search in
        // index order, pruned to outcome ancestors, returns a deterministic
        // witness path.
        std::vector<std::size_t> path{si};
        std::function<bool(std::size_t, std::size_t)> dfs = [&](std::size_t v,
                                                                std::size_t admissible_hits) {
            if (v == oi) {
                if (admissible_hits == 0) {
                    for (std::size_t p : path) verdict.violating_path.push_back(schema.at(p).name);
                    return true;
                }
                return false;
            }
            for (std::size_t c : model.children(v)) {
                if (c != oi && !model.reaches(c, oi)) continue;
                path.push_back(c);
                const bool hit = dfs(c, admissible_hits + (c != oi && admissible[c] ? 1 : 0));
                path.pop_back();
                if (hit) return true;
            }
            return false;
        };
        verdict.fair = !dfs(si, 0);
        return verdict;
    }

    // Exhaustive mode: every superset of the admissible set within
    // V - {S, O}.
    std::vector<std::size_t> rest;
    std::vector<bool> is_admissible(schema.size(), false);
    for (const std::string& a : app.admissible) is_admissible[schema.require(a)] = true;
    for (std::size_t v = 0; v < schema.size(); ++v) {
        if (v != si && v != oi && !is_admissible[v]) rest.push_back(v);
    }
    if (rest.size() > 10) {
        throw CapacityError("exhaustive fairness check: too many non-admissible variables",
                            rest.size());
    }
    for (std::size_t mask = 0; mask < (std::size_t(1) << rest.size()); ++mask) {
        std::vector<bool> selected(schema.size(), false);
        for (std::size_t r = 0; r < rest.size(); ++r) {
            if ((mask >> r) & 1u) selected[rest[r]] = true;
        }
        std::vector<std::string> k;
        for (std::size_t v = 0; v < schema.size(); ++v) {
            if (v == si || v == oi) continue;
            if (is_admissible[v] || selected[v]) k.push_back(schema.at(v).name);
        }
        if (auto w = k_fair_witness(model, app, k, tolerance)) {
            verdict.fair = false;
            verdict.counterexample = std::move(w);
            return verdict;
        }
    }
    verdict.fair = true;
    return verdict;
}

}  // namespace fairrep
