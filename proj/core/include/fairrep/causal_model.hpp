#pragma once

// Discrete causal models: a DAG over categorical variables with one CPT per
// node. Supports d-separation, exact joint and interventional distributions
// (truncated factorization and the extended adjustment formula), and the
// interventional fairness definitions built on them.

#include "fairrep/bag.hpp"
#include "fairrep/fairness_app.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairrep {

using Assignment = std::vector<std::pair<std::string, std::string>>;

// A finitely-supported exact distribution over the tuples of a schema.
// Unlike Bag, weights are rationals; zero-weight cells are not stored.
struct Dist {
    Schema schema;
    std::map<Tuple, Rat> weights;

    explicit Dist(Schema s) : schema(std::move(s)) {}

    Rat total() const;
    Dist marginal(const std::vector<std::string>& attrs) const;
};

// Probability of the conjunctive event given by the assignment.
Rat event_probability(const Dist& dist, const Assignment& event);

// Pr(event | given). A zero-probability or self-contradictory condition
// yields 0 rather than an error; interventional formulas sum over contexts
// and such terms contribute nothing.
Rat conditional_probability(const Dist& dist, const Assignment& event, const Assignment& given);

struct CptRow {
    Tuple given;                    // parent values, in parent-list order
    std::vector<Rat> distribution;  // over the variable's domain
};

struct ModelNode {
    Attribute variable;
    std::vector<std::string> parents;
    std::vector<CptRow> rows;
};

inline constexpr std::size_t kDefaultJointCap = 1u << 20;

class CausalModel {
public:
    // Validates acyclicity, parent references, and that every node's CPT has
    // exactly one row per parent assignment, each summing to 1.
    explicit CausalModel(std::vector<ModelNode> nodes);

    const Schema& schema() const { return schema_; }
    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_[v]; }
    const std::vector<std::size_t>& children(std::size_t v) const { return children_[v]; }
    const std::vector<std::size_t>& topological_order() const { return topo_; }

    // Directed path from -> to (strict: false when from == to).
    bool reaches(std::size_t from, std::size_t to) const;

    // Pr(V_v = full[v] | parents of v drawn from full).
    const Rat& cpt_entry(std::size_t v, const Tuple& full) const;

    bool d_separated(const std::vector<std::string>& x, const std::vector<std::string>& y,
                     const std::vector<std::string>& z) const;

    Dist joint_distribution(std::size_t cap = kDefaultJointCap) const;

    // Truncated factorization: drop the intervened factors, clamp values.
    // The result ranges over the remaining variables.
    Dist intervene(const Assignment& fixed, std::size_t cap = kDefaultJointCap) const;

    // The adjustment route to the same quantity: sum over the union of the
    // intervened variables' parents with parent-compensation factors, all
    // read off the observational joint. Interventions must be ordered so
    // each is a non-descendant of the next. Agrees with intervene() wherever
    // the conditionals are supported; kept as an independent computation so
    // the two can be checked against each other.
    Dist extended_adjustment(const std::string& y, const Assignment& interventions,
                             std::size_t cap = kDefaultJointCap) const;

private:
    Schema schema_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
    // cpt_[v][parent-assignment index (mixed radix) * |Dom(v)| + value]
    std::vector<std::vector<Rat>> cpt_;
    std::vector<std::vector<bool>> reach_;  // transitive closure

    std::size_t parent_index(std::size_t v, const Tuple& full) const;
};

struct KFairWitness {
    std::vector<std::string> k;  // the intervened set beyond the protected attribute
    Assignment context;          // its values
    std::string outcome_value;
    Rat probability_s0;
    Rat probability_s1;
};

// |Pr(O=o | do(S=s1), do(K=k)) - Pr(O=o | do(S=s0), do(K=k))| <= tolerance
// for every context k and outcome value o. The protected attribute must be
// binary. Returns the first offending context otherwise.
std::optional<KFairWitness> k_fair_witness(const CausalModel& model, const FairnessApplication& app,
                                           const std::vector<std::string>& k,
                                           const Rat& tolerance = Rat(0));
bool k_fair(const CausalModel& model, const FairnessApplication& app,
            const std::vector<std::string>& k, const Rat& tolerance = Rat(0));

enum class FairnessMode {
    kExhaustive,     // check k_fair for every superset of the admissible set
    kPathCriterion,  // every directed path from S to O meets an admissible node
};

struct FairnessVerdict {
    bool fair = true;
    FairnessMode mode = FairnessMode::kExhaustive;
    std::optional<KFairWitness> counterexample;  // exhaustive mode
    std::vector<std::string> violating_path;     // path-criterion mode
};

FairnessVerdict justifiably_fair(const CausalModel& model, const FairnessApplication& app,
                                 FairnessMode mode, const Rat& tolerance = Rat(0));

// Model file loading; see causal_model_io.cpp for the JSON shape.
CausalModel model_from_json(const std::string& text);
CausalModel model_from_file(const std::string& path);

}  // namespace fairrep
