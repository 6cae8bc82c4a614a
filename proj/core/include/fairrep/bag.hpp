#pragma once

// Multiset relations over discrete tuples, their empirical distributions, and
// the small relational algebra the repair pipeline needs: projection,
// selection, natural join, multivalued-dependency checks, and the reduction
// between bags and keyed sets (each tuple of multiplicity m becomes m keyed
// copies with keys 1..m).

#include "fairrep/rational.hpp"
#include "fairrep/schema.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fairrep {

using Count = long long;

// Reserved attribute names. `__count` is the multiplicity column in CSV
// serialization; `__key` is the synthetic key added by to_keyed_set.
inline constexpr const char* kCountColumn = "__count";
inline constexpr const char* kKeyAttribute = "__key";

class Bag {
public:
    Bag() = default;
    explicit Bag(Schema schema) : schema_(std::move(schema)) {}

    const Schema& schema() const { return schema_; }
    const std::map<Tuple, Count>& rows() const { return rows_; }
    Count total() const { return total_; }
    bool empty() const { return rows_.empty(); }
    std::size_t distinct() const { return rows_.size(); }

    // Adds `mult` copies (validated); mult must be positive.
    void add(const Tuple& t, Count mult = 1);
    // Removes up to `mult` copies; error if the bag holds fewer.
    void remove(const Tuple& t, Count mult = 1);
    Count multiplicity(const Tuple& t) const;

    // Empirical probability count(t)/|B|; zero on an empty bag.
    Rat probability(const Tuple& t) const;

    // True when every multiplicity is exactly 1.
    bool is_set() const;

    bool operator==(const Bag& other) const;

private:
    Schema schema_;
    std::map<Tuple, Count> rows_;
    Count total_ = 0;
};

// A saturated multivalued dependency z ->> x over some schema: z, x and the
// implicit remainder y partition the attributes. Names are resolved against a
// schema at use time so the same object applies to a keyed extension.
struct Mvd {
    std::vector<std::string> z;
    std::vector<std::string> x;
    std::vector<std::string> y;

    // Validates that the three sets are disjoint and cover the schema.
    void check_partition(const Schema& schema) const;
};

struct KeyedSet {
    // Relation over the base schema plus kKeyAttribute (appended last), with
    // every multiplicity 1.
    Bag relation;
};

// Relational algebra. Multiplicities follow bag semantics unless noted.
Bag project(const Bag& bag, const std::vector<std::string>& attrs);
Bag select(const Bag& bag, const std::vector<std::pair<std::string, std::string>>& assignment);
// Set-semantics natural join on the shared attributes; both operands must be
// deduplicated. Shared attributes must agree on name and domain.
Bag natural_join(const Bag& left, const Bag& right);
// Collapse multiplicities to 1.
Bag as_set(const Bag& bag);
// Multiply every multiplicity by k (k >= 1).
Bag scale(const Bag& bag, Count k);
// Reorder columns to match `target`, which must carry the same attributes
// (by name and domain) as the bag's schema, possibly in a different order.
Bag align_schema(const Bag& bag, const Schema& target);

// relation == join of its xz- and zy-projections. Relation must be a set.
bool satisfies_mvd(const Bag& relation, const Mvd& mvd);

KeyedSet to_keyed_set(const Bag& bag);
Bag from_keyed_set(const KeyedSet& ks);

// The MVD z ->> (key, x) on the keyed extension of a bag; repairing it is
// equivalent to repairing the saturated CI (x indep y | z) on the bag itself.
Mvd keyed_mvd(const Mvd& base);

// Multiset difference helpers: every row of `sub` must be contained in `base`.
Bag bag_minus(const Bag& base, const Bag& sub);
Bag bag_plus(const Bag& base, const Bag& add);

// Splits the multiset symmetric difference of two bags over the same schema:
// rows gained by `after` land in `inserted`, rows lost in `deleted`.
void split_difference(const Bag& before, const Bag& after, Bag& inserted, Bag& deleted);

// Sum over tuples of |Pr_a(t) - Pr_b(t)| (exact; schemas must match).
Rat l1_distance(const Bag& a, const Bag& b);

}  // namespace fairrep
