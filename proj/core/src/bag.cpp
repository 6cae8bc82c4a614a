#include "fairrep/bag.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace fairrep {

void Bag::add(const Tuple& t, Count mult) {
    if (mult <= 0) throw ValidationError("bag add: multiplicity must be positive");
    schema_.check_tuple(t);
    rows_[t] += mult;
    total_ += mult;
}

void Bag::remove(const Tuple& t, Count mult) {
    if (mult <= 0) throw ValidationError("bag remove: multiplicity must be positive");
    auto it = rows_.find(t);
    if (it == rows_.end() || it->second < mult) {
        throw ValidationError("bag remove: not enough copies of tuple (" + schema_.render_tuple(t) + ")");
    }
    it->second -= mult;
    total_ -= mult;
    if (it->second == 0) rows_.erase(it);
}

Count Bag::multiplicity(const Tuple& t) const {
    auto it = rows_.find(t);
    return it == rows_.end() ? 0 : it->second;
}

Rat Bag::probability(const Tuple& t) const {
    if (total_ == 0) return Rat(0);
    return Rat(BigInt(multiplicity(t)), BigInt(total_));
}

bool Bag::is_set() const {
    for (const auto& [t, m] : rows_) {
        if (m != 1) return false;
    }
    return true;
}

bool Bag::operator==(const Bag& other) const {
    return schema_ == other.schema_ && rows_ == other.rows_;
}

void Mvd::check_partition(const Schema& schema) const {
    std::set<std::string> seen;
    auto take = [&](const std::vector<std::string>& part, const char* which) {
        for (const auto& name : part) {
            schema.require(name);
            if (!seen.insert(name).second) {
                throw ValidationError(std::string("mvd: attribute '") + name + "' repeated across the " +
                                      which + " partition");
            }
        }
    };
    take(z, "z");
    take(x, "x");
    take(y, "y");
    if (seen.size() != schema.size()) {
        throw ValidationError("mvd: partition does not cover all " + std::to_string(schema.size()) +
                              " schema attributes");
    }
}

namespace {

// Keeps the projected attributes in schema order regardless of the order the
// caller listed them, so output rows stay canonically sorted.
std::vector<std::size_t> ordered_indices(const Schema& schema, const std::vector<std::string>& attrs) {
    std::vector<std::size_t> idx = schema.require_all(attrs);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    if (unique.size() != idx.size()) throw ValidationError("projection: repeated attribute");
    return std::vector<std::size_t>(unique.begin(), unique.end());
}

Schema sub_schema(const Schema& schema, const std::vector<std::size_t>& idx) {
    std::vector<Attribute> attrs;
    attrs.reserve(idx.size());
    for (std::size_t i : idx) attrs.push_back(schema.at(i));
    return Schema(std::move(attrs));
}

}  // namespace

Bag project(const Bag& bag, const std::vector<std::string>& attrs) {
    const std::vector<std::size_t> idx = ordered_indices(bag.schema(), attrs);
    Bag out(sub_schema(bag.schema(), idx));
    for (const auto& [t, m] : bag.rows()) {
        Tuple p;
        p.reserve(idx.size());
        for (std::size_t i : idx) p.push_back(t[i]);
        out.add(p, m);
    }
    return out;
}

Bag select(const Bag& bag, const std::vector<std::pair<std::string, std::string>>& assignment) {
    std::vector<std::pair<std::size_t, Cat>> fixed;
    fixed.reserve(assignment.size());
    for (const auto& [name, label] : assignment) {
        const std::size_t i = bag.schema().require(name);
        fixed.emplace_back(i, bag.schema().require_category(i, label));
    }
    Bag out(bag.schema());
    for (const auto& [t, m] : bag.rows()) {
        bool match = true;
        for (const auto& [i, c] : fixed) {
            if (t[i] != c) {
                match = false;
                break;
            }
        }
        if (match) out.add(t, m);
    }
    return out;
}

Bag as_set(const Bag& bag) {
    Bag out(bag.schema());
    for (const auto& [t, m] : bag.rows()) out.add(t, 1);
    return out;
}

Bag scale(const Bag& bag, Count k) {
    if (k < 1) throw ValidationError("scale: factor must be >= 1");
    Bag out(bag.schema());
    for (const auto& [t, m] : bag.rows()) out.add(t, m * k);
    return out;
}

Bag natural_join(const Bag& left, const Bag& right) {
    if (!left.is_set() || !right.is_set()) {
        throw ValidationError("natural join requires deduplicated operands");
    }
    const Schema& ls = left.schema();
    const Schema& rs = right.schema();

    std::vector<std::pair<std::size_t, std::size_t>> shared;  // (left idx, right idx)
    std::vector<std::size_t> right_only;
    for (std::size_t j = 0; j < rs.size(); ++j) {
        if (auto li = ls.index_of(rs.at(j).name)) {
            if (ls.at(*li).domain != rs.at(j).domain) {
                throw ValidationError("natural join: incompatible domains for shared attribute '" +
                                      rs.at(j).name + "'");
            }
            shared.emplace_back(*li, j);
        } else {
            right_only.push_back(j);
        }
    }

    std::vector<Attribute> attrs = ls.attributes();
    for (std::size_t j : right_only) attrs.push_back(rs.at(j));
    Bag out(Schema(std::move(attrs)));

    // Hash right rows by their shared-attribute key.
    std::map<Tuple, std::vector<const Tuple*>> by_key;
    for (const auto& [t, m] : right.rows()) {
        Tuple key;
        key.reserve(shared.size());
        for (const auto& [li, rj] : shared) key.push_back(t[rj]);
        by_key[key].push_back(&t);
    }

    for (const auto& [t, m] : left.rows()) {
        Tuple key;
        key.reserve(shared.size());
        for (const auto& [li, rj] : shared) key.push_back(t[li]);
        auto it = by_key.find(key);
        if (it == by_key.end()) continue;
        for (const Tuple* rt : it->second) {
            Tuple joined = t;
            for (std::size_t j : right_only) joined.push_back((*rt)[j]);
            out.add(joined, 1);
        }
    }
    return out;
}

Bag align_schema(const Bag& bag, const Schema& target) {
    std::vector<std::size_t> pos;
    pos.reserve(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const std::size_t src = bag.schema().require(target.at(i).name);
        if (bag.schema().at(src).domain != target.at(i).domain) {
            throw ValidationError("align: domain mismatch for attribute '" + target.at(i).name + "'");
        }
        pos.push_back(src);
    }
    if (target.size() != bag.schema().size()) {
        throw ValidationError("align: schemas carry different attribute sets");
    }
    Bag out(target);
    for (const auto& [t, m] : bag.rows()) {
        Tuple r;
        r.reserve(pos.size());
        for (std::size_t src : pos) r.push_back(t[src]);
        out.add(r, m);
    }
    return out;
}

bool satisfies_mvd(const Bag& relation, const Mvd& mvd) {
    if (!relation.is_set()) throw ValidationError("satisfies_mvd requires a deduplicated relation");
    mvd.check_partition(relation.schema());

    std::vector<std::string> xz = mvd.x;
    xz.insert(xz.end(), mvd.z.begin(), mvd.z.end());
    std::vector<std::string> zy = mvd.z;
    zy.insert(zy.end(), mvd.y.begin(), mvd.y.end());

    const Bag joined =
        natural_join(as_set(project(relation, xz)), as_set(project(relation, zy)));
    // The relation is always contained in the join of its projections, so
    // equality reduces to a cardinality check.
    return joined.distinct() == relation.distinct();
}

KeyedSet to_keyed_set(const Bag& bag) {
    Count max_mult = 1;
    for (const auto& [t, m] : bag.rows()) max_mult = std::max(max_mult, m);

    std::vector<Attribute> attrs = bag.schema().attributes();
    Attribute key;
    key.name = kKeyAttribute;
    key.domain.reserve(static_cast<std::size_t>(max_mult));
    for (Count k = 1; k <= max_mult; ++k) key.domain.push_back(std::to_string(k));
    attrs.push_back(std::move(key));

    KeyedSet ks{Bag(Schema(std::move(attrs)))};
    for (const auto& [t, m] : bag.rows()) {
        Tuple keyed = t;
        keyed.push_back(0);
        for (Count k = 0; k < m; ++k) {
            keyed.back() = static_cast<Cat>(k);
            ks.relation.add(keyed, 1);
        }
    }
    return ks;
}

Bag from_keyed_set(const KeyedSet& ks) {
    const Schema& s = ks.relation.schema();
    if (s.size() == 0 || s.at(s.size() - 1).name != kKeyAttribute) {
        throw ValidationError("from_keyed_set: relation lacks the synthetic key attribute");
    }
    std::vector<Attribute> attrs(s.attributes().begin(), s.attributes().end() - 1);
    Bag out((Schema(std::move(attrs))));
    for (const auto& [t, m] : ks.relation.rows()) {
        Tuple base(t.begin(), t.end() - 1);
        out.add(base, m);
    }
    return out;
}

Mvd keyed_mvd(const Mvd& base) {
    Mvd m = base;
    m.x.push_back(kKeyAttribute);
    return m;
}

Bag bag_minus(const Bag& base, const Bag& sub) {
    Bag out = base;
    for (const auto& [t, m] : sub.rows()) out.remove(t, m);
    return out;
}

Bag bag_plus(const Bag& base, const Bag& add) {
    Bag out = base;
    for (const auto& [t, m] : add.rows()) out.add(t, m);
    return out;
}

void split_difference(const Bag& before, const Bag& after, Bag& inserted, Bag& deleted) {
    if (!(before.schema() == after.schema())) {
        throw ValidationError("split_difference: schema mismatch");
    }
    inserted = Bag(before.schema());
    deleted = Bag(before.schema());
    for (const auto& [t, mult] : after.rows()) {
        const Count gained = mult - before.multiplicity(t);
        if (gained > 0) inserted.add(t, gained);
    }
    for (const auto& [t, mult] : before.rows()) {
        const Count lost = mult - after.multiplicity(t);
        if (lost > 0) deleted.add(t, lost);
    }
}

Rat l1_distance(const Bag& a, const Bag& b) {
    if (!(a.schema() == b.schema())) throw ValidationError("l1_distance: schema mismatch");
    Rat sum(0);
    for (const auto& [t, m] : a.rows()) {
        sum += rat_abs(a.probability(t) - b.probability(t));
    }
    for (const auto& [t, m] : b.rows()) {
        if (a.multiplicity(t) == 0) sum += b.probability(t);
    }
    return sum;
}

}  // namespace fairrep
