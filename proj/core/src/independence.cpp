#include "fairrep/independence.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace fairrep {

namespace {

using json = nlohmann::json;

Tuple pick(const Tuple& t, const std::vector<std::size_t>& idx) {
    Tuple out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(t[i]);
    return out;
}

Tuple concat(const Tuple& a, const Tuple& b) {
    Tuple out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Count tables for one CI statement, grouped so the supported cells of each
// z-stratum can be enumerated: the statement can fail on a cell whose count
// is zero but whose x- and y-margins are both positive, so iterating stored
// rows alone is not enough.
struct CiTables {
    std::map<Tuple, Count> z;
    std::map<Tuple, Count> xz;
    std::map<Tuple, Count> yz;
    std::map<Tuple, Count> xyz;
    std::map<Tuple, std::set<Tuple>> xs_by_z;
    std::map<Tuple, std::set<Tuple>> ys_by_z;
};

CiTables build_tables(const Bag& bag, const CiStatement& ci) {
    const Schema& schema = bag.schema();
    const auto xi = schema.require_all(ci.x);
    const auto yi = schema.require_all(ci.y);
    const auto zi = schema.require_all(ci.z);

    CiTables t;
    for (const auto& [row, m] : bag.rows()) {
        const Tuple xv = pick(row, xi);
        const Tuple yv = pick(row, yi);
        const Tuple zv = pick(row, zi);
        t.z[zv] += m;
        t.xz[concat(xv, zv)] += m;
        t.yz[concat(yv, zv)] += m;
        t.xyz[concat(concat(xv, yv), zv)] += m;
        t.xs_by_z[zv].insert(xv);
        t.ys_by_z[zv].insert(yv);
    }
    return t;
}

// Maximum conditional-probability gap; stops early once `stop_above` is
// exceeded when provided.
Rat max_ci_gap(const Bag& bag, const CiStatement& ci, const Rat* stop_above) {
    ci.validate(bag.schema());
    if (ci.x.empty() || ci.y.empty() || bag.total() == 0) return Rat(0);

    const CiTables t = build_tables(bag, ci);
    Rat worst(0);
    for (const auto& [zv, nz] : t.z) {
        const auto& xs = t.xs_by_z.at(zv);
        const auto& ys = t.ys_by_z.at(zv);
        for (const Tuple& xv : xs) {
            const Count nxz = t.xz.at(concat(xv, zv));
            const Rat px_given_z{BigInt(nxz), BigInt(nz)};
            for (const Tuple& yv : ys) {
                const Count nyz = t.yz.at(concat(yv, zv));
                Count nxyz = 0;
                if (auto it = t.xyz.find(concat(concat(xv, yv), zv)); it != t.xyz.end()) {
                    nxyz = it->second;
                }
                const Rat gap = rat_abs(Rat(BigInt(nxyz), BigInt(nyz)) - px_given_z);
                if (gap > worst) {
                    worst = gap;
                    if (stop_above && worst > *stop_above) return worst;
                }
            }
        }
    }
    return worst;
}

}  // namespace

void CiStatement::validate(const Schema& schema) const {
    std::set<std::string> seen;
    for (const auto* part : {&x, &y, &z}) {
        for (const auto& name : *part) {
            schema.require(name);
            if (!seen.insert(name).second) {
                throw ValidationError("ci statement: attribute '" + name + "' appears in two parts");
            }
        }
    }
}

bool CiStatement::saturated(const Schema& schema) const {
    validate(schema);
    return x.size() + y.size() + z.size() == schema.size();
}

Mvd CiStatement::as_mvd(const Schema& schema) const {
    if (!saturated(schema)) {
        throw ValidationError("only saturated ci statements induce a multivalued dependency");
    }
    return Mvd{z, x, y};
}

CiStatement ci_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ci statement: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("ci statement: expected a json object");
    CiStatement ci;
    auto read_part = [&](const char* key, std::vector<std::string>* out) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_array()) {
            throw ValidationError(std::string("ci statement: '") + key + "' must be a list of names");
        }
        for (const json& v : doc[key]) {
            if (!v.is_string()) {
                throw ValidationError(std::string("ci statement: '") + key + "' must hold strings");
            }
            out->push_back(v.get<std::string>());
        }
    };
    read_part("x", &ci.x);
    read_part("y", &ci.y);
    read_part("z", &ci.z);
    return ci;
}

std::string ci_to_json(const CiStatement& ci) {
    json doc;
    doc["x"] = ci.x;
    doc["y"] = ci.y;
    doc["z"] = ci.z;
    return doc.dump();
}

Rat ci_gap(const Bag& bag, const CiStatement& ci) {
    return max_ci_gap(bag, ci, nullptr);
}

bool holds_ci(const Bag& bag, const CiStatement& ci, const Rat& tolerance) {
    if (tolerance < 0) throw ValidationError("ci tolerance must be non-negative");
    return max_ci_gap(bag, ci, &tolerance) <= tolerance;
}

double conditional_mutual_information(const Bag& bag, const CiStatement& ci) {
    ci.validate(bag.schema());
    if (ci.x.empty() || ci.y.empty() || bag.total() == 0) return 0.0;

    const CiTables t = build_tables(bag, ci);
    const Schema& schema = bag.schema();
    const auto xi = schema.require_all(ci.x);
    const auto yi = schema.require_all(ci.y);
    const auto zi = schema.require_all(ci.z);

    // Collapse to distinct (x,y,z) cells first so each contributes once.
    double sum = 0.0;
    double compensation = 0.0;
    bool any_off = false;
    const BigInt n(bag.total());
    std::set<Tuple> seen;
    for (const auto& [row, m] : bag.rows()) {
        const Tuple xv = pick(row, xi);
        const Tuple yv = pick(row, yi);
        const Tuple zv = pick(row, zi);
        const Tuple cell = concat(concat(xv, yv), zv);
        if (!seen.insert(cell).second) continue;

        const Count nxyz = t.xyz.at(cell);
        const Count nz = t.z.at(zv);
        const Count nxz = t.xz.at(concat(xv, zv));
        const Count nyz = t.yz.at(concat(yv, zv));
        // Pr(x,y,z) Pr(z) / (Pr(x,z) Pr(y,z)) as an exact rational; a cell
        // with ratio 1 contributes exactly nothing, so the sum is 0.0 iff
        // the statement holds.
        const Rat ratio(BigInt(nxyz) * BigInt(nz), BigInt(nxz) * BigInt(nyz));
        if (ratio == 1) continue;
        any_off = true;
        const double term = to_double(Rat(BigInt(nxyz), n)) * std::log(to_double(ratio));
        const double y_term = term - compensation;
        const double fresh = sum + y_term;
        compensation = (fresh - sum) - y_term;
        sum = fresh;
    }
    if (!any_off) return 0.0;
    // The exact value is strictly positive here; keep the float result from
    // rounding through zero.
    return std::max(sum, std::numeric_limits<double>::min());
}

MarkovBoundary grow_shrink_boundary(const Bag& bag, const std::string& target, const Rat& tolerance) {
    const Schema& schema = bag.schema();
    const std::size_t ti = schema.require(target);

    std::vector<bool> in_boundary(schema.size(), false);
    auto names_of = [&](const std::vector<bool>& mask, std::size_t skip) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i] && i != skip) names.push_back(schema.at(i).name);
        }
        return names;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (i == ti || in_boundary[i]) continue;
            CiStatement test{{target}, {schema.at(i).name}, names_of(in_boundary, ti)};
            if (!holds_ci(bag, test, tolerance)) {
                in_boundary[i] = true;
                changed = true;
            }
        }
    }
    changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (!in_boundary[i]) continue;
            in_boundary[i] = false;
            CiStatement test{{target}, {schema.at(i).name}, names_of(in_boundary, ti)};
            if (holds_ci(bag, test, tolerance)) {
                changed = true;  // stays out
            } else {
                in_boundary[i] = true;
            }
        }
    }

    MarkovBoundary mb;
    mb.target = target;
    mb.boundary = names_of(in_boundary, ti);
    return mb;
}

namespace {

using Mask = std::uint32_t;

struct Triple {
    Mask x, y, z;
    auto operator<=>(const Triple&) const = default;
};

Mask mask_of(const Schema& schema, const std::vector<std::string>& names) {
    Mask m = 0;
    for (const auto& name : names) m |= Mask(1) << schema.require(name);
    return m;
}

class Closure {
public:
    Closure(const Triple& goal, std::size_t cap) : goal_(goal), cap_(cap) {}

    bool reached() const { return reached_; }

    // Inserts the triple and its symmetric twin; returns true once the goal
    // statement lands in the closure.
    bool add(Triple t) {
        if (reached_) return true;
        if (t.x == 0 || t.y == 0) return false;  // vacuously true, derives nothing
        if (t.y < t.x) std::swap(t.x, t.y);      // canonical under symmetry
        if (!known_.insert(t).second) return reached_;
        if (known_.size() > cap_) {
            throw CapacityError("graphoid closure exceeded the configured size cap", known_.size());
        }
        work_.push_back(t);
        if (matches_goal(t)) reached_ = true;
        return reached_;
    }

    bool take(Triple* t) {
        if (work_.empty()) return false;
        *t = work_.front();
        work_.pop_front();
        return true;
    }

    const std::set<Triple>& known() const { return known_; }

private:
    bool matches_goal(const Triple& t) const {
        return (t.x == goal_.x && t.y == goal_.y && t.z == goal_.z) ||
               (t.x == goal_.y && t.y == goal_.x && t.z == goal_.z);
    }

    Triple goal_;
    std::size_t cap_;
    std::set<Triple> known_;
    std::deque<Triple> work_;
    bool reached_ = false;
};

// (X indep Y | Z) and (X indep W | Z union Y) give (X indep Y union W | Z).
void contract(const Triple& a, const Triple& b, Closure* closure) {
    auto fire = [&](Mask x1, Mask y1, Mask z1, const Triple& other) {
        if (other.z == (z1 | y1) && (other.y & (x1 | y1 | z1)) == 0) {
            closure->add({x1, y1 | other.y, z1});
        }
    };
    if (a.x == b.x) {
        fire(a.x, a.y, a.z, b);
        fire(b.x, b.y, b.z, a);
    }
    if (a.x == b.y) {
        fire(a.x, a.y, a.z, {b.y, b.x, b.z});
        fire(b.y, b.x, b.z, a);
    }
    if (a.y == b.x) {
        fire(a.y, a.x, a.z, b);
        fire(b.x, b.y, b.z, {a.y, a.x, a.z});
    }
    if (a.y == b.y) {
        fire(a.y, a.x, a.z, {b.y, b.x, b.z});
        fire(b.y, b.x, b.z, {a.y, a.x, a.z});
    }
}

// (X indep Y | Z union W) and (X indep W | Z union Y) give
// (X indep Y union W | Z). Sound only under strict positivity.
void intersect(const Triple& a, const Triple& b, Closure* closure) {
    auto fire = [&](Mask x, Mask y, Mask zw, Mask w, Mask zy) {
        if ((zw & w) == w && (zy & y) == y && (zw & ~w) == (zy & ~y)) {
            closure->add({x, y | w, zw & static_cast<Mask>(~w)});
        }
    };
    auto both = [&](const Triple& p, const Triple& q) {
        if (p.x == q.x) fire(p.x, p.y, p.z, q.y, q.z);
        if (p.x == q.y) fire(p.x, p.y, p.z, q.x, q.z);
        if (p.y == q.x) fire(p.y, p.x, p.z, q.y, q.z);
        if (p.y == q.y) fire(p.y, p.x, p.z, q.x, q.z);
    };
    both(a, b);
    both(b, a);
}

}  // namespace

bool graphoid_closure_check(const Schema& schema, const std::vector<CiStatement>& premises,
                            const CiStatement& conclusion, const GraphoidOptions& options) {
    if (schema.size() > options.max_attributes) {
        throw CapacityError("graphoid closure: schema exceeds the configured attribute bound",
                            schema.size());
    }
    conclusion.validate(schema);
    if (conclusion.x.empty() || conclusion.y.empty()) return true;

    const Triple goal{mask_of(schema, conclusion.x), mask_of(schema, conclusion.y),
                      mask_of(schema, conclusion.z)};
    Closure closure(goal, options.max_closure);
    for (const CiStatement& p : premises) {
        p.validate(schema);
        if (closure.add({mask_of(schema, p.x), mask_of(schema, p.y), mask_of(schema, p.z)})) {
            return true;
        }
    }

    Triple t{};
    while (closure.take(&t)) {
        // Decomposition and weak union over every split of the y side, then
        // of the x side (statements are stored in one canonical orientation,
        // so the x side does not get revisited through a stored twin).
        for (Mask w = (t.y - 1) & t.y; w != 0; w = (w - 1) & t.y) {
            const Mask rest = t.y & static_cast<Mask>(~w);
            if (closure.add({t.x, rest, t.z})) return true;
            if (closure.add({t.x, rest, t.z | w})) return true;
        }
        for (Mask w = (t.x - 1) & t.x; w != 0; w = (w - 1) & t.x) {
            const Mask rest = t.x & static_cast<Mask>(~w);
            if (closure.add({rest, t.y, t.z})) return true;
            if (closure.add({rest, t.y, t.z | w})) return true;
        }
        // Swapping x into the conditioning side needs the uncanonical twin
        // handled too, so run pairwise rules against every known statement.
        std::vector<Triple> snapshot(closure.known().begin(), closure.known().end());
        for (const Triple& s : snapshot) {
            contract(t, s, &closure);
            if (options.assume_strict_positivity) intersect(t, s, &closure);
            if (closure.reached()) return true;
        }
    }
    return false;
}

ImpossibilityReport impossibility_check(const Bag& bag, const std::string& s, const std::string& o,
                                        const std::string& y, const Rat& tolerance) {
    if (s == o || s == y || o == y) {
        throw ValidationError("impossibility check needs three distinct attributes");
    }
    ImpossibilityReport report;
    report.s_indep_o_given_y = holds_ci(bag, {{s}, {o}, {y}}, tolerance);
    report.s_indep_y_given_o = holds_ci(bag, {{s}, {y}, {o}}, tolerance);
    report.s_indep_y = holds_ci(bag, {{s}, {y}, {}}, tolerance);
    report.violated = report.s_indep_o_given_y && report.s_indep_y_given_o && !report.s_indep_y;
    return report;
}

}  // namespace fairrep
