#include "fairrep/audit.hpp"

#include "fairrep/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace fairrep {

namespace {

using nlohmann::json;

Cat resolve_category(const Schema& schema, std::size_t idx,
                     const std::optional<std::string>& declared, const char* role) {
    const Attribute& attr = schema.at(idx);
    if (declared) return schema.require_category(idx, *declared);
    if (attr.domain.size() == 2) {
        for (Cat c = 0; c < 2; ++c) {
            if (attr.domain[c] == "1") return c;
        }
    }
    throw ValidationError(std::string(role) + " column '" + attr.name +
                          "' is not 0/1 coded; name the audited category in the roles");
}

Tuple pick(const Tuple& row, const std::vector<std::size_t>& idx) {
    Tuple out;
    out.reserve(idx.size());
    for (const std::size_t i : idx) out.push_back(row[i]);
    return out;
}

std::string render_set(const std::vector<std::string>& names) {
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out + "}";
}

std::string render_ci(const CiStatement& ci) {
    return render_set(ci.x) + " _||_ " + render_set(ci.y) + " | " + render_set(ci.z);
}

// Attributes from `pool` that appear in `members`, in schema order. Keeps
// every rendered statement stable regardless of how roles were listed.
std::vector<std::string> in_schema_order(const Schema& schema,
                                         const std::set<std::string>& members) {
    std::vector<std::string> out;
    for (const auto& attr : schema.attributes()) {
        if (members.count(attr.name)) out.push_back(attr.name);
    }
    return out;
}

// Shared tally for the conditional gap metrics. `den`/`num` see only rows
// passing the label filter; `mass` sees every row so stratum weights stay
// plain context probabilities.
struct RateCell {
    Count mass = 0;
    std::array<Count, 2> den{{0, 0}};  // [reference, protected]
    std::array<Count, 2> num{{0, 0}};
};

ConditionalMetric gap_metric(const Bag& bag, const GroupCoding& coding, std::string name,
                             bool outcome_positive, std::optional<bool> label_filter,
                             const std::vector<std::string>& context) {
    const Schema& schema = bag.schema();
    const auto ctx = schema.require_all(context);
    if (label_filter && !coding.label_index) {
        throw ValidationError("metric " + name + " needs a label column");
    }

    ConditionalMetric metric;
    metric.name = std::move(name);
    metric.context = context;

    std::map<Tuple, RateCell> cells;
    for (const auto& [row, m] : bag.rows()) {
        RateCell& cell = cells[pick(row, ctx)];
        cell.mass += m;
        if (label_filter &&
            (row[*coding.label_index] == coding.positive_label) != *label_filter) {
            continue;
        }
        const int g = row[coding.protected_index] == coding.protected_category ? 1 : 0;
        cell.den[g] += m;
        if ((row[coding.outcome_index] == coding.positive_outcome) == outcome_positive) {
            cell.num[g] += m;
        }
    }

    Count usable_mass = 0;
    for (const auto& [key, cell] : cells) {
        if (cell.den[0] > 0 && cell.den[1] > 0) usable_mass += cell.mass;
    }

    Rat value{0};
    for (const auto& [key, cell] : cells) {
        if (cell.den[0] == 0 || cell.den[1] == 0) {
            metric.skipped.push_back(key);
            continue;
        }
        StratumGap stratum;
        stratum.context = key;
        stratum.weight = Rat{BigInt(cell.mass), BigInt(usable_mass)};
        stratum.rate_protected = Rat{BigInt(cell.num[1]), BigInt(cell.den[1])};
        stratum.rate_reference = Rat{BigInt(cell.num[0]), BigInt(cell.den[0])};
        stratum.gap = stratum.rate_protected - stratum.rate_reference;
        stratum.support = cell.den[0] + cell.den[1];
        metric.support += stratum.support;
        value += stratum.weight * stratum.gap;
        metric.strata.push_back(std::move(stratum));
    }
    if (!metric.strata.empty()) metric.value = value;
    return metric;
}

json context_json(const Schema& schema, const std::vector<std::string>& names,
                  const Tuple& values) {
    json out = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::size_t idx = schema.require(names[i]);
        out[names[i]] = schema.at(idx).domain[values[i]];
    }
    return out;
}

json rat_json(const Rat& r) {
    return json{{"exact", rat_to_string(r)}, {"approx", to_double(r)}};
}

std::string context_text(const Schema& schema, const std::vector<std::string>& names,
                         const Tuple& values) {
    if (names.empty()) return "(all)";
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ",";
        const std::size_t idx = schema.require(names[i]);
        out += names[i] + "=" + schema.at(idx).domain[values[i]];
    }
    return out;
}

std::string approx_text(const Rat& r) {
    std::ostringstream out;
    out << std::setprecision(6) << std::fixed << to_double(r);
    return out.str();
}

// Left-aligned fixed-width table; the last column is emitted unpadded.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += "  ";
            line += row[i];
            if (i + 1 < row.size()) line.append(widths[i] - row[i].size(), ' ');
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace

GroupCoding resolve_coding(const Schema& schema, const FairnessApplication& app) {
    app.validate();
    GroupCoding coding;
    coding.protected_index = schema.require(app.protected_attr);
    coding.protected_category =
        resolve_category(schema, coding.protected_index, app.protected_value, "protected");
    coding.outcome_index = schema.require(app.outcome);
    coding.positive_outcome =
        resolve_category(schema, coding.outcome_index, app.positive_label, "outcome");
    if (app.label && *app.label != app.outcome) {
        coding.label_index = schema.require(*app.label);
        // positive_label names a category of the outcome column; carry it
        // over to the label column only when it exists there too.
        std::optional<std::string> declared = app.positive_label;
        if (declared) {
            const auto& domain = schema.at(*coding.label_index).domain;
            if (std::find(domain.begin(), domain.end(), *declared) == domain.end()) {
                declared.reset();
            }
        }
        coding.positive_label =
            resolve_category(schema, *coding.label_index, declared, "label");
    }
    return coding;
}

Rat demographic_parity(const Bag& bag, const GroupCoding& coding) {
    Count positive[2] = {0, 0};
    Count total[2] = {0, 0};
    for (const auto& [row, m] : bag.rows()) {
        const int g = row[coding.protected_index] == coding.protected_category ? 1 : 0;
        total[g] += m;
        if (row[coding.outcome_index] == coding.positive_outcome) positive[g] += m;
    }
    if (total[1] == 0) throw ValidationError("demographic parity: protected group has no rows");
    if (total[0] == 0) throw ValidationError("demographic parity: reference group has no rows");
    return Rat{BigInt(positive[1]), BigInt(total[1])} - Rat{BigInt(positive[0]), BigInt(total[0])};
}

Rat demographic_parity(const Bag& bag, const FairnessApplication& app) {
    return demographic_parity(bag, resolve_coding(bag.schema(), app));
}

std::vector<ConditionalMetric> conditional_metrics(const Bag& bag, const GroupCoding& coding,
                                                   const std::vector<std::string>& context) {
    const bool labeled = coding.label_index.has_value();
    std::vector<ConditionalMetric> rows;
    if (labeled) {
        rows.push_back(gap_metric(bag, coding, "TPB", true, true, {}));
        rows.push_back(gap_metric(bag, coding, "TNB", false, false, {}));
    }
    rows.push_back(gap_metric(bag, coding, "CDP", true, std::nullopt, context));
    if (labeled) {
        rows.push_back(gap_metric(bag, coding, "CTPB", true, true, context));
        rows.push_back(gap_metric(bag, coding, "CTNB", false, false, context));
    }
    return rows;
}

RodReport rod(const Bag& bag, const GroupCoding& coding,
              const std::vector<std::string>& context) {
    const Schema& schema = bag.schema();
    const auto ctx = schema.require_all(context);

    RodReport report;
    report.context = context;

    std::map<Tuple, std::array<Count, 4>> cells;
    for (const auto& [row, m] : bag.rows()) {
        const int g = row[coding.protected_index] == coding.protected_category ? 1 : 0;
        const int o = row[coding.outcome_index] == coding.positive_outcome ? 1 : 0;
        cells[pick(row, ctx)][static_cast<std::size_t>(g * 2 + o)] += m;
    }

    Rat mh_num{0};
    Rat mh_den{0};
    Rat odds_sum{0};
    for (const auto& [key, raw] : cells) {
        RodStratum stratum;
        stratum.context = key;
        stratum.cells = raw;
        stratum.support = raw[0] + raw[1] + raw[2] + raw[3];
        stratum.corrected = raw[0] == 0 || raw[1] == 0 || raw[2] == 0 || raw[3] == 0;

        std::array<Rat, 4> v;
        for (std::size_t i = 0; i < 4; ++i) {
            v[i] = stratum.corrected ? Rat{BigInt(2 * raw[i] + 1), BigInt(2)}
                                     : Rat{BigInt(raw[i]), BigInt(1)};
        }
        // v = [ref&neg, ref&pos, prot&neg, prot&pos]
        stratum.odds = (v[1] * v[2]) / (v[0] * v[3]);
        const Rat total = v[0] + v[1] + v[2] + v[3];
        mh_num += v[1] * v[2] / total;
        mh_den += v[0] * v[3] / total;
        odds_sum += stratum.odds;
        report.any_corrected = report.any_corrected || stratum.corrected;
        report.strata.push_back(std::move(stratum));
    }

    if (!report.strata.empty()) {
        report.pooled = mh_num / mh_den;
        report.mean = odds_sum / Rat{BigInt(report.strata.size()), BigInt(1)};
        const Rat& pooled = *report.pooled;
        const Rat closest = pooled < 1 ? pooled : Rat{1} / pooled;
        Rat normalized = rat_abs(Rat{1} - closest);
        if (normalized > 1) normalized = Rat{1};
        report.normalized = normalized;
    }
    return report;
}

Certificate certify_fair_training(const Bag& bag, const FairnessApplication& app,
                                  const std::vector<std::string>& training_attrs,
                                  const Rat& tolerance) {
    const Schema& schema = bag.schema();
    app.validate_partition(schema);
    if (tolerance < 0) throw ValidationError("certificate tolerance must be non-negative");

    const std::string target = app.label.value_or(app.outcome);
    std::set<std::string> train;
    for (const std::string& name : training_attrs) {
        schema.require(name);
        if (name == target) {
            throw ValidationError("training attributes must not include the label '" + target + "'");
        }
        if (!train.insert(name).second) {
            throw ValidationError("duplicate training attribute '" + name + "'");
        }
    }

    std::set<std::string> inadmissible(app.inadmissible.begin(), app.inadmissible.end());
    inadmissible.insert(app.protected_attr);
    const std::set<std::string> admissible(app.admissible.begin(), app.admissible.end());

    auto intersect = [&](const std::set<std::string>& pool) {
        std::set<std::string> both;
        for (const std::string& name : train) {
            if (pool.count(name)) both.insert(name);
        }
        return both;
    };

    Certificate cert;

    CiStatement a;
    a.x = {target};
    a.y = in_schema_order(schema, intersect(inadmissible));
    a.z = in_schema_order(schema, intersect(admissible));
    cert.statement_a = render_ci(a);
    if (a.y.empty()) {
        cert.vacuous_a = true;
        cert.condition_a = true;
        cert.gap_a = Rat{0};
    } else {
        cert.gap_a = ci_gap(bag, a);
        cert.condition_a = cert.gap_a <= tolerance;
    }

    CiStatement b;
    b.x = {target};
    b.y = in_schema_order(schema, inadmissible);
    b.z = in_schema_order(schema, admissible);
    cert.statement_b = render_ci(b);
    cert.covers_admissible =
        std::all_of(admissible.begin(), admissible.end(),
                    [&](const std::string& name) { return train.count(name) > 0; });
    cert.b_saturated = b.saturated(schema);
    cert.gap_b = ci_gap(bag, b);
    cert.condition_b = cert.covers_admissible && cert.b_saturated && cert.gap_b <= tolerance;

    cert.certified = cert.condition_a || cert.condition_b;
    return cert;
}

GeneralizationReport generalization_check(const Bag& train, const Bag& test,
                                          const FairnessApplication& app,
                                          const Rat& tolerance) {
    if (!(train.schema() == test.schema())) {
        throw ValidationError("train and test bags must share a schema");
    }
    const Schema& schema = train.schema();
    app.validate_partition(schema);
    if (tolerance < 0) throw ValidationError("tolerance must be non-negative");

    std::set<std::string> inadmissible(app.inadmissible.begin(), app.inadmissible.end());
    inadmissible.insert(app.protected_attr);

    GeneralizationReport report;
    report.statement.x = {app.label.value_or(app.outcome)};
    report.statement.y = in_schema_order(schema, inadmissible);
    report.statement.z = app.admissible;
    report.train_gap = ci_gap(train, report.statement);
    report.test_gap = ci_gap(test, report.statement);
    report.train_holds = report.train_gap <= tolerance;
    report.test_holds = report.test_gap <= tolerance;

    const auto si = schema.require_all(report.statement.y);
    const auto ai = schema.require_all(report.statement.z);

    struct Side {
        Count total = 0;
        std::map<Tuple, Count> cells;
    };
    auto tally = [&](const Bag& bag) {
        std::map<Tuple, Side> sides;
        for (const auto& [row, m] : bag.rows()) {
            Side& side = sides[pick(row, ai)];
            side.total += m;
            side.cells[pick(row, si)] += m;
        }
        return sides;
    };
    const auto train_sides = tally(train);
    const auto test_sides = tally(test);

    Rat max_gap{0};
    for (const auto& [context, train_side] : train_sides) {
        const auto match = test_sides.find(context);
        if (match == test_sides.end()) {
            report.train_only.push_back(context);
            continue;
        }
        const Side& test_side = match->second;
        std::set<Tuple> values;
        for (const auto& [value, count] : train_side.cells) values.insert(value);
        for (const auto& [value, count] : test_side.cells) values.insert(value);
        for (const Tuple& value : values) {
            auto conditional = [&](const Side& side) {
                const auto cell = side.cells.find(value);
                const Count count = cell == side.cells.end() ? 0 : cell->second;
                return Rat{BigInt(count), BigInt(side.total)};
            };
            const Rat gap = rat_abs(conditional(test_side) - conditional(train_side));
            if (gap > max_gap) max_gap = gap;
        }
    }
    for (const auto& [context, side] : test_sides) {
        if (!train_sides.count(context)) report.test_only.push_back(context);
    }
    report.max_conditional_gap = max_gap;
    report.implication_active =
        report.train_holds && max_gap == 0 && report.test_only.empty();
    return report;
}

AuditReport audit_bag(const Bag& bag, const FairnessApplication& app,
                      const std::vector<std::string>& context) {
    const GroupCoding coding = resolve_coding(bag.schema(), app);
    AuditReport report;
    report.dp = demographic_parity(bag, coding);
    report.conditionals = conditional_metrics(bag, coding, context);
    report.odds = rod(bag, coding, context);
    return report;
}

std::string report_to_json(const AuditReport& report, const Schema& schema) {
    json doc;
    doc["demographic_parity"] = rat_json(report.dp);

    json metrics = json::array();
    for (const ConditionalMetric& metric : report.conditionals) {
        json entry;
        entry["name"] = metric.name;
        entry["context"] = metric.context;
        entry["value"] = metric.value ? rat_json(*metric.value) : json(nullptr);
        entry["support"] = metric.support;
        json strata = json::array();
        for (const StratumGap& stratum : metric.strata) {
            strata.push_back(json{
                {"context", context_json(schema, metric.context, stratum.context)},
                {"weight", rat_json(stratum.weight)},
                {"rate_protected", rat_json(stratum.rate_protected)},
                {"rate_reference", rat_json(stratum.rate_reference)},
                {"gap", rat_json(stratum.gap)},
                {"support", stratum.support},
            });
        }
        entry["strata"] = strata;
        json skipped = json::array();
        for (const Tuple& context : metric.skipped) {
            skipped.push_back(context_json(schema, metric.context, context));
        }
        entry["skipped"] = skipped;
        metrics.push_back(entry);
    }
    doc["conditional_metrics"] = metrics;

    json odds;
    odds["context"] = report.odds.context;
    json strata = json::array();
    for (const RodStratum& stratum : report.odds.strata) {
        strata.push_back(json{
            {"context", context_json(schema, report.odds.context, stratum.context)},
            {"cells",
             json{{"reference_negative", stratum.cells[0]},
                  {"reference_positive", stratum.cells[1]},
                  {"protected_negative", stratum.cells[2]},
                  {"protected_positive", stratum.cells[3]}}},
            {"odds_ratio", rat_json(stratum.odds)},
            {"corrected", stratum.corrected},
            {"support", stratum.support},
        });
    }
    odds["strata"] = strata;
    odds["pooled"] = report.odds.pooled ? rat_json(*report.odds.pooled) : json(nullptr);
    odds["mean"] = report.odds.mean ? rat_json(*report.odds.mean) : json(nullptr);
    odds["normalized"] =
        report.odds.normalized ? rat_json(*report.odds.normalized) : json(nullptr);
    odds["any_corrected"] = report.odds.any_corrected;
    doc["odds_ratio"] = odds;

    return doc.dump(2);
}

std::string report_to_text(const AuditReport& report, const Schema& schema) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"metric", "value", "approx", "strata", "skipped", "support"});
    rows.push_back({"DP", rat_to_string(report.dp), approx_text(report.dp), "-", "-", "-"});
    for (const ConditionalMetric& metric : report.conditionals) {
        rows.push_back({
            metric.name,
            metric.value ? rat_to_string(*metric.value) : "undefined",
            metric.value ? approx_text(*metric.value) : "-",
            std::to_string(metric.strata.size()),
            std::to_string(metric.skipped.size()),
            std::to_string(metric.support),
        });
    }
    std::string out = render_table(rows);

    out += "\nodds ratios over " + render_set(report.odds.context) + "\n";
    rows.clear();
    rows.push_back({"context", "odds", "approx", "support", "corrected"});
    for (const RodStratum& stratum : report.odds.strata) {
        rows.push_back({
            context_text(schema, report.odds.context, stratum.context),
            rat_to_string(stratum.odds),
            approx_text(stratum.odds),
            std::to_string(stratum.support),
            stratum.corrected ? "yes" : "no",
        });
    }
    auto summary = [&rows](const char* name, const std::optional<Rat>& value) {
        rows.push_back({name, value ? rat_to_string(*value) : "undefined",
                        value ? approx_text(*value) : "-", "-", "-"});
    };
    summary("pooled", report.odds.pooled);
    summary("mean", report.odds.mean);
    summary("normalized", report.odds.normalized);
    out += render_table(rows);
    return out;
}

}  // namespace fairrep
