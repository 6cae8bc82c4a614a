#include "fairrep/causal_model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fairrep {

namespace {

using json = nlohmann::json;

// Probabilities must stay exact: rational strings ("2/5", "1") or json
// integers. Floating-point literals are rejected outright.
Rat probability_value(const json& v, const std::string& where) {
    if (v.is_number_integer()) return Rat(v.get<long long>());
    if (v.is_number_float()) {
        throw ValidationError(where + ": floating-point probabilities are rejected; " +
                              "write them as rational strings like \"3/10\"");
    }
    if (v.is_string()) {
        if (auto r = rat_from_string(v.get<std::string>())) return *r;
        throw ValidationError(where + ": '" + v.get<std::string>() + "' is not a rational");
    }
    throw ValidationError(where + ": probabilities must be rational strings or integers");
}

std::string render_given(const std::vector<std::string>& parents, const json& given) {
    std::string out = "(";
    bool first = true;
    for (const std::string& p : parents) {
        if (!first) out += ", ";
        first = false;
        out += p + "=" + (given.contains(p) && given[p].is_string() ? given[p].get<std::string>()
                                                                    : std::string("?"));
    }
    return out + ")";
}

}  // namespace

CausalModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array()) {
        throw ValidationError("model: expected {\"variables\": [...]}");
    }

    // First pass collects names and domains so that parent value labels can
    // be resolved in the second pass regardless of declaration order.
    std::vector<Attribute> attrs;
    for (const json& entry : doc["variables"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
            throw ValidationError("model: every variable needs a name");
        }
        Attribute attr;
        attr.name = entry["name"].get<std::string>();
        if (!entry.contains("domain") || !entry["domain"].is_array()) {
            throw ValidationError("model: variable '" + attr.name + "': missing domain list");
        }
        for (const json& label : entry["domain"]) {
            if (!label.is_string()) {
                throw ValidationError("model: variable '" + attr.name +
                                      "': domain labels must be strings");
            }
            attr.domain.push_back(label.get<std::string>());
        }
        attrs.push_back(std::move(attr));
    }
    const Schema schema(attrs);

    std::vector<ModelNode> nodes;
    std::size_t entry_idx = 0;
    for (const json& entry : doc["variables"]) {
        ModelNode node;
        node.variable = attrs[entry_idx++];
        const std::string where = "model: variable '" + node.variable.name + "'";

        if (entry.contains("parents")) {
            if (!entry["parents"].is_array()) throw ValidationError(where + ": parents must be a list");
            for (const json& p : entry["parents"]) {
                if (!p.is_string()) throw ValidationError(where + ": parent names must be strings");
                node.parents.push_back(p.get<std::string>());
            }
        }

        if (!entry.contains("cpt") || !entry["cpt"].is_array()) {
            throw ValidationError(where + ": missing cpt row list");
        }
        for (const json& row : entry["cpt"]) {
            if (!row.is_object() || !row.contains("distribution") || !row["distribution"].is_object()) {
                throw ValidationError(where + ": each cpt row needs a distribution object");
            }
            const json given = row.contains("given") ? row["given"] : json::object();
            if (!given.is_object()) throw ValidationError(where + ": 'given' must be an object");
            const std::string row_where = where + ", row given " + render_given(node.parents, given);

            if (given.size() != node.parents.size()) {
                throw ValidationError(row_where + ": must assign exactly the declared parents");
            }
            CptRow cpt_row;
            for (const std::string& p : node.parents) {
                if (!given.contains(p) || !given.at(p).is_string()) {
                    throw ValidationError(row_where + ": missing parent value for '" + p + "'");
                }
                const std::size_t pi = schema.require(p);
                cpt_row.given.push_back(schema.require_category(pi, given.at(p).get<std::string>()));
            }

            const json& dist = row["distribution"];
            if (dist.size() != node.variable.domain.size()) {
                throw ValidationError(row_where + ": distribution must cover the whole domain");
            }
            for (const std::string& label : node.variable.domain) {
                if (!dist.contains(label)) {
                    throw ValidationError(row_where + ": missing probability for '" + label + "'");
                }
                cpt_row.distribution.push_back(probability_value(dist.at(label), row_where));
            }
            node.rows.push_back(std::move(cpt_row));
        }
        nodes.push_back(std::move(node));
    }
    return CausalModel(std::move(nodes));
}

CausalModel model_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace fairrep
