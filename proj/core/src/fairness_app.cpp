#include "fairrep/fairness_app.hpp"

#include "fairrep/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fairrep {

void FairnessApplication::validate() const {
    if (protected_attr.empty()) throw ValidationError("roles: 'protected' is required");
    if (outcome.empty()) throw ValidationError("roles: 'outcome' is required");
    std::set<std::string> seen{protected_attr, outcome};
    if (seen.size() != 2) throw ValidationError("roles: protected attribute and outcome coincide");
    if (label && !seen.insert(*label).second) {
        throw ValidationError("roles: label column reuses another role");
    }
    for (const auto* part : {&admissible, &inadmissible}) {
        for (const std::string& name : *part) {
            if (!seen.insert(name).second) {
                throw ValidationError("roles: attribute '" + name + "' assigned two roles");
            }
        }
    }
}

void FairnessApplication::validate_partition(const Schema& schema) const {
    validate();
    std::set<std::string> covered{protected_attr, outcome};
    if (label) covered.insert(*label);
    for (const auto* part : {&admissible, &inadmissible}) {
        for (const std::string& name : *part) {
            schema.require(name);
            covered.insert(name);
        }
    }
    schema.require(protected_attr);
    schema.require(outcome);
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (!covered.count(schema.at(i).name)) {
            throw ValidationError("roles: variable '" + schema.at(i).name +
                                  "' is neither admissible nor inadmissible");
        }
    }
}

FairnessApplication app_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("roles: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("roles: expected a json object");

    FairnessApplication app;
    auto required_string = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_string()) {
            throw ValidationError(std::string("roles: '") + key + "' must be a string");
        }
        return doc[key].get<std::string>();
    };
    auto optional_string = [&](const char* key) -> std::optional<std::string> {
        if (!doc.contains(key)) return std::nullopt;
        if (!doc[key].is_string()) {
            throw ValidationError(std::string("roles: '") + key + "' must be a string");
        }
        return doc[key].get<std::string>();
    };
    auto name_list = [&](const char* key) {
        std::vector<std::string> names;
        if (!doc.contains(key)) return names;
        if (!doc[key].is_array()) {
            throw ValidationError(std::string("roles: '") + key + "' must be a list of names");
        }
        for (const auto& v : doc[key]) {
            if (!v.is_string()) {
                throw ValidationError(std::string("roles: '") + key + "' must hold strings");
            }
            names.push_back(v.get<std::string>());
        }
        return names;
    };

    app.protected_attr = required_string("protected");
    // Data-level audits often carry a single recorded-outcome column that is
    // also the training label; accept "label" alone and audit that column.
    app.outcome = doc.contains("outcome") ? required_string("outcome") : required_string("label");
    app.label = optional_string("label");
    if (app.label && *app.label == app.outcome) app.label = std::nullopt;
    app.admissible = name_list("admissible");
    app.inadmissible = name_list("inadmissible");
    app.protected_value = optional_string("protected_value");
    app.positive_label = optional_string("positive_label");
    app.validate();
    return app;
}

FairnessApplication app_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open roles file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return app_from_json(buf.str());
}

}  // namespace fairrep
