#pragma once

// Role declarations binding dataset columns (or model variables) to the
// protected attribute, the outcome, and the admissible/inadmissible split.

#include "fairrep/schema.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairrep {

struct FairnessApplication {
    std::string protected_attr;
    std::string outcome;
    // Ground-truth label column, when distinct from the audited outcome.
    // Needed for true-positive/true-negative balance and for training
    // certificates; optional everywhere else.
    std::optional<std::string> label;
    std::vector<std::string> admissible;
    std::vector<std::string> inadmissible;
    // Category of the protected attribute audited as group "1" and category
    // of the outcome counted as positive. When absent, binary 0/1 coding is
    // required and "1" is used.
    std::optional<std::string> protected_value;
    std::optional<std::string> positive_label;

    // Checks the role names are distinct and the admissible/inadmissible
    // split is disjoint. Presence in a concrete schema is checked by the
    // operations that need each role.
    void validate() const;

    // Model checking needs the full partition: admissible plus inadmissible
    // must cover every variable except the protected attribute and outcome.
    void validate_partition(const Schema& schema) const;
};

// JSON shape:
//   {"protected": "...", "outcome": "...", "label": "...",
//    "admissible": [...], "inadmissible": [...],
//    "protected_value": "...", "positive_label": "..."}
// label, protected_value and positive_label are optional. When "outcome" is
// absent the "label" column doubles as the audited outcome (the usual shape
// for data-level audits).
FairnessApplication app_from_json(const std::string& text);
FairnessApplication app_from_file(const std::string& path);

}  // namespace fairrep
