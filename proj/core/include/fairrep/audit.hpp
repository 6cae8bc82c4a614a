#pragma once

// Fairness audits over discrete bags: demographic parity, the conditional
// group metrics (true-positive / true-negative balance and their stratified
// variants), a stratified odds-ratio discrimination score with
// Mantel-Haenszel pooling, an admissibility certificate for training-attribute
// choices, and a train/test generalization check. Every metric is an exact
// rational computed from counts; floats appear only when callers render.

#include "fairrep/bag.hpp"
#include "fairrep/fairness_app.hpp"
#include "fairrep/independence.hpp"
#include "fairrep/rational.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fairrep {

// How the audited columns are read as binary indicators. The protected group
// is the declared category, or "1" when the column is 0/1-coded; every other
// category counts as the reference group. The positive outcome resolves the
// same way, as does the training label when one is present as its own column.
struct GroupCoding {
    std::size_t protected_index = 0;
    Cat protected_category = 0;
    std::size_t outcome_index = 0;
    Cat positive_outcome = 0;
    std::optional<std::size_t> label_index;
    Cat positive_label = 0;  // meaningful only when label_index is set
};

GroupCoding resolve_coding(const Schema& schema, const FairnessApplication& app);

// Pr(O = positive | protected group) - Pr(O = positive | reference group).
// Throws ValidationError when either group has no rows.
Rat demographic_parity(const Bag& bag, const GroupCoding& coding);
Rat demographic_parity(const Bag& bag, const FairnessApplication& app);

struct StratumGap {
    Tuple context;      // values of the conditioning attributes, in their order
    Rat weight;         // Pr(context), renormalized over the usable strata
    Rat rate_protected; // Pr(target outcome | group, context, row filter)
    Rat rate_reference;
    Rat gap;            // rate_protected - rate_reference
    Count support = 0;  // rows entering the two conditional rates
};

struct ConditionalMetric {
    std::string name;                  // TPB, TNB, CDP, CTPB, CTNB
    std::vector<std::string> context;  // conditioning attributes; empty for TPB/TNB
    // Weighted average of the per-stratum gaps; unset when no stratum has
    // both groups represented after filtering.
    std::optional<Rat> value;
    std::vector<StratumGap> strata;
    std::vector<Tuple> skipped;  // contexts present in data but unusable
    Count support = 0;
};

// TPB/TNB plus the stratified CDP/CTPB/CTNB over `context`. The label-based
// rows (TPB, TNB, CTPB, CTNB) are produced only when the coding carries a
// label column distinct from the outcome; CDP needs no label and is always
// present. Strata where either group has an undefined conditional are
// skipped and listed, and the remaining weights are renormalized to sum to 1.
std::vector<ConditionalMetric> conditional_metrics(const Bag& bag,
                                                   const GroupCoding& coding,
                                                   const std::vector<std::string>& context);

struct RodStratum {
    Tuple context;
    // Raw 2x2 counts: [reference & negative, reference & positive,
    // protected & negative, protected & positive].
    std::array<Count, 4> cells{};
    bool corrected = false;  // continuity correction applied (some cell was 0)
    // (reference-positive * protected-negative) /
    // (reference-negative * protected-positive); > 1 means the protected
    // group is accepted less often than its odds in this stratum warrant.
    Rat odds;
    Count support = 0;
};

struct RodReport {
    std::vector<std::string> context;
    std::vector<RodStratum> strata;
    std::optional<Rat> pooled;      // Mantel-Haenszel across strata
    std::optional<Rat> mean;        // arithmetic mean of per-stratum ratios
    std::optional<Rat> normalized;  // |1 - min(pooled, 1/pooled)|, in [0, 1]
    bool any_corrected = false;
};

// Per-stratum odds ratios of the outcome against the protected attribute,
// conditioned on `context`. Strata containing a zero cell get the
// Haldane-Anscombe correction (+1/2 on all four cells) and are flagged;
// the corrected cells feed both the stratum ratio and its pooling terms.
RodReport rod(const Bag& bag, const GroupCoding& coding,
              const std::vector<std::string>& context);

struct Certificate {
    // (a): the label is independent of the inadmissible part of the training
    // attributes given their admissible part. Vacuous when no inadmissible
    // attribute (or the protected one) is trained on.
    bool condition_a = false;
    bool vacuous_a = false;
    Rat gap_a;
    std::string statement_a;
    // (b): the training attributes cover every admissible attribute and the
    // label is independent of all inadmissible attributes given the
    // admissible ones, with that statement saturated over the schema.
    bool condition_b = false;
    bool covers_admissible = false;
    bool b_saturated = false;
    Rat gap_b;
    std::string statement_b;
    bool certified = false;  // condition_a || condition_b
};

// Decides whether training on `training_attrs` is admissible for the given
// roles at `tolerance`. The protected attribute counts as inadmissible; the
// label never belongs to the training attributes.
Certificate certify_fair_training(const Bag& bag, const FairnessApplication& app,
                                  const std::vector<std::string>& training_attrs,
                                  const Rat& tolerance);

struct GeneralizationReport {
    CiStatement statement;  // label vs protected + inadmissible given admissible
    Rat train_gap;
    Rat test_gap;
    bool train_holds = false;
    bool test_holds = false;
    // Largest |Pr_test(s, i | a) - Pr_train(s, i | a)| over admissible
    // contexts supported by both bags.
    Rat max_conditional_gap;
    std::vector<Tuple> train_only;  // admissible contexts in one bag only
    std::vector<Tuple> test_only;
    // True when the train-side independence plus a zero conditional gap
    // (with no test-only contexts) force the test side to satisfy the
    // statement as well; test_holds then follows rather than being assumed.
    bool implication_active = false;
};

GeneralizationReport generalization_check(const Bag& train, const Bag& test,
                                          const FairnessApplication& app,
                                          const Rat& tolerance);

struct AuditReport {
    Rat dp;
    std::vector<ConditionalMetric> conditionals;
    RodReport odds;
};

// One-call audit: demographic parity, the conditional metrics and the odds
// report, all stratified over `context` (typically the admissible set).
AuditReport audit_bag(const Bag& bag, const FairnessApplication& app,
                      const std::vector<std::string>& context);

std::string report_to_json(const AuditReport& report, const Schema& schema);
std::string report_to_text(const AuditReport& report, const Schema& schema);

}  // namespace fairrep
