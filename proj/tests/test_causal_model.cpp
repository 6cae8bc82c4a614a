#include "fairrep/causal_model.hpp"
#include "fairrep/det_rng.hpp"
#include "fairrep/error.hpp"
#include "fairrep/independence.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace fairrep;

namespace {

const std::filesystem::path kFixtures = FIXTURE_DIR;

// S -> M -> T chain with simple biased coins.
std::vector<ModelNode> chain_nodes() {
    std::vector<ModelNode> nodes(3);
    nodes[0].variable = {"S", {"0", "1"}};
    nodes[0].rows = {{{}, {make_rat(1, 2), make_rat(1, 2)}}};
    nodes[1].variable = {"M", {"0", "1"}};
    nodes[1].parents = {"S"};
    nodes[1].rows = {{{0}, {make_rat(3, 4), make_rat(1, 4)}},
                     {{1}, {make_rat(1, 4), make_rat(3, 4)}}};
    nodes[2].variable = {"T", {"0", "1"}};
    nodes[2].parents = {"M"};
    nodes[2].rows = {{{0}, {make_rat(2, 3), make_rat(1, 3)}},
                     {{1}, {make_rat(1, 3), make_rat(2, 3)}}};
    return nodes;
}

Rat outcome_probability(const Dist& dist, const std::string& name, const std::string& label) {
    return event_probability(dist, {{name, label}}) / dist.total();
}

}  // namespace

TEST_CASE("model construction validates structure") {
    auto nodes = chain_nodes();
    const auto build = [](const std::vector<ModelNode>& n) { return CausalModel(n); };
    CHECK_NOTHROW(build(nodes));

    SUBCASE("cycles are rejected") {
        nodes[0].parents = {"T"};
        nodes[0].rows = {{{0}, {make_rat(1, 2), make_rat(1, 2)}},
                         {{1}, {make_rat(1, 2), make_rat(1, 2)}}};
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
    SUBCASE("unknown parents are rejected") {
        nodes[1].parents = {"Q"};
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
    SUBCASE("missing cpt rows are rejected") {
        nodes[1].rows.pop_back();
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
    SUBCASE("duplicate cpt rows are rejected") {
        nodes[1].rows[1].given = {0};
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
    SUBCASE("rows must sum to one") {
        nodes[2].rows[0].distribution = {make_rat(1, 3), make_rat(1, 3)};
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
    SUBCASE("negative entries are rejected") {
        nodes[2].rows[0].distribution = {make_rat(4, 3), make_rat(-1, 3)};
        CHECK_THROWS_AS(build(nodes), ValidationError);
    }
}

TEST_CASE("d-separation on the three canonical motifs") {
    const CausalModel chain{chain_nodes()};
    CHECK(chain.d_separated({"S"}, {"T"}, {"M"}));
    CHECK(!chain.d_separated({"S"}, {"T"}, {}));
    CHECK(!chain.d_separated({"S"}, {"M"}, {"T"}));

    // Fork: S <- M -> T.
    std::vector<ModelNode> fork(3);
    fork[0].variable = {"M", {"0", "1"}};
    fork[0].rows = {{{}, {make_rat(1, 2), make_rat(1, 2)}}};
    fork[1].variable = {"S", {"0", "1"}};
    fork[1].parents = {"M"};
    fork[1].rows = {{{0}, {make_rat(1, 3), make_rat(2, 3)}},
                    {{1}, {make_rat(2, 3), make_rat(1, 3)}}};
    fork[2].variable = {"T", {"0", "1"}};
    fork[2].parents = {"M"};
    fork[2].rows = fork[1].rows;
    const CausalModel fork_model{fork};
    CHECK(fork_model.d_separated({"S"}, {"T"}, {"M"}));
    CHECK(!fork_model.d_separated({"S"}, {"T"}, {}));

    // Collider: S -> C <- T, with a descendant D under C.
    std::vector<ModelNode> collider(4);
    collider[0].variable = {"S", {"0", "1"}};
    collider[0].rows = {{{}, {make_rat(1, 2), make_rat(1, 2)}}};
    collider[1].variable = {"T", {"0", "1"}};
    collider[1].rows = collider[0].rows;
    collider[2].variable = {"C", {"0", "1"}};
    collider[2].parents = {"S", "T"};
    collider[2].rows = {{{0, 0}, {make_rat(1), make_rat(0)}},
                        {{0, 1}, {make_rat(0), make_rat(1)}},
                        {{1, 0}, {make_rat(0), make_rat(1)}},
                        {{1, 1}, {make_rat(1), make_rat(0)}}};
    collider[3].variable = {"D", {"0", "1"}};
    collider[3].parents = {"C"};
    collider[3].rows = {{{0}, {make_rat(1), make_rat(0)}}, {{1}, {make_rat(0), make_rat(1)}}};
    const CausalModel collider_model{collider};
    CHECK(collider_model.d_separated({"S"}, {"T"}, {}));
    CHECK(!collider_model.d_separated({"S"}, {"T"}, {"C"}));
    CHECK(!collider_model.d_separated({"S"}, {"T"}, {"D"}));
}

TEST_CASE("joint distribution multiplies the factors") {
    const CausalModel model{chain_nodes()};
    const Dist joint = model.joint_distribution();
    CHECK(joint.total() == 1);
    // Pr(S=0, M=1, T=0) = 1/2 * 1/4 * 1/3.
    CHECK(event_probability(joint, {{"S", "0"}, {"M", "1"}, {"T", "0"}}) == make_rat(1, 24));
    CHECK(conditional_probability(joint, {{"T", "1"}}, {{"M", "1"}}) == make_rat(2, 3));
    // Contradictory or null conditions yield zero, not an error.
    CHECK(conditional_probability(joint, {{"T", "1"}, {"T", "0"}}, {}) == 0);
}

TEST_CASE("truncated factorization drops the intervened factor") {
    const CausalModel model{chain_nodes()};
    const Dist fixed = model.intervene({{"M", "1"}});
    // M is clamped: the result ranges over S and T only.
    CHECK(!fixed.schema.index_of("M").has_value());
    CHECK(outcome_probability(fixed, "T", "1") == make_rat(2, 3));
    // S keeps its prior: the intervention cut the only path into M.
    CHECK(outcome_probability(fixed, "S", "1") == make_rat(1, 2));
}

TEST_CASE("adjustment route equals truncated factorization on positive models") {
    DetRng rng(31);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const CausalModel model = testing::random_model(rng, 5, true);
        const Schema& s = model.schema();
        const std::size_t n = s.size();
        // Intervene on one or two variables, reading the last as outcome.
        const std::string y = s.at(n - 1).name;
        Assignment ivs;
        const std::size_t first = rng.below(n - 1);
        ivs.emplace_back(s.at(first).name, s.at(first).domain[rng.below(2)]);
        if (n > 2 && rng.below(2) == 0) {
            // Second intervention on a non-descendant of the first, placed
            // before it to satisfy the documented ordering.
            for (std::size_t second = 0; second < first; ++second) {
                if (second != first) {
                    ivs.insert(ivs.begin(),
                               {s.at(second).name, s.at(second).domain[rng.below(2)]});
                    break;
                }
            }
        }
        bool skip = false;
        for (const auto& [name, label] : ivs) skip = skip || name == y;
        if (skip) continue;

        const Dist truncated = model.intervene(ivs);
        const Dist adjusted = model.extended_adjustment(y, ivs);
        for (const std::string& label : {"0", "1"}) {
            CHECK(outcome_probability(truncated, y, label) ==
                  outcome_probability(adjusted, y, label));
        }
        ++compared;
    }
    CHECK(compared > 30);
}

TEST_CASE("adjustment rejects descendant-first intervention order") {
    const CausalModel model{chain_nodes()};
    CHECK_THROWS_AS(model.extended_adjustment("T", {{"M", "1"}, {"S", "0"}}), ValidationError);
    CHECK_NOTHROW(model.extended_adjustment("T", {{"S", "0"}, {"M", "1"}}));
}

TEST_CASE("markov condition holds on the generated joint") {
    DetRng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const CausalModel model = testing::random_model(rng, 4);
        const Bag data = testing::bag_from_dist(model.joint_distribution());
        const Schema& s = model.schema();
        for (std::size_t v = 0; v < s.size(); ++v) {
            CiStatement ci{{s.at(v).name}, {}, {}};
            for (std::size_t p : model.parents(v)) ci.z.push_back(s.at(p).name);
            for (std::size_t u = 0; u < s.size(); ++u) {
                if (u == v || model.reaches(v, u)) continue;
                bool parent = false;
                for (std::size_t p : model.parents(v)) parent = parent || p == u;
                if (!parent) ci.y.push_back(s.at(u).name);
            }
            if (!ci.y.empty()) CHECK(holds_ci(data, ci));
        }
    }
}

TEST_CASE("d-separation implies independence in the joint") {
    DetRng rng(33);
    int separated = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const CausalModel model = testing::random_model(rng, 4);
        const Schema& s = model.schema();
        if (s.size() < 3) continue;
        const Bag data = testing::bag_from_dist(model.joint_distribution());
        const std::string x = s.at(0).name;
        const std::string y = s.at(1).name;
        std::vector<std::string> z;
        for (std::size_t v = 2; v < s.size(); ++v) {
            if (rng.below(2) == 0) z.push_back(s.at(v).name);
        }
        if (model.d_separated({x}, {y}, z)) {
            ++separated;
            CHECK(holds_ci(data, {{x}, {y}, z}));
        }
    }
    CHECK(separated > 5);
}

TEST_CASE("single-department admissions model is unfair with a department witness") {
    const CausalModel model = model_from_file((kFixtures / "college1_model.json").string());
    const FairnessApplication app =
        app_from_file((kFixtures / "college1_model_roles.json").string());

    // Intervening on gender alone balances perfectly: the department lean
    // compensates the per-department rates.
    CHECK(k_fair(model, app, {}));

    // Adding the department exposes the disparity.
    const auto witness = k_fair_witness(model, app, {"D"});
    REQUIRE(witness.has_value());
    CHECK(witness->k == std::vector<std::string>{"D"});
    CHECK(witness->context == Assignment{{"D", "A"}});
    // Rejection rates under do(male, D=A) and do(female, D=A); the roles name
    // female as the audited group, so it lands in the s1 slot.
    CHECK(witness->outcome_value == "0");
    CHECK(witness->probability_s0 == make_rat(1, 5));
    CHECK(witness->probability_s1 == make_rat(4, 5));

    const FairnessVerdict verdict = justifiably_fair(model, app, FairnessMode::kExhaustive);
    CHECK(!verdict.fair);
    REQUIRE(verdict.counterexample.has_value());
    CHECK(verdict.counterexample->context == Assignment{{"D", "A"}});

    const FairnessVerdict by_path = justifiably_fair(model, app, FairnessMode::kPathCriterion);
    CHECK(!by_path.fair);
    CHECK(by_path.violating_path == std::vector<std::string>{"G", "H", "O"});
}

TEST_CASE("qualification-driven admissions model is justifiably fair") {
    const CausalModel model = model_from_file((kFixtures / "college2_model.json").string());
    const FairnessApplication app =
        app_from_file((kFixtures / "college2_model_roles.json").string());

    const FairnessVerdict by_path = justifiably_fair(model, app, FairnessMode::kPathCriterion);
    CHECK(by_path.fair);
    CHECK(by_path.violating_path.empty());

    const FairnessVerdict exhaustive = justifiably_fair(model, app, FairnessMode::kExhaustive);
    CHECK(exhaustive.fair);

    // The worked interventional query: admission under do(gender), do(D=A)
    // is 1/2 for both genders, through both evaluation routes. Event masses
    // are compared raw: this model has a structural zero (no unqualified man
    // in department A), and the adjustment route deliberately drops such
    // unidentifiable contexts instead of renormalizing.
    for (const std::string gender : {"male", "female"}) {
        const Assignment ivs{{"G", gender}, {"D", "A"}};
        const Dist truncated = model.intervene(ivs);
        const Dist adjusted = model.extended_adjustment("O", ivs);
        CHECK(truncated.total() == 1);
        CHECK(event_probability(truncated, {{"O", "1"}}) == make_rat(1, 2));
        CHECK(event_probability(adjusted, {{"O", "1"}}) == make_rat(1, 2));
    }
}

TEST_CASE("path criterion is sound for the exhaustive definition") {
    DetRng rng(34);
    int fair_by_path = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const CausalModel model = testing::random_model(rng, 4);
        const Schema& s = model.schema();
        if (s.size() < 3) continue;
        FairnessApplication app;
        app.protected_attr = s.at(0).name;
        app.outcome = s.at(s.size() - 1).name;
        for (std::size_t v = 1; v + 1 < s.size(); ++v) {
            (rng.below(2) == 0 ? app.admissible : app.inadmissible).push_back(s.at(v).name);
        }
        const FairnessVerdict by_path = justifiably_fair(model, app, FairnessMode::kPathCriterion);
        if (!by_path.fair) continue;
        ++fair_by_path;
        CHECK(justifiably_fair(model, app, FairnessMode::kExhaustive).fair);
    }
    CHECK(fair_by_path > 10);
}

TEST_CASE("model json loading validates") {
    CHECK_THROWS_AS(model_from_json(R"({"variables": []})"), ValidationError);
    // Probabilities must be exact; decimal notation is rejected.
    const std::string decimal = R"({"variables": [{"name": "X", "domain": ["0", "1"],
        "parents": [], "cpt": [{"given": {}, "distribution": {"0": 0.5, "1": 0.5}}]}]})";
    CHECK_THROWS_AS(model_from_json(decimal), ValidationError);
    const std::string ok = R"({"variables": [{"name": "X", "domain": ["0", "1"],
        "parents": [], "cpt": [{"given": {}, "distribution": {"0": "1/2", "1": "1/2"}}]}]})";
    const CausalModel model = model_from_json(ok);
    CHECK(model.schema().size() == 1);
}

TEST_CASE("oversized joints are refused") {
    std::vector<ModelNode> nodes;
    for (int v = 0; v < 8; ++v) {
        ModelNode node;
        node.variable = {"V" + std::to_string(v), {"0", "1"}};
        node.rows = {{{}, {make_rat(1, 2), make_rat(1, 2)}}};
        nodes.push_back(node);
    }
    const CausalModel model{nodes};
    CHECK_THROWS_AS(model.joint_distribution(16), CapacityError);
}
