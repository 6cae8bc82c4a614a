#include "fairrep/bag.hpp"
#include "fairrep/csv_io.hpp"
#include "fairrep/det_rng.hpp"
#include "fairrep/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace fairrep;

namespace {

Schema abc_schema() {
    return Schema({{"X", {"a", "b"}}, {"Y", {"a", "b"}}, {"Z", {"c", "d"}}});
}

// The four-row relation used across the repair tests: violates Z ->> X
// because the z=c block is missing the (b, b, c) cell.
Bag four_rows() {
    Bag bag{abc_schema()};
    bag.add({0, 0, 0});  // a a c
    bag.add({0, 1, 0});  // a b c
    bag.add({1, 0, 0});  // b a c
    bag.add({1, 1, 1});  // b b d
    return bag;
}

}  // namespace

TEST_CASE("schema lookups and validation") {
    const Schema s = abc_schema();
    CHECK(s.size() == 3);
    CHECK(s.index_of("Y") == 1);
    CHECK(!s.index_of("W").has_value());
    CHECK(s.require("Z") == 2);
    CHECK_THROWS_AS((void)s.require("W"), ValidationError);
    CHECK(s.require_all({"Z", "X"}) == std::vector<std::size_t>{2, 0});
    CHECK(s.require_category(2, "d") == 1);
    CHECK_THROWS_AS((void)s.require_category(2, "a"), ValidationError);
    CHECK_THROWS_AS(s.check_tuple({0, 0, 2}), ValidationError);
    CHECK_THROWS_AS(s.check_tuple({0, 0}), ValidationError);
    CHECK(s.render_tuple({1, 0, 1}) == "b,a,d");
}

TEST_CASE("duplicate attribute names are rejected") {
    CHECK_THROWS_AS(Schema({{"X", {"a"}}, {"X", {"b"}}}), ValidationError);
}

TEST_CASE("bag counting and probabilities") {
    Bag bag{abc_schema()};
    bag.add({0, 0, 0}, 3);
    bag.add({0, 0, 0});
    bag.add({1, 1, 1}, 2);
    CHECK(bag.total() == 6);
    CHECK(bag.distinct() == 2);
    CHECK(bag.multiplicity({0, 0, 0}) == 4);
    CHECK(bag.multiplicity({0, 1, 0}) == 0);
    CHECK(bag.probability({1, 1, 1}) == make_rat(1, 3));
    CHECK(!bag.is_set());

    bag.remove({0, 0, 0}, 4);
    CHECK(bag.multiplicity({0, 0, 0}) == 0);
    CHECK(bag.total() == 2);
    CHECK_THROWS_AS(bag.remove({0, 0, 0}), ValidationError);
    CHECK_THROWS_AS(bag.add({0, 0, 0}, 0), ValidationError);
    CHECK_THROWS_AS(bag.add({0, 0, 9}), ValidationError);
}

TEST_CASE("projection accumulates multiplicities") {
    Bag bag = four_rows();
    const Bag pz = project(bag, {"Z"});
    CHECK(pz.schema().size() == 1);
    CHECK(pz.multiplicity({0}) == 3);
    CHECK(pz.multiplicity({1}) == 1);

    const Bag pxz = project(bag, {"X", "Z"});
    CHECK(pxz.multiplicity({0, 0}) == 2);  // (a, c) from rows 1 and 2
    CHECK(pxz.total() == bag.total());
}

TEST_CASE("selection filters on labels") {
    const Bag bag = four_rows();
    const Bag zc = select(bag, {{"Z", "c"}});
    CHECK(zc.total() == 3);
    CHECK(zc.schema() == bag.schema());
    CHECK(zc.multiplicity({1, 1, 1}) == 0);
    CHECK_THROWS_AS(select(bag, {{"Z", "nope"}}), ValidationError);
}

TEST_CASE("natural join is the set-semantics product within shared groups") {
    const Bag bag = four_rows();
    const Bag joined = natural_join(as_set(project(bag, {"X", "Z"})),
                                    as_set(project(bag, {"Z", "Y"})));
    // z=c has x in {a,b} and y in {a,b}: four combinations; z=d has one.
    CHECK(joined.total() == 5);
    CHECK(joined.is_set());
    // The repaired cell appears even though the input lacks it.
    const Bag cell = select(joined, {{"X", "b"}, {"Y", "b"}, {"Z", "c"}});
    CHECK(cell.total() == 1);

    Bag dup = as_set(project(bag, {"X", "Z"}));
    dup.add({0, 0}, 1);
    CHECK_THROWS_AS(natural_join(dup, as_set(project(bag, {"Z", "Y"}))), ValidationError);
}

TEST_CASE("join rejects shared attributes with different domains") {
    Bag left{Schema({{"Z", {"c", "d"}}, {"X", {"a"}}})};
    Bag right{Schema({{"Z", {"c", "e"}}, {"Y", {"a"}}})};
    left.add({0, 0});
    right.add({0, 0});
    CHECK_THROWS_AS(natural_join(left, right), ValidationError);
}

TEST_CASE("scale and as_set") {
    Bag bag = four_rows();
    const Bag tripled = scale(bag, 3);
    CHECK(tripled.total() == 12);
    CHECK(as_set(tripled) == bag);
    CHECK_THROWS_AS(scale(bag, 0), ValidationError);
}

TEST_CASE("align_schema permutes columns") {
    const Bag bag = four_rows();
    const Schema target({{"Z", {"c", "d"}}, {"Y", {"a", "b"}}, {"X", {"a", "b"}}});
    const Bag aligned = align_schema(bag, target);
    CHECK(aligned.multiplicity({1, 1, 1}) == 1);  // d, b, b
    CHECK(align_schema(aligned, bag.schema()) == bag);
}

TEST_CASE("satisfies_mvd matches its definition") {
    const Mvd mvd{{"Z"}, {"X"}, {"Y"}};
    CHECK(!satisfies_mvd(four_rows(), mvd));

    Bag fixed = four_rows();
    fixed.add({1, 1, 0});  // complete the z=c product
    CHECK(satisfies_mvd(fixed, mvd));

    Bag dup = four_rows();
    dup.add({0, 0, 0});
    CHECK_THROWS_AS(satisfies_mvd(dup, mvd), ValidationError);
}

TEST_CASE("mvd partition validation") {
    const Schema s = abc_schema();
    CHECK_THROWS_AS((Mvd{{"Z"}, {"X"}, {"X"}}.check_partition(s)), ValidationError);
    CHECK_THROWS_AS((Mvd{{"Z"}, {"X"}, {}}.check_partition(s)), ValidationError);
    CHECK_NOTHROW((Mvd{{"Z"}, {"X"}, {"Y"}}.check_partition(s)));
}

TEST_CASE("keyed reduction adds distinct keys per copy") {
    Bag bag{abc_schema()};
    bag.add({0, 0, 0}, 3);
    bag.add({1, 1, 1}, 1);
    const KeyedSet ks = to_keyed_set(bag);
    CHECK(ks.relation.is_set());
    CHECK(ks.relation.total() == 4);
    const Schema& keyed = ks.relation.schema();
    CHECK(keyed.size() == 4);
    CHECK(keyed.at(3).name == std::string(kKeyAttribute));
    // Key domain covers 1..max multiplicity.
    CHECK(keyed.at(3).domain == std::vector<std::string>{"1", "2", "3"});
    CHECK(from_keyed_set(ks) == bag);
}

TEST_CASE("keyed roundtrip on random bags") {
    DetRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Bag bag = testing::random_bag(rng, 3, 3, 6, 4);
        CHECK(from_keyed_set(to_keyed_set(bag)) == bag);
    }
}

TEST_CASE("keyed mvd moves the key to the x side") {
    const Mvd base{{"Z"}, {"X"}, {"Y"}};
    const Mvd keyed = keyed_mvd(base);
    CHECK(keyed.z == base.z);
    CHECK(keyed.x == std::vector<std::string>{"X", kKeyAttribute});
    CHECK(keyed.y == base.y);
}

TEST_CASE("split_difference partitions the symmetric difference") {
    DetRng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const Bag before = testing::random_bag(rng, 2, 2, 4, 3);
        Bag after{before.schema()};
        for (const auto& [t, mult] : before.rows()) {
            const Count keep = rng.range(0, mult);
            if (keep > 0) after.add(t, keep);
        }
        if (rng.below(2) == 0) after.add({0, 0}, rng.range(1, 3));

        Bag inserted, deleted;
        split_difference(before, after, inserted, deleted);
        CHECK(bag_minus(bag_plus(before, inserted), deleted) == after);
        // No tuple is both inserted and deleted.
        for (const auto& [t, mult] : inserted.rows()) {
            CHECK(deleted.multiplicity(t) == 0);
        }
    }
}

TEST_CASE("l1 distance is a scale-invariant metric") {
    const Bag bag = four_rows();
    CHECK(l1_distance(bag, bag) == 0);
    CHECK(l1_distance(bag, scale(bag, 7)) == 0);

    Bag other = four_rows();
    other.remove({1, 1, 1});
    other.add({0, 0, 0});
    // Pr moves 1/4 off (b,b,d) onto (a,a,c).
    CHECK(l1_distance(bag, other) == make_rat(1, 2));
    CHECK(l1_distance(other, bag) == make_rat(1, 2));
}

TEST_CASE("csv roundtrip with counts") {
    Bag bag{abc_schema()};
    bag.add({0, 1, 0}, 5);
    bag.add({1, 0, 1}, 2);
    std::ostringstream out;
    write_csv(out, bag);
    std::istringstream in(out.str());
    // Domains inferred from data would drop unused labels; pin them.
    const std::string sidecar =
        R"({"attributes":[{"name":"X","domain":["a","b"]},{"name":"Y","domain":["a","b"]},)"
        R"({"name":"Z","domain":["c","d"]}]})";
    CHECK(read_csv(in, sidecar) == bag);
}

TEST_CASE("csv accepts rational counts and rescales") {
    std::istringstream in("X,__count\nu,1/3\nv,1/6\n");
    const Bag bag = read_csv(in);
    CHECK(bag.multiplicity({0}) == 2);
    CHECK(bag.multiplicity({1}) == 1);
}

TEST_CASE("csv rejects decimals and float-like cells") {
    std::istringstream counts("X,__count\nu,0.5\n");
    CHECK_THROWS_AS(read_csv(counts), ValidationError);
    std::istringstream cells("X\n1.25\n");
    CHECK_THROWS_AS(read_csv(cells), ValidationError);
    std::istringstream sci("X\n1e-3\n");
    CHECK_THROWS_AS(read_csv(sci), ValidationError);
}

TEST_CASE("csv rejects values outside a declared domain") {
    std::istringstream in("X\nq\n");
    const std::string sidecar = R"({"attributes":[{"name":"X","domain":["a","b"]}]})";
    CHECK_THROWS_AS(read_csv(in, sidecar), ValidationError);
}

TEST_CASE("written csv is sorted and carries the count column") {
    Bag bag{Schema({{"B", {"x", "y"}}, {"A", {"p"}}})};
    bag.add({1, 0}, 2);
    bag.add({0, 0}, 1);
    std::ostringstream out;
    write_csv(out, bag);
    CHECK(out.str() == "B,A,__count\nx,p,1\ny,p,2\n");
}
