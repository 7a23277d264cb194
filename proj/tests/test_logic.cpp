#include <doctest.h>

#include "liftc/logic.hpp"
#include "liftc/rng.hpp"
#include "test_helpers.hpp"

using namespace liftc;
using helpers::atom;
using helpers::C;
using helpers::V;

TEST_CASE("terms intern by name and kind") {
    CHECK(Term::constant("h1") == Term::constant("h1"));
    CHECK(Term::constant("h1") != Term::variable("h1"));
    CHECK(Term::variable("X") == Term::variable("X"));
    CHECK(Predicate::make("b", 2) == Predicate::make("b", 2));
    CHECK(Predicate::make("b", 2) != Predicate::make("b", 1));
}

TEST_CASE("atom groundness") {
    CHECK(atom("edge", {C("a"), C("b")}).is_ground());
    CHECK_FALSE(atom("edge", {C("a"), V("Y")}).is_ground());
    CHECK(atom("q").is_ground());
}

TEST_CASE("apply_substitution") {
    Substitution theta;
    REQUIRE(theta.bind(V("X").name, C("a")));
    REQUIRE(theta.bind(V("Y").name, C("b")));
    CHECK(apply_substitution(atom("edge", {V("X"), V("Y")}), theta) ==
          atom("edge", {C("a"), C("b")}));

    Substitution only_x;
    REQUIRE(only_x.bind(V("X").name, C("b")));
    CHECK(apply_substitution(atom("node", {C("a")}), only_x) == atom("node", {C("a")}));

    Substitution four;
    REQUIRE(four.bind(V("P").name, C("n1")));
    REQUIRE(four.bind(V("C1").name, C("l1")));
    REQUIRE(four.bind(V("C2").name, C("l2")));
    REQUIRE(four.bind(V("C3").name, C("l3")));
    CHECK(apply_substitution(atom("parent", {V("P"), V("C1"), V("C2"), V("C3")}), four) ==
          atom("parent", {C("n1"), C("l1"), C("l2"), C("l3")}));
}

TEST_CASE("match_atom") {
    Substitution empty;
    auto m = match_atom(atom("edge", {V("X"), V("Y")}), atom("edge", {C("a"), C("b")}), empty);
    REQUIRE(m.has_value());
    CHECK(*m->lookup(V("X").name) == C("a"));
    CHECK(*m->lookup(V("Y").name) == C("b"));

    CHECK_FALSE(match_atom(atom("edge", {V("X"), V("X")}), atom("edge", {C("a"), C("b")}),
                           empty)
                    .has_value());

    Substitution partial;
    REQUIRE(partial.bind(V("X").name, C("h1")));
    auto ext = match_atom(atom("b", {V("X"), V("Y")}), atom("b", {C("h1"), C("o1")}), partial);
    REQUIRE(ext.has_value());
    CHECK(*ext->lookup(V("X").name) == C("h1"));
    CHECK(*ext->lookup(V("Y").name) == C("o1"));

    CHECK_FALSE(
        match_atom(atom("a", {V("X")}), atom("b", {C("a"), C("b")}), empty).has_value());
}

TEST_CASE("match after substitution recovers the restriction") {
    Rng rng(41);
    const char* consts[] = {"a", "b", "c", "d"};
    const char* vars[] = {"X", "Y", "Z"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t arity = rng.below(4);
        Atom pattern;
        pattern.pred = Predicate::make("p", static_cast<std::uint32_t>(arity));
        Substitution theta;
        for (std::size_t i = 0; i < arity; ++i) {
            if (rng.flip()) {
                Term v = V(vars[rng.below(3)]);
                pattern.terms.push_back(v);
            } else {
                pattern.terms.push_back(C(consts[rng.below(4)]));
            }
        }
        for (const char* v : vars)
            theta.bind(V(v).name, C(consts[rng.below(4)]));
        Atom ground = apply_substitution(pattern, theta);
        REQUIRE(ground.is_ground());
        Substitution empty;
        auto m = match_atom(pattern, ground, empty);
        REQUIRE(m.has_value());
        for (const auto& [var, value] : m->bindings())
            CHECK(*theta.lookup(var) == value);
        // Idempotence once everything is bound.
        CHECK(apply_substitution(ground, theta) == ground);
    }
}

TEST_CASE("validate: the molecular template is clean") {
    CHECK(validate_template(helpers::molecular_template()).empty());
}

TEST_CASE("validate: unsafe head variable") {
    Template tpl = parse_template("h(X,Z) :- edge(X,Y).\n");
    auto diags = validate_template(tpl);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].rule_index == 0);
    CHECK(diags[0].message.find("Z") != std::string::npos);
}

TEST_CASE("validate: conflicting slot shapes") {
    Template tpl = parse_template("W {10,4} :: a :- x.\nW {10,5} :: b :- y.\n");
    auto diags = validate_template(tpl);
    REQUIRE(diags.size() >= 1);
    CHECK(diags[0].message.find("W") != std::string::npos);
}

TEST_CASE("validate: cross-rule dimension conflict is reported") {
    // h produces 3-vectors, but the consumer expects 5-dimensional input.
    Template tpl = parse_template("W {3,2} :: h(X) :- U {2,2} : f(X).\n"
                                  "Q {1,5} :: q :- h(X).\n");
    auto diags = validate_template(tpl);
    CHECK(!diags.empty());
}

TEST_CASE("parameter slots collect shapes once") {
    Template tpl = helpers::molecular_template();
    auto slots = tpl.parameter_slots();
    REQUIRE(slots.size() == 5);
    CHECK(slots.at("Wh") == SlotShape{1, 3});
    CHECK(slots.at("Wa") == SlotShape{3, 3});
    CHECK(slots.at("Wb") == SlotShape{3, 3});
    CHECK(slots.at("Wh2") == SlotShape{1, 1});
    CHECK(slots.at("Wq") == SlotShape{1, 1});
}
