#pragma once

#include <string>

#include "liftc/ground.hpp"
#include "liftc/logic.hpp"
#include "liftc/parse.hpp"

namespace helpers {

using namespace liftc;

inline Term C(const std::string& n) { return Term::constant(n); }
inline Term V(const std::string& n) { return Term::variable(n); }

inline Atom atom(const std::string& pred, std::vector<Term> terms = {}) {
    Atom a;
    a.pred = Predicate::make(pred, static_cast<std::uint32_t>(terms.size()));
    a.terms = std::move(terms);
    return a;
}

// The two-rule molecular template of the running example:
//   Wh {1,3} :: h(X) :- Wa {3,3} : a(Y), Wb {3,3} : b(X,Y).
//   Wq :: q :- Wh2 {1,1}... kept scalar: Wq :: q :- Wh2 : h(X).
inline Template molecular_template() {
    return parse_template("Wh {1,3} :: h(X) :- Wa {3,3} : a(Y), Wb {3,3} : b(X,Y).\n"
                          "Wq :: q :- Wh2 : h(X).\n",
                          "molecular.tpl");
}

// Scalar-weight variant used where forward values are checked by hand.
inline Template molecular_template_scalar() {
    return parse_template("Wh :: h(X) :- Wa : a(Y), Wb : b(X,Y).\n"
                          "Wq :: q :- Wh2 : h(X).\n",
                          "molecular_scalar.tpl");
}

// Hydrogen molecule: two atoms, one (bidirectional) bond.
inline Example h2_example() {
    return parse_examples("a(h1). a(h2). b(h1,h2). b(h2,h1).\n1 :: q ?\n", "h2.exs")[0];
}

// Water: facts straight from the running example.
inline Example h2o_example() {
    return parse_examples(
        "a(h1). a(h2). a(o1). b(h1,o1). b(o1,h1). b(h2,o1). b(o1,h2).\n1 :: q ?\n",
        "h2o.exs")[0];
}

} // namespace helpers
