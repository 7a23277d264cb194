#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "liftc/symbols.hpp"
#include "liftc/tensor.hpp"

namespace liftc {

enum class TermKind : std::uint8_t { constant, variable };

// A term is a constant or a variable; no function symbols (Datalog).
// Constants start with a lowercase letter or digit, variables with an
// uppercase letter.
struct Term {
    TermKind kind;
    Symbol name;

    static Term constant(std::string_view n) { return {TermKind::constant, intern(n)}; }
    static Term variable(std::string_view n) { return {TermKind::variable, intern(n)}; }

    bool is_constant() const { return kind == TermKind::constant; }
    bool is_variable() const { return kind == TermKind::variable; }
    const std::string& text() const { return symbol_name(name); }

    auto operator<=>(const Term&) const = default;
};

struct Predicate {
    Symbol name;
    std::uint32_t arity;

    static Predicate make(std::string_view n, std::uint32_t arity) { return {intern(n), arity}; }
    const std::string& text() const { return symbol_name(name); }

    auto operator<=>(const Predicate&) const = default;
};

struct Atom {
    Predicate pred;
    std::vector<Term> terms; // length == pred.arity

    bool is_ground() const;
    std::string to_string() const;

    auto operator<=>(const Atom&) const = default;
};

Atom make_atom(std::string_view pred, std::initializer_list<Term> terms);

struct AtomHash {
    std::size_t operator()(const Atom& a) const;
};

// Variable -> constant mapping, kept sorted by variable symbol.
class Substitution {
public:
    // Returns false when the variable is already bound to a different term.
    bool bind(Symbol var, Term value);
    const Term* lookup(Symbol var) const;
    bool empty() const { return bindings_.empty(); }
    std::size_t size() const { return bindings_.size(); }
    const std::vector<std::pair<Symbol, Term>>& bindings() const { return bindings_; }

    auto operator<=>(const Substitution&) const = default;

private:
    std::vector<std::pair<Symbol, Term>> bindings_;
};

Atom apply_substitution(const Atom& atom, const Substitution& theta);

// One-sided matching of a pattern against a ground atom, extending `partial`.
// Returns nullopt when the predicates differ or a variable would take two
// distinct constants.
std::optional<Substitution> match_atom(const Atom& pattern, const Atom& ground,
                                       const Substitution& partial);

// --- weighted constructs -------------------------------------------------

struct LearnableWeight {
    std::string slot;
    int rows = 1;
    int cols = 1;
    // Set by the graph builder when the template enables per-slot biases:
    // the application becomes W*v + b with b stored under bias_slot_name().
    bool bias = false;

    bool operator==(const LearnableWeight&) const = default;
};

// Companion bias slot id; '#' cannot appear in surface identifiers.
inline std::string bias_slot_name(const std::string& slot) { return slot + "#bias"; }

struct FixedWeight {
    TensorValue value;

    bool operator==(const FixedWeight& o) const {
        return value.rows() == o.value.rows() && value.cols() == o.value.cols() &&
               value == o.value;
    }
};

// Absent weight means the identity transformation.
class WeightSpec {
public:
    WeightSpec() = default;
    static WeightSpec absent() { return WeightSpec(); }
    static WeightSpec learnable(std::string slot, int rows = 1, int cols = 1) {
        WeightSpec w;
        w.spec_ = LearnableWeight{std::move(slot), rows, cols, false};
        return w;
    }
    static WeightSpec learnable(LearnableWeight l) {
        WeightSpec w;
        w.spec_ = std::move(l);
        return w;
    }
    static WeightSpec fixed(TensorValue v) {
        WeightSpec w;
        w.spec_ = FixedWeight{std::move(v)};
        return w;
    }

    bool is_absent() const { return std::holds_alternative<std::monostate>(spec_); }
    bool is_learnable() const { return std::holds_alternative<LearnableWeight>(spec_); }
    bool is_fixed() const { return std::holds_alternative<FixedWeight>(spec_); }
    const LearnableWeight& learnable_ref() const { return std::get<LearnableWeight>(spec_); }
    const FixedWeight& fixed_ref() const { return std::get<FixedWeight>(spec_); }

    bool operator==(const WeightSpec&) const = default;

private:
    std::variant<std::monostate, LearnableWeight, FixedWeight> spec_;
};

struct WeightedFact {
    TensorValue value; // defaults to scalar 1 when the source omits it
    Atom atom;         // ground

    bool operator==(const WeightedFact& o) const {
        return atom == o.atom && value.rows() == o.value.rows() &&
               value.cols() == o.value.cols() && value == o.value;
    }
};

struct BodyLiteral {
    WeightSpec weight;
    Atom atom;

    bool operator==(const BodyLiteral&) const = default;
};

// Optional per-rule overrides of the rule-node activation and the
// aggregation applied across grounding substitutions.
struct RuleOverrides {
    std::optional<Activation> rule_activation;
    std::optional<Aggregation> aggregation;

    bool any() const { return rule_activation.has_value() || aggregation.has_value(); }
    bool operator==(const RuleOverrides&) const = default;
};

struct WeightedRule {
    WeightSpec head_weight;
    Atom head;
    std::vector<BodyLiteral> body; // empty body = template fact
    RuleOverrides fns;

    bool operator==(const WeightedRule&) const = default;
};

// Defaults and per-predicate overrides for the three node functions:
// rule activation, aggregation across substitutions, atom activation.
struct FunctionConfig {
    Activation rule_activation = Activation::identity;
    Activation atom_activation = Activation::identity;
    Aggregation aggregation = Aggregation::avg;
    std::optional<Activation> output_activation; // applied by the trainer before the loss
    std::map<Predicate, Activation> atom_overrides;
    // Adds a learnable additive bias to every learnable weight application.
    bool slot_bias = false;
    // Fact values of these predicates become trainable parameters
    // (initialized from the example values).
    std::set<Predicate> trainable_fact_predicates;

    Activation atom_activation_for(const Predicate& p) const {
        auto it = atom_overrides.find(p);
        return it == atom_overrides.end() ? atom_activation : it->second;
    }

    bool operator==(const FunctionConfig&) const = default;
};

struct SlotShape {
    int rows = 1;
    int cols = 1;

    bool operator==(const SlotShape&) const = default;
};

struct Template {
    std::vector<WeightedRule> rules;
    FunctionConfig fns;

    // All learnable slots with their declared shapes, keyed by slot id.
    std::map<std::string, SlotShape> parameter_slots() const;

    bool operator==(const Template&) const = default;
};

struct Query {
    TensorValue target; // finite
    Atom atom;          // ground

    bool operator==(const Query& o) const {
        return atom == o.atom && target.rows() == o.target.rows() &&
               target.cols() == o.target.cols() && target == o.target;
    }
};

struct Example {
    std::vector<WeightedFact> facts;
    std::vector<Query> queries;

    bool operator==(const Example&) const = default;
};

struct Diagnostic {
    int rule_index; // -1 when not tied to a rule
    std::string message;
};

// Structural validation: range safety, one shape per slot id, and a
// conservative shape-composition check across rules. Never throws.
std::vector<Diagnostic> validate_template(const Template& tpl);

} // namespace liftc
