#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "liftc/logic.hpp"

namespace liftc {

// Least Herbrand model with the round at which each atom was first derived
// (0 for example facts, i for atoms added by the i-th consequence step).
// `rederived` records, for atoms that are facts yet also appear as rule
// heads, the first round a rule derived them.
struct HerbrandModel {
    std::map<Atom, int> atoms;
    std::map<Atom, int> rederived;

    bool contains(const Atom& a) const { return atoms.count(a) != 0; }
    std::size_t size() const { return atoms.size(); }
};

// A rule instance active in the least model: groundHead = head(theta) and
// every body atom is in the model (restricted grounding).
struct GroundRuleInstance {
    std::size_t rule_index;
    Substitution theta;
    Atom ground_head;
    std::vector<Atom> ground_body; // in literal order

    bool operator==(const GroundRuleInstance&) const = default;
};

struct GroundProgram {
    HerbrandModel model;
    std::vector<GroundRuleInstance> instances;
    // Atoms originating from the example, with their values. Duplicate facts
    // with conflicting values are rejected when the program is assembled.
    std::map<Atom, TensorValue> facts;

    bool is_fact(const Atom& a) const { return facts.count(a) != 0; }
};

struct GroundLimits {
    std::size_t max_atoms = 10'000'000;
};

// One application of the immediate-consequence operator: the interpretation
// plus every rule head whose body is fully matched in it.
std::set<Atom> immediate_consequence(const std::vector<WeightedRule>& rules,
                                     const std::set<Atom>& interpretation);

// Fixpoint of the consequence operator starting from the example facts,
// computed with semi-naive (delta-driven) iteration. Template facts (rules
// with an empty body) participate like example facts.
HerbrandModel least_model(const Template& tpl, const Example& example,
                          const GroundLimits& limits = {});

// All active rule instances over the least model, deduplicated on
// (rule index, ground head, sorted ground body).
GroundProgram restricted_grounding(const Template& tpl, const HerbrandModel& model,
                                   const Example& example);

// Restricted grounding filtered down to what the computation graph uses:
// constructive instances only (every body atom derived strictly before the
// head, which keeps the graph acyclic under recursive rules) that lie on a
// derivation path to the query. Body atoms that are example facts resolve to
// fact leaves and are not expanded further. nullopt when the query is not
// entailed (closed-world assumption).
std::optional<GroundProgram> ground_for_query(const Template& tpl, const Example& example,
                                              const Atom& query,
                                              const GroundLimits& limits = {});

// Text dump, one instance per line: `ruleIdx: head <- b1, b2, ...`.
std::string dump_ground_program(const GroundProgram& gp);

} // namespace liftc
