#include "liftc/ground.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <unordered_set>

namespace liftc {

namespace {

using FactIndex = std::map<Predicate, std::vector<Atom>>;

FactIndex index_atoms(const std::set<Atom>& atoms) {
    FactIndex index;
    for (const Atom& a : atoms)
        index[a.pred].push_back(a);
    return index;
}

// Enumerates every substitution that matches all body literals against
// `full`, with the literal at `delta_pos` (if any) restricted to `delta`.
// Candidate lists are sorted, so enumeration order is deterministic.
void for_each_body_match(const WeightedRule& rule, const FactIndex& full,
                         const FactIndex* delta, std::size_t delta_pos,
                         const std::function<void(const Substitution&)>& emit) {
    std::vector<const std::vector<Atom>*> candidates(rule.body.size());
    static const std::vector<Atom> kEmpty;
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
        const FactIndex& src = (delta && i == delta_pos) ? *delta : full;
        auto it = src.find(rule.body[i].atom.pred);
        candidates[i] = it == src.end() ? &kEmpty : &it->second;
    }

    std::function<void(std::size_t, const Substitution&)> descend =
        [&](std::size_t i, const Substitution& theta) {
            if (i == rule.body.size()) {
                emit(theta);
                return;
            }
            const Atom pattern = apply_substitution(rule.body[i].atom, theta);
            for (const Atom& cand : *candidates[i]) {
                if (auto next = match_atom(pattern, cand, theta))
                    descend(i + 1, *next);
            }
        };
    descend(0, Substitution{});
}

Atom ground_head_of(const WeightedRule& rule, const Substitution& theta) {
    Atom head = apply_substitution(rule.head, theta);
    if (!head.is_ground())
        throw ConfigError("rule head " + rule.head.to_string() +
                          " not ground after matching the body; run validation first");
    return head;
}

// Strongly connected components of the ground dependency graph (edges from
// non-fact body atoms to heads), iterative Tarjan.
std::map<Atom, int> atom_components(const GroundProgram& gp) {
    std::map<Atom, int> index_of;
    std::vector<Atom> atoms;
    auto idx = [&](const Atom& a) {
        auto [it, inserted] = index_of.emplace(a, static_cast<int>(atoms.size()));
        if (inserted)
            atoms.push_back(a);
        return it->second;
    };
    std::vector<std::pair<int, int>> edges;
    for (const auto& inst : gp.instances) {
        const int h = idx(inst.ground_head);
        for (const Atom& b : inst.ground_body)
            if (!gp.is_fact(b))
                edges.emplace_back(idx(b), h);
    }
    const int n = static_cast<int>(atoms.size());
    std::vector<std::vector<int>> succ(n);
    for (const auto& [from, to] : edges)
        succ[from].push_back(to);

    std::vector<int> comp(n, -1), low(n), num(n, -1);
    std::vector<int> stack;
    std::vector<bool> on_stack(n, false);
    int counter = 0, comps = 0;

    struct Frame {
        int v;
        std::size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (num[root] != -1)
            continue;
        std::vector<Frame> call{{root, 0}};
        num[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < succ[f.v].size()) {
                const int w = succ[f.v][f.child++];
                if (num[w] == -1) {
                    num[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], num[w]);
                }
            } else {
                if (low[f.v] == num[f.v]) {
                    for (;;) {
                        const int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = comps;
                        if (w == f.v)
                            break;
                    }
                    ++comps;
                }
                const int v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }

    std::map<Atom, int> result;
    for (int i = 0; i < n; ++i)
        result.emplace(atoms[i], comp[i]);
    return result;
}

} // namespace

std::set<Atom> immediate_consequence(const std::vector<WeightedRule>& rules,
                                     const std::set<Atom>& interpretation) {
    std::set<Atom> result = interpretation;
    FactIndex index = index_atoms(interpretation);
    for (const auto& rule : rules) {
        for_each_body_match(rule, index, nullptr, 0, [&](const Substitution& theta) {
            result.insert(ground_head_of(rule, theta));
        });
    }
    return result;
}

HerbrandModel least_model(const Template& tpl, const Example& example,
                          const GroundLimits& limits) {
    HerbrandModel model;
    auto admit = [&](const Atom& a, int round) {
        auto [it, inserted] = model.atoms.emplace(a, round);
        (void)it;
        if (inserted && model.atoms.size() > limits.max_atoms)
            throw ResourceError("least model exceeded the atom cap of " +
                                std::to_string(limits.max_atoms));
        return inserted;
    };

    std::set<Atom> delta;
    for (const auto& fact : example.facts)
        if (admit(fact.atom, 0))
            delta.insert(fact.atom);
    // Template facts do not depend on the interpretation; they enter once.
    for (const auto& rule : tpl.rules) {
        if (rule.body.empty() && admit(rule.head, 0))
            delta.insert(rule.head);
    }

    std::set<Atom> full_set;
    for (const auto& [atom, round] : model.atoms)
        full_set.insert(atom);

    int round = 0;
    while (!delta.empty()) {
        ++round;
        FactIndex full = index_atoms(full_set);
        FactIndex delta_index = index_atoms(delta);
        std::set<Atom> next;
        for (const auto& rule : tpl.rules) {
            if (rule.body.empty())
                continue;
            for (std::size_t pos = 0; pos < rule.body.size(); ++pos) {
                for_each_body_match(rule, full, &delta_index, pos,
                                    [&](const Substitution& theta) {
                                        Atom head = ground_head_of(rule, theta);
                                        if (!full_set.count(head))
                                            next.insert(head);
                                        else if (model.atoms.at(head) == 0)
                                            model.rederived.emplace(head, round);
                                    });
            }
        }
        delta.clear();
        for (const Atom& a : next) {
            if (admit(a, round)) {
                delta.insert(a);
                full_set.insert(a);
            }
        }
    }
    return model;
}

GroundProgram restricted_grounding(const Template& tpl, const HerbrandModel& model,
                                   const Example& example) {
    GroundProgram gp;
    gp.model = model;
    for (const auto& fact : example.facts) {
        auto [it, inserted] = gp.facts.emplace(fact.atom, fact.value);
        if (!inserted && !(it->second.rows() == fact.value.rows() &&
                           it->second.cols() == fact.value.cols() &&
                           it->second == fact.value))
            throw ConfigError("fact " + fact.atom.to_string() +
                              " appears twice with different values");
    }

    std::set<Atom> atoms;
    for (const auto& [atom, round] : model.atoms)
        atoms.insert(atom);
    FactIndex index = index_atoms(atoms);

    std::set<std::tuple<std::size_t, Atom, std::vector<Atom>>> seen;
    for (std::size_t ri = 0; ri < tpl.rules.size(); ++ri) {
        const auto& rule = tpl.rules[ri];
        if (rule.body.empty()) {
            if (seen.emplace(ri, rule.head, std::vector<Atom>{}).second)
                gp.instances.push_back({ri, Substitution{}, rule.head, {}});
            continue;
        }
        for_each_body_match(rule, index, nullptr, 0, [&](const Substitution& theta) {
            GroundRuleInstance inst;
            inst.rule_index = ri;
            inst.theta = theta;
            inst.ground_head = ground_head_of(rule, theta);
            for (const auto& lit : rule.body)
                inst.ground_body.push_back(apply_substitution(lit.atom, theta));
            std::vector<Atom> key = inst.ground_body;
            std::sort(key.begin(), key.end());
            if (seen.emplace(ri, inst.ground_head, std::move(key)).second)
                gp.instances.push_back(std::move(inst));
        });
    }
    return gp;
}

std::optional<GroundProgram> ground_for_query(const Template& tpl, const Example& example,
                                              const Atom& query, const GroundLimits& limits) {
    HerbrandModel model = least_model(tpl, example, limits);
    if (!model.contains(query))
        return std::nullopt;
    GroundProgram full = restricted_grounding(tpl, model, example);

    // The round an atom became derivable by a rule (facts track their first
    // re-derivation separately).
    auto derivation_round = [&](const Atom& a) -> int {
        int r = model.atoms.at(a);
        if (r > 0)
            return r;
        auto it = model.rederived.find(a);
        return it == model.rederived.end() ? 0 : it->second;
    };

    // Constructive instances. Dependencies between strongly connected
    // components of the ground dependency graph can never close a cycle, so
    // they are all kept (GIN-style readouts from every layer rely on this).
    // Within a component, only derivations whose bodies strictly precede the
    // head in derivation order survive; the instances that fired at an
    // atom's first derivation round always do. Body atoms that are example
    // facts resolve to fact leaves and impose no ordering at all.
    std::map<Atom, int> scc = atom_components(full);
    std::map<Atom, std::vector<std::size_t>> by_head;
    std::vector<bool> constructive(full.instances.size(), true);
    for (std::size_t i = 0; i < full.instances.size(); ++i) {
        const auto& inst = full.instances[i];
        const int head_round = derivation_round(inst.ground_head);
        const int head_scc = scc.at(inst.ground_head);
        for (const Atom& b : inst.ground_body) {
            if (full.is_fact(b))
                continue;
            auto it = scc.find(b);
            if (it == scc.end() || it->second != head_scc)
                continue;
            if (model.atoms.at(b) >= head_round) {
                constructive[i] = false;
                break;
            }
        }
        if (constructive[i])
            by_head[inst.ground_head].push_back(i);
    }

    // Backward reachability from the query. Body atoms that are example
    // facts become fact leaves, so their deriving instances stay out.
    std::set<Atom> needed;
    std::vector<bool> keep(full.instances.size(), false);
    std::vector<Atom> worklist{query};
    needed.insert(query);
    while (!worklist.empty()) {
        Atom atom = worklist.back();
        worklist.pop_back();
        auto it = by_head.find(atom);
        if (it == by_head.end())
            continue;
        for (std::size_t idx : it->second) {
            keep[idx] = true;
            for (const Atom& b : full.instances[idx].ground_body) {
                if (needed.insert(b).second && !full.is_fact(b))
                    worklist.push_back(b);
            }
        }
    }

    GroundProgram filtered;
    filtered.model = std::move(full.model);
    for (std::size_t i = 0; i < full.instances.size(); ++i)
        if (keep[i])
            filtered.instances.push_back(std::move(full.instances[i]));
    for (const auto& [atom, value] : full.facts)
        if (needed.count(atom))
            filtered.facts.emplace(atom, value);
    return filtered;
}

std::string dump_ground_program(const GroundProgram& gp) {
    std::string out;
    for (const auto& inst : gp.instances) {
        out += std::to_string(inst.rule_index);
        out += ": ";
        out += inst.ground_head.to_string();
        out += " <-";
        for (std::size_t i = 0; i < inst.ground_body.size(); ++i) {
            out += i ? ", " : " ";
            out += inst.ground_body[i].to_string();
        }
        out += '\n';
    }
    return out;
}

} // namespace liftc
