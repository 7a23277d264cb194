#include "liftc/logic.hpp"

#include <algorithm>
#include <set>

namespace liftc {

bool Atom::is_ground() const {
    return std::all_of(terms.begin(), terms.end(),
                       [](const Term& t) { return t.is_constant(); });
}

std::string Atom::to_string() const {
    std::string out = pred.text();
    if (!terms.empty()) {
        out += '(';
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (i)
                out += ',';
            out += terms[i].text();
        }
        out += ')';
    }
    return out;
}

Atom make_atom(std::string_view pred, std::initializer_list<Term> terms) {
    Atom a;
    a.pred = Predicate::make(pred, static_cast<std::uint32_t>(terms.size()));
    a.terms.assign(terms);
    return a;
}

std::size_t AtomHash::operator()(const Atom& a) const {
    std::size_t h = a.pred.name * 0x9e3779b97f4a7c15ULL + a.pred.arity;
    for (const Term& t : a.terms) {
        std::size_t k = (static_cast<std::size_t>(t.name) << 1) |
                        static_cast<std::size_t>(t.kind);
        h ^= k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

bool Substitution::bind(Symbol var, Term value) {
    auto it = std::lower_bound(bindings_.begin(), bindings_.end(), var,
                               [](const auto& p, Symbol v) { return p.first < v; });
    if (it != bindings_.end() && it->first == var)
        return it->second == value;
    bindings_.insert(it, {var, value});
    return true;
}

const Term* Substitution::lookup(Symbol var) const {
    auto it = std::lower_bound(bindings_.begin(), bindings_.end(), var,
                               [](const auto& p, Symbol v) { return p.first < v; });
    if (it != bindings_.end() && it->first == var)
        return &it->second;
    return nullptr;
}

Atom apply_substitution(const Atom& atom, const Substitution& theta) {
    Atom out = atom;
    for (Term& t : out.terms) {
        if (t.is_variable()) {
            if (const Term* bound = theta.lookup(t.name))
                t = *bound;
        }
    }
    return out;
}

std::optional<Substitution> match_atom(const Atom& pattern, const Atom& ground,
                                       const Substitution& partial) {
    if (pattern.pred != ground.pred)
        return std::nullopt;
    Substitution theta = partial;
    for (std::size_t i = 0; i < pattern.terms.size(); ++i) {
        const Term& p = pattern.terms[i];
        const Term& g = ground.terms[i];
        if (p.is_constant()) {
            if (p != g)
                return std::nullopt;
        } else if (!theta.bind(p.name, g)) {
            return std::nullopt;
        }
    }
    return theta;
}

std::map<std::string, SlotShape> Template::parameter_slots() const {
    std::map<std::string, SlotShape> slots;
    auto collect = [&](const WeightSpec& w) {
        if (w.is_learnable()) {
            const auto& l = w.learnable_ref();
            slots.emplace(l.slot, SlotShape{l.rows, l.cols});
            if (fns.slot_bias)
                slots.emplace(bias_slot_name(l.slot), SlotShape{l.rows, 1});
        }
    };
    for (const auto& rule : rules) {
        collect(rule.head_weight);
        for (const auto& lit : rule.body)
            collect(lit.weight);
    }
    return slots;
}

namespace {

// Output dimension lattice for the conservative shape checker.
struct Dim {
    bool known = false;
    int value = 0;
};

int weight_rows(const WeightSpec& w) {
    if (w.is_learnable())
        return w.learnable_ref().rows;
    if (w.is_fixed())
        return static_cast<int>(w.fixed_ref().value.rows());
    return 0;
}

int weight_cols(const WeightSpec& w) {
    if (w.is_learnable())
        return w.learnable_ref().cols;
    if (w.is_fixed())
        return static_cast<int>(w.fixed_ref().value.cols());
    return 0;
}

bool is_scalar_weight(const WeightSpec& w) {
    return !w.is_absent() && weight_rows(w) == 1 && weight_cols(w) == 1;
}

} // namespace

std::vector<Diagnostic> validate_template(const Template& tpl) {
    std::vector<Diagnostic> diags;

    // Range safety: every head variable must occur in the body, otherwise the
    // grounding would be infinite.
    for (std::size_t i = 0; i < tpl.rules.size(); ++i) {
        const auto& rule = tpl.rules[i];
        std::set<Symbol> body_vars;
        for (const auto& lit : rule.body)
            for (const Term& t : lit.atom.terms)
                if (t.is_variable())
                    body_vars.insert(t.name);
        for (const Term& t : rule.head.terms) {
            if (t.is_variable() && !body_vars.count(t.name))
                diags.push_back({static_cast<int>(i),
                                 "head variable " + t.text() + " does not occur in the body"});
        }
    }

    // One declared shape per slot id.
    std::map<std::string, std::pair<SlotShape, int>> seen;
    auto check_slot = [&](const WeightSpec& w, int rule_index) {
        if (!w.is_learnable())
            return;
        const auto& l = w.learnable_ref();
        SlotShape shape{l.rows, l.cols};
        auto [it, inserted] = seen.emplace(l.slot, std::make_pair(shape, rule_index));
        if (!inserted && !(it->second.first == shape)) {
            diags.push_back({rule_index, "slot " + l.slot + " declared with shape " +
                                             std::to_string(shape.rows) + "x" +
                                             std::to_string(shape.cols) + " but rule " +
                                             std::to_string(it->second.second) + " declared " +
                                             std::to_string(it->second.first.rows) + "x" +
                                             std::to_string(it->second.first.cols)});
        }
    };
    for (std::size_t i = 0; i < tpl.rules.size(); ++i) {
        check_slot(tpl.rules[i].head_weight, static_cast<int>(i));
        for (const auto& lit : tpl.rules[i].body)
            check_slot(lit.weight, static_cast<int>(i));
    }

    // Conservative shape composition: propagate known predicate output
    // dimensions to a fixpoint and report only definite mismatches. Fact
    // predicates stay unknown (their dimension depends on example values).
    std::map<Predicate, Dim> atom_dim;
    auto note = [&](int rule, const std::string& msg) {
        for (const auto& d : diags)
            if (d.rule_index == rule && d.message == msg)
                return;
        diags.push_back({rule, msg});
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < tpl.rules.size(); ++i) {
            const auto& rule = tpl.rules[i];
            const int ri = static_cast<int>(i);
            Dim rule_dim;
            for (const auto& lit : rule.body) {
                Dim contrib;
                Dim in_dim = atom_dim[lit.atom.pred];
                if (lit.weight.is_absent()) {
                    contrib = in_dim;
                } else if (is_scalar_weight(lit.weight)) {
                    contrib = in_dim; // scalar weights scale without reshaping
                } else {
                    contrib = {true, weight_rows(lit.weight)};
                    if (in_dim.known && weight_cols(lit.weight) != in_dim.value &&
                        weight_cols(lit.weight) != 1)
                        note(ri, "weight on " + lit.atom.to_string() + " expects " +
                                     std::to_string(weight_cols(lit.weight)) +
                                     "-dimensional input but " + lit.atom.pred.text() +
                                     " produces " + std::to_string(in_dim.value));
                }
                if (contrib.known) {
                    if (rule_dim.known && rule_dim.value != contrib.value)
                        note(ri, "body contributions disagree on dimension (" +
                                     std::to_string(rule_dim.value) + " vs " +
                                     std::to_string(contrib.value) + ")");
                    else
                        rule_dim = contrib;
                }
            }
            Dim head_dim;
            if (rule.head_weight.is_absent() || is_scalar_weight(rule.head_weight)) {
                head_dim = rule_dim;
            } else {
                head_dim = {true, weight_rows(rule.head_weight)};
                if (rule_dim.known && weight_cols(rule.head_weight) != rule_dim.value &&
                    weight_cols(rule.head_weight) != 1)
                    note(ri, "head weight expects " +
                                 std::to_string(weight_cols(rule.head_weight)) +
                                 "-dimensional input but the body produces " +
                                 std::to_string(rule_dim.value));
            }
            if (head_dim.known) {
                Dim& dim = atom_dim[rule.head.pred];
                if (!dim.known) {
                    dim = head_dim;
                    changed = true;
                } else if (dim.value != head_dim.value) {
                    note(ri, "rules for " + rule.head.pred.text() +
                                 " produce conflicting dimensions (" +
                                 std::to_string(dim.value) + " vs " +
                                 std::to_string(head_dim.value) + ")");
                }
            }
        }
    }

    return diags;
}

} // namespace liftc
