#include "liftc/graph.hpp"

#include <algorithm>
#include <map>

namespace liftc {

const char* to_string(NodeKind k) {
    switch (k) {
    case NodeKind::fact: return "fact";
    case NodeKind::rule: return "rule";
    case NodeKind::aggregation: return "aggregation";
    case NodeKind::atom: return "atom";
    }
    return "?";
}

std::size_t ComputationGraph::edge_count() const {
    std::size_t edges = 0;
    for (const auto& n : nodes)
        edges += n.inputs.size();
    return edges;
}

std::size_t ComputationGraph::depth() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t best = 0;
    for (const auto& n : nodes) {
        std::size_t d = 0;
        for (const auto& in : n.inputs)
            d = std::max(d, level[in.node] + 1);
        level[n.id] = d;
        best = std::max(best, d);
    }
    return best;
}

std::size_t ComputationGraph::count(NodeKind k) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(),
                      [&](const Node& n) { return n.kind == k; }));
}

namespace {

bool is_scalar_one(const TensorValue& v) { return is_scalar(v) && v(0, 0) == 1.0; }

class Builder {
public:
    Builder(const Template& tpl, const GroundProgram& gp, const BuildOptions& opts)
        : tpl_(tpl), gp_(gp), opts_(opts) {
        for (std::size_t i = 0; i < gp.instances.size(); ++i)
            by_head_[gp.instances[i].ground_head].push_back(i);
    }

    ComputationGraph run(const Atom& query) {
        ComputationGraph graph;
        const bool derived = by_head_.count(query) != 0;
        NodeId out;
        if (derived && !(gp_.is_fact(query) && opts_.overlap == OverlapPolicy::fact_only))
            out = atom_node(query);
        else
            out = fact_node(query);
        graph.nodes = std::move(nodes_);
        graph.output = out;
        for (const auto& n : graph.nodes) {
            for (const auto& in : n.inputs) {
                if (in.weight.is_learnable()) {
                    const auto& l = in.weight.learnable_ref();
                    graph.param_slots.insert(l.slot);
                    if (l.bias)
                        graph.param_slots.insert(bias_slot_name(l.slot));
                }
            }
            if (!n.fact_slot.empty())
                graph.param_slots.insert(n.fact_slot);
        }
        return graph;
    }

private:
    NodeId add(Node n) {
        n.id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(std::move(n));
        return nodes_.back().id;
    }

    // Value of a ground atom in body position: facts resolve to fact leaves,
    // everything else to its atom node.
    NodeId resolve(const Atom& a) {
        if (gp_.is_fact(a))
            return fact_node(a);
        if (by_head_.count(a))
            return atom_node(a);
        throw Error("ground atom " + a.to_string() + " is neither a fact nor derived");
    }

    NodeId fact_node(const Atom& a) {
        if (auto it = fact_nodes_.find(a); it != fact_nodes_.end())
            return it->second;
        auto vit = gp_.facts.find(a);
        if (vit == gp_.facts.end())
            throw Error("no value for fact " + a.to_string());
        Node n;
        n.kind = NodeKind::fact;
        n.origin = a;
        n.fixed_value = vit->second;
        if (tpl_.fns.trainable_fact_predicates.count(a.pred))
            n.fact_slot = "fact:" + a.to_string();
        NodeId id = add(std::move(n));
        fact_nodes_.emplace(a, id);
        return id;
    }

    NodeId rule_node(std::size_t idx) {
        if (auto it = rule_nodes_.find(idx); it != rule_nodes_.end())
            return it->second;
        const auto& inst = gp_.instances[idx];
        const auto& rule = tpl_.rules[inst.rule_index];
        std::vector<NodeInput> inputs;
        for (std::size_t j = 0; j < inst.ground_body.size(); ++j) {
            const WeightSpec& w = rule.body[j].weight;
            const Atom& b = inst.ground_body[j];
            // Unweighted scalar-1 facts gate the derivation without entering
            // the sum; no node is created for them. Trainable facts always
            // enter (their value may move away from 1).
            if (w.is_absent() && gp_.is_fact(b) && is_scalar_one(gp_.facts.at(b)) &&
                !tpl_.fns.trainable_fact_predicates.count(b.pred))
                continue;
            inputs.push_back({resolve(b), with_bias(w)});
        }
        Node n;
        n.kind = NodeKind::rule;
        n.inputs = std::move(inputs);
        n.activation = rule.fns.rule_activation.value_or(tpl_.fns.rule_activation);
        n.origin = inst.ground_head;
        n.rule_index = inst.rule_index;
        NodeId id = add(std::move(n));
        rule_nodes_.emplace(idx, id);
        return id;
    }

    // Marks learnable weights with the template-wide bias flag so evaluation
    // applies W*v + b.
    WeightSpec with_bias(const WeightSpec& w) const {
        if (!tpl_.fns.slot_bias || !w.is_learnable())
            return w;
        LearnableWeight l = w.learnable_ref();
        l.bias = true;
        return WeightSpec::learnable(std::move(l));
    }

    NodeId agg_node(std::size_t rule_index, const Atom& head) {
        auto key = std::make_pair(rule_index, head);
        if (auto it = agg_nodes_.find(key); it != agg_nodes_.end())
            return it->second;
        std::vector<NodeInput> inputs;
        for (std::size_t idx : by_head_.at(head)) {
            if (gp_.instances[idx].rule_index == rule_index)
                inputs.push_back({rule_node(idx), WeightSpec::absent()});
        }
        Node n;
        n.kind = NodeKind::aggregation;
        n.inputs = std::move(inputs);
        n.aggregation =
            tpl_.rules[rule_index].fns.aggregation.value_or(tpl_.fns.aggregation);
        n.origin = head;
        n.rule_index = rule_index;
        NodeId id = add(std::move(n));
        agg_nodes_.emplace(key, id);
        return id;
    }

    NodeId atom_node(const Atom& a) {
        if (auto it = atom_nodes_.find(a); it != atom_nodes_.end())
            return it->second;
        std::vector<std::size_t> rules_of_a;
        for (std::size_t idx : by_head_.at(a)) {
            std::size_t r = gp_.instances[idx].rule_index;
            if (rules_of_a.empty() || rules_of_a.back() != r)
                rules_of_a.push_back(r);
        }
        std::sort(rules_of_a.begin(), rules_of_a.end());
        rules_of_a.erase(std::unique(rules_of_a.begin(), rules_of_a.end()),
                         rules_of_a.end());
        std::vector<NodeInput> inputs;
        for (std::size_t r : rules_of_a)
            inputs.push_back({agg_node(r, a), with_bias(tpl_.rules[r].head_weight)});
        if (gp_.is_fact(a) && opts_.overlap == OverlapPolicy::merge)
            inputs.push_back({fact_node(a), WeightSpec::absent()});
        Node n;
        n.kind = NodeKind::atom;
        n.inputs = std::move(inputs);
        n.activation = tpl_.fns.atom_activation_for(a.pred);
        n.origin = a;
        NodeId id = add(std::move(n));
        atom_nodes_.emplace(a, id);
        return id;
    }

    const Template& tpl_;
    const GroundProgram& gp_;
    BuildOptions opts_;
    std::vector<Node> nodes_;
    std::map<Atom, std::vector<std::size_t>> by_head_;
    std::map<Atom, NodeId> fact_nodes_;
    std::map<Atom, NodeId> atom_nodes_;
    std::map<std::size_t, NodeId> rule_nodes_;
    std::map<std::pair<std::size_t, Atom>, NodeId> agg_nodes_;
};

} // namespace

ComputationGraph build_graph(const Template& tpl, const GroundProgram& ground,
                             const Atom& query, const BuildOptions& opts) {
    return Builder(tpl, ground, opts).run(query);
}

ComputationGraph prune(const ComputationGraph& graph) {
    const std::size_t n = graph.nodes.size();

    // Spliceable: one unweighted input and a function that is the identity on
    // a single input. Aggregations always qualify (avg/max/sum of one value).
    std::vector<bool> spliced(n, false);
    std::vector<NodeId> forward(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = graph.nodes[i];
        forward[i] = node.id;
        if (node.inputs.size() != 1 || !node.inputs[0].weight.is_absent())
            continue;
        if (node.kind == NodeKind::aggregation || node.activation == Activation::identity) {
            spliced[i] = true;
            forward[i] = node.inputs[0].node;
        }
    }
    // Chains of spliced nodes collapse to their first surviving input; ids
    // are topological, so one ascending pass compresses fully.
    for (std::size_t i = 0; i < n; ++i)
        forward[i] = forward[forward[i]];

    const NodeId out = forward[graph.output];

    // Keep the connected component of the output.
    std::vector<bool> keep(n, false);
    std::vector<NodeId> stack{out};
    keep[out] = true;
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        for (const auto& in : graph.nodes[id].inputs) {
            NodeId src = forward[in.node];
            if (!keep[src]) {
                keep[src] = true;
                stack.push_back(src);
            }
        }
    }

    std::vector<NodeId> remap(n, 0);
    ComputationGraph result;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i] || spliced[i])
            continue;
        Node node = graph.nodes[i];
        for (auto& in : node.inputs)
            in.node = remap[forward[in.node]];
        node.id = static_cast<NodeId>(result.nodes.size());
        remap[i] = node.id;
        result.nodes.push_back(std::move(node));
    }
    result.output = remap[out];
    for (const auto& node : result.nodes)
        for (const auto& in : node.inputs)
            if (in.weight.is_learnable())
                result.param_slots.insert(in.weight.learnable_ref().slot);
    return result;
}

LayeredGraph vectorize(const ComputationGraph& graph) {
    const std::size_t n = graph.nodes.size();
    std::vector<std::size_t> depth(n, 0);
    std::size_t max_depth = 0;
    for (const auto& node : graph.nodes) {
        std::size_t d = 0;
        for (const auto& in : node.inputs)
            d = std::max(d, depth[in.node] + 1);
        depth[node.id] = d;
        max_depth = std::max(max_depth, d);
    }

    LayeredGraph lg;
    lg.levels.resize(max_depth + 1);

    // Position of each real node in its level.
    std::vector<std::size_t> pos(n, 0);
    for (const auto& node : graph.nodes) {
        auto& level = lg.levels[depth[node.id]];
        pos[node.id] = level.size();
        LayerEntry e;
        e.node = node.id;
        e.kind = node.kind;
        e.activation = node.activation;
        e.aggregation = node.aggregation;
        level.push_back(std::move(e));
    }

    // Returns the position of `id`'s value at `level`, inserting identity
    // carry entries through intermediate levels for inputs that span more
    // than one level.
    std::map<std::pair<std::size_t, NodeId>, std::size_t> carries;
    auto available_at = [&](auto&& self, NodeId id, std::size_t level) -> std::size_t {
        if (depth[id] == level)
            return pos[id];
        auto key = std::make_pair(level, id);
        if (auto it = carries.find(key); it != carries.end())
            return it->second;
        std::size_t below = self(self, id, level - 1);
        LayerEntry carry;
        carry.node = id;
        carry.carry = true;
        carry.kind = graph.nodes[id].kind;
        carry.inputs.push_back({below, WeightSpec::absent()});
        lg.levels[level].push_back(std::move(carry));
        std::size_t p = lg.levels[level].size() - 1;
        carries.emplace(key, p);
        ++lg.skip_entries;
        return p;
    };

    for (const auto& node : graph.nodes) {
        if (node.inputs.empty())
            continue;
        const std::size_t level = depth[node.id];
        auto& entry = lg.levels[level][pos[node.id]];
        for (const auto& in : node.inputs)
            entry.inputs.push_back(
                {available_at(available_at, in.node, level - 1), in.weight});
    }

    lg.output_level = depth[graph.output];
    lg.output_pos = pos[graph.output];
    return lg;
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

std::string node_label(const Node& n) {
    switch (n.kind) {
    case NodeKind::fact:
        return "F_" + n.origin.to_string();
    case NodeKind::rule:
        return "R" + std::to_string(n.rule_index) + "_" + n.origin.to_string() + " " +
               to_string(n.activation);
    case NodeKind::aggregation:
        return "G" + std::to_string(n.rule_index) + "_" + n.origin.to_string() + " " +
               to_string(n.aggregation);
    case NodeKind::atom:
        return "A_" + n.origin.to_string() + " " + to_string(n.activation);
    }
    return "?";
}

std::string edge_label(const WeightSpec& w) {
    if (w.is_absent())
        return "";
    if (w.is_learnable()) {
        const auto& l = w.learnable_ref();
        std::string s = l.slot;
        if (l.rows != 1 || l.cols != 1)
            s += " {" + std::to_string(l.rows) + "," + std::to_string(l.cols) + "}";
        return s;
    }
    const TensorValue& v = w.fixed_ref().value;
    if (is_scalar(v))
        return format_double(v(0, 0));
    return shape_string(v) + " const";
}

} // namespace

std::string export_dot(const ComputationGraph& graph) {
    std::string out = "digraph G {\n  rankdir=BT;\n";
    for (const auto& n : graph.nodes) {
        out += "  n" + std::to_string(n.id) + " [label=\"" + dot_escape(node_label(n)) + "\"";
        if (n.kind == NodeKind::fact)
            out += ", shape=box";
        else if (n.kind == NodeKind::aggregation)
            out += ", shape=diamond";
        if (n.id == graph.output)
            out += ", penwidth=2";
        out += "];\n";
    }
    for (const auto& n : graph.nodes) {
        for (const auto& in : n.inputs) {
            out += "  n" + std::to_string(in.node) + " -> n" + std::to_string(n.id);
            std::string label = edge_label(in.weight);
            if (!label.empty())
                out += " [label=\"" + dot_escape(label) + "\"]";
            out += ";\n";
        }
    }
    out += "}\n";
    return out;
}

std::string graph_stats(const ComputationGraph& graph) {
    return "nodes=" + std::to_string(graph.nodes.size()) +
           " edges=" + std::to_string(graph.edge_count()) +
           " params=" + std::to_string(graph.param_slots.size()) +
           " depth=" + std::to_string(graph.depth());
}

} // namespace liftc
