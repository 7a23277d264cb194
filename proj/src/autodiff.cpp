#include "liftc/autodiff.hpp"

#include <algorithm>

namespace liftc {

namespace {

const TensorValue& weight_value(const WeightSpec& w, const ParameterStore& params) {
    if (w.is_fixed())
        return w.fixed_ref().value;
    return params.at(w.learnable_ref().slot);
}

TensorValue apply_tensor_weight(const TensorValue& weight, const TensorValue& v,
                                const std::string& what) {
    if (is_scalar(weight))
        return weight(0, 0) * v;
    if (v.cols() == 1 && weight.cols() == v.rows())
        return weight * v;
    throw ShapeMismatch(what + ": weight " + shape_string(weight) +
                        " does not compose with value " + shape_string(v));
}

std::string slot_name(const WeightSpec& w) {
    return w.is_learnable() ? w.learnable_ref().slot : std::string("<fixed>");
}

void add_contribution(TensorValue& acc, bool& first, const TensorValue& term,
                      const std::string& what) {
    if (first) {
        acc = term;
        first = false;
        return;
    }
    if (acc.rows() != term.rows() || acc.cols() != term.cols())
        throw ShapeMismatch(what + ": summands " + shape_string(acc) + " vs " +
                            shape_string(term));
    acc += term;
}

TensorValue aggregate(Aggregation fn, const std::vector<const TensorValue*>& inputs,
                      const std::string& what) {
    const TensorValue& head = *inputs.front();
    for (const TensorValue* v : inputs) {
        if (v->rows() != head.rows() || v->cols() != head.cols())
            throw ShapeMismatch(what + ": aggregated values " + shape_string(head) + " vs " +
                                shape_string(*v));
    }
    TensorValue out = head;
    switch (fn) {
    case Aggregation::sum:
        for (std::size_t i = 1; i < inputs.size(); ++i)
            out += *inputs[i];
        break;
    case Aggregation::avg:
        for (std::size_t i = 1; i < inputs.size(); ++i)
            out += *inputs[i];
        out /= static_cast<double>(inputs.size());
        break;
    case Aggregation::max:
        for (std::size_t i = 1; i < inputs.size(); ++i)
            out = out.cwiseMax(*inputs[i]);
        break;
    }
    return out;
}

} // namespace

TensorValue apply_weight(const WeightSpec& w, const TensorValue& v,
                         const ParameterStore& params) {
    if (w.is_absent())
        return v;
    TensorValue out = apply_tensor_weight(weight_value(w, params), v, slot_name(w));
    if (w.is_learnable() && w.learnable_ref().bias) {
        const TensorValue& b = params.at(bias_slot_name(w.learnable_ref().slot));
        if (is_scalar(b))
            out.array() += b(0, 0);
        else if (b.rows() == out.rows() && out.cols() == 1)
            out += b;
        else
            throw ShapeMismatch("bias for " + w.learnable_ref().slot + " has shape " +
                                shape_string(b) + " against " + shape_string(out));
    }
    return out;
}

ForwardResult forward(const ComputationGraph& graph, const ParameterStore& params) {
    if (graph.nodes.empty())
        throw Error("forward on an empty graph");
    EvalTape tape;
    tape.pre.resize(graph.nodes.size());
    tape.out.resize(graph.nodes.size());

    for (const Node& node : graph.nodes) {
        TensorValue pre;
        switch (node.kind) {
        case NodeKind::fact:
            pre = node.fact_slot.empty() ? node.fixed_value : params.at(node.fact_slot);
            break;
        case NodeKind::rule:
        case NodeKind::atom: {
            bool first = true;
            for (const auto& in : node.inputs)
                add_contribution(pre, first,
                                 apply_weight(in.weight, tape.out[in.node], params),
                                 "node " + std::to_string(node.id));
            // A rule whose body is purely logical outputs the neutral truth 1.
            if (first)
                pre = scalar_value(1.0);
            break;
        }
        case NodeKind::aggregation: {
            std::vector<const TensorValue*> ins;
            ins.reserve(node.inputs.size());
            for (const auto& in : node.inputs)
                ins.push_back(&tape.out[in.node]);
            pre = aggregate(node.aggregation, ins, "node " + std::to_string(node.id));
            break;
        }
        }
        TensorValue out;
        if (node.kind == NodeKind::rule || node.kind == NodeKind::atom)
            out = apply_activation(node.activation, pre);
        else
            out = pre;
        if (!all_finite(out))
            throw NonFinite("non-finite value at node " + std::to_string(node.id) + " (" +
                            node.origin.to_string() + ")");
        tape.pre[node.id] = std::move(pre);
        tape.out[node.id] = std::move(out);
    }
    return {tape.out[graph.output], std::move(tape)};
}

GradientStore backward(const ComputationGraph& graph, const ParameterStore& params,
                       const EvalTape& tape, const TensorValue& seed) {
    if (tape.out.size() != graph.nodes.size())
        throw Error("tape does not match the graph");
    const TensorValue& out = tape.out[graph.output];
    if (seed.rows() != out.rows() || seed.cols() != out.cols())
        throw ShapeMismatch("seed " + shape_string(seed) + " vs output " + shape_string(out));

    std::vector<TensorValue> adj(graph.nodes.size());
    std::vector<bool> touched(graph.nodes.size(), false);
    auto bump = [&](NodeId id, const TensorValue& g) {
        if (!touched[id]) {
            adj[id] = g;
            touched[id] = true;
        } else {
            adj[id] += g;
        }
    };
    bump(graph.output, seed);

    GradientStore grads;
    for (std::size_t i = graph.nodes.size(); i-- > 0;) {
        const Node& node = graph.nodes[i];
        if (!touched[i])
            continue;
        switch (node.kind) {
        case NodeKind::fact:
            if (!node.fact_slot.empty())
                grads.accumulate(node.fact_slot, adj[i]);
            break;
        case NodeKind::rule:
        case NodeKind::atom: {
            TensorValue up =
                activation_grad(node.activation, tape.pre[i], tape.out[i], adj[i]);
            for (const auto& in : node.inputs) {
                const TensorValue& src = tape.out[in.node];
                if (in.weight.is_absent()) {
                    bump(in.node, up);
                    continue;
                }
                const TensorValue& w = weight_value(in.weight, params);
                if (is_scalar(w)) {
                    bump(in.node, w(0, 0) * up);
                    if (in.weight.is_learnable())
                        grads.accumulate(in.weight.learnable_ref().slot,
                                         scalar_value((up.array() * src.array()).sum()));
                } else {
                    bump(in.node, w.transpose() * up);
                    if (in.weight.is_learnable())
                        grads.accumulate(in.weight.learnable_ref().slot,
                                         up * src.transpose());
                }
                if (in.weight.is_learnable() && in.weight.learnable_ref().bias) {
                    const std::string bias = bias_slot_name(in.weight.learnable_ref().slot);
                    const TensorValue& b = params.at(bias);
                    if (is_scalar(b))
                        grads.accumulate(bias, scalar_value(up.sum()));
                    else
                        grads.accumulate(bias, up);
                }
            }
            break;
        }
        case NodeKind::aggregation: {
            const TensorValue& up = adj[i];
            const std::size_t k = node.inputs.size();
            switch (node.aggregation) {
            case Aggregation::sum:
                for (const auto& in : node.inputs)
                    bump(in.node, up);
                break;
            case Aggregation::avg:
                for (const auto& in : node.inputs)
                    bump(in.node, up / static_cast<double>(k));
                break;
            case Aggregation::max: {
                // The full gradient goes to one input per dimension; ties
                // break toward the lowest node id.
                const TensorValue& agg = tape.out[i];
                std::vector<NodeId> winner(static_cast<std::size_t>(agg.size()));
                for (Eigen::Index r = 0; r < agg.rows(); ++r) {
                    for (Eigen::Index c = 0; c < agg.cols(); ++c) {
                        NodeId best = node.inputs[0].node;
                        bool found = false;
                        for (const auto& in : node.inputs) {
                            if (tape.out[in.node](r, c) == agg(r, c) &&
                                (!found || in.node < best)) {
                                best = in.node;
                                found = true;
                            }
                        }
                        winner[static_cast<std::size_t>(r * agg.cols() + c)] = best;
                    }
                }
                for (const auto& in : node.inputs) {
                    TensorValue g = TensorValue::Zero(agg.rows(), agg.cols());
                    bool any = false;
                    for (Eigen::Index r = 0; r < agg.rows(); ++r) {
                        for (Eigen::Index c = 0; c < agg.cols(); ++c) {
                            if (winner[static_cast<std::size_t>(r * agg.cols() + c)] ==
                                in.node) {
                                g(r, c) = up(r, c);
                                any = true;
                            }
                        }
                    }
                    if (any)
                        bump(in.node, g);
                }
                break;
            }
            }
            break;
        }
        }
    }
    return grads;
}

TensorValue layered_forward(const LayeredGraph& lg, const ComputationGraph& graph,
                            const ParameterStore& params) {
    std::vector<TensorValue> prev;
    TensorValue output;
    for (std::size_t level = 0; level < lg.levels.size(); ++level) {
        std::vector<TensorValue> cur(lg.levels[level].size());
        for (std::size_t p = 0; p < lg.levels[level].size(); ++p) {
            const LayerEntry& e = lg.levels[level][p];
            if (e.carry) {
                cur[p] = prev[e.inputs[0].first];
            } else if (e.kind == NodeKind::fact) {
                const Node& n = graph.nodes[e.node];
                cur[p] = n.fact_slot.empty() ? n.fixed_value : params.at(n.fact_slot);
            } else if (e.kind == NodeKind::aggregation) {
                std::vector<const TensorValue*> ins;
                ins.reserve(e.inputs.size());
                for (const auto& [pos, w] : e.inputs)
                    ins.push_back(&prev[pos]);
                cur[p] = aggregate(e.aggregation, ins, "layer entry");
            } else {
                TensorValue pre;
                bool first = true;
                for (const auto& [pos, w] : e.inputs)
                    add_contribution(pre, first, apply_weight(w, prev[pos], params),
                                     "layer entry");
                if (first)
                    pre = scalar_value(1.0);
                cur[p] = apply_activation(e.activation, pre);
            }
            if (level == lg.output_level && p == lg.output_pos)
                output = cur[p];
        }
        prev = std::move(cur);
    }
    return output;
}

} // namespace liftc
