#pragma once

#include "liftc/graph.hpp"
#include "liftc/tensor.hpp"

namespace liftc {

// Per-node cache from a forward pass: pre-activation and output values in
// node-id order.
struct EvalTape {
    std::vector<TensorValue> pre;
    std::vector<TensorValue> out;
};

struct ForwardResult {
    TensorValue output;
    EvalTape tape;
};

// Applies a weight to a value: Absent is the identity, 1x1 weights scale any
// shape, an m x n weight maps n-vectors to m-vectors.
TensorValue apply_weight(const WeightSpec& w, const TensorValue& v,
                         const ParameterStore& params);

ForwardResult forward(const ComputationGraph& graph, const ParameterStore& params);

// Gradients of seed^T * output with respect to every referenced learnable
// slot; shared slots accumulate across uses. The tape must come from a
// forward pass over the same graph and parameters.
GradientStore backward(const ComputationGraph& graph, const ParameterStore& params,
                       const EvalTape& tape, const TensorValue& seed);

// Level-by-level evaluation of the vectorized form; equal to forward() on
// the underlying graph.
TensorValue layered_forward(const LayeredGraph& lg, const ComputationGraph& graph,
                            const ParameterStore& params);

} // namespace liftc
