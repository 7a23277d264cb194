#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "liftc/ground.hpp"
#include "liftc/logic.hpp"

namespace liftc {

// Dense node index; after finalization ids are topologically ordered
// (inputs precede consumers).
using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { fact, rule, aggregation, atom };

const char* to_string(NodeKind k);

struct NodeInput {
    NodeId node;
    WeightSpec weight; // Absent = identity

    bool operator==(const NodeInput&) const = default;
};

struct Node {
    NodeId id = 0;
    NodeKind kind = NodeKind::fact;
    std::vector<NodeInput> inputs;
    Activation activation = Activation::identity; // rule/atom nodes
    Aggregation aggregation = Aggregation::avg;   // aggregation nodes
    Atom origin;                 // the ground atom (rule nodes: the ground head)
    std::size_t rule_index = 0;  // rule/aggregation nodes
    TensorValue fixed_value;     // fact nodes
    // Fact nodes of a trainable predicate read their value from the store
    // under this slot instead; fixed_value keeps the initialization.
    std::string fact_slot;
};

struct ComputationGraph {
    std::vector<Node> nodes; // topologically sorted; nodes[i].id == i
    NodeId output = 0;
    std::set<std::string> param_slots;

    std::size_t edge_count() const;
    std::size_t depth() const;
    std::size_t count(NodeKind k) const;
};

// What feeds the output when the query atom is both an example fact and
// derivable: the derived atom node with the fact as an extra input (merge,
// the default), the derived node alone, or the bare fact node.
enum class OverlapPolicy : std::uint8_t { merge, derived_only, fact_only };

struct BuildOptions {
    OverlapPolicy overlap = OverlapPolicy::merge;
};

// Builds the computation graph for a query over a ground program produced by
// ground_for_query. Node kinds follow the ground model: one fact node per
// used example fact, one rule node per instance, one aggregation node per
// (rule, ground head) pair, one atom node per derived ground atom.
//
// An unweighted body literal standing on a fact with scalar value 1 is a
// purely logical condition: it gates the derivation but contributes no term
// to the rule-node sum. A rule node left with no numeric inputs outputs the
// neutral value 1 through its activation.
ComputationGraph build_graph(const Template& tpl, const GroundProgram& ground,
                             const Atom& query, const BuildOptions& opts = {});

// Splices out nodes with a single unweighted input whose function is the
// identity on one input (any aggregation, or an activation tagged identity),
// then restricts the graph to the connected component of the output.
ComputationGraph prune(const ComputationGraph& graph);

// Level-structured form: every entry reads only the previous level; inputs
// that span more than one level are routed through identity carry entries.
struct LayerEntry {
    NodeId node = 0; // original node for real entries; forwarded node for carries
    bool carry = false;
    NodeKind kind = NodeKind::fact;
    Activation activation = Activation::identity;
    Aggregation aggregation = Aggregation::avg;
    // (position in previous level, weight); empty on level 0 and carries.
    std::vector<std::pair<std::size_t, WeightSpec>> inputs;
};

struct LayeredGraph {
    std::vector<std::vector<LayerEntry>> levels;
    std::size_t output_level = 0;
    std::size_t output_pos = 0;
    std::size_t skip_entries = 0; // number of identity carries inserted
};

LayeredGraph vectorize(const ComputationGraph& graph);

std::string export_dot(const ComputationGraph& graph);

// One line: `nodes=<n> edges=<e> params=<p> depth=<d>`.
std::string graph_stats(const ComputationGraph& graph);

} // namespace liftc
