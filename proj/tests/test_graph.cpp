#include <doctest.h>

#include "liftc/autodiff.hpp"
#include "liftc/graph.hpp"
#include "liftc/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace liftc;
using helpers::atom;
using helpers::C;
using helpers::V;

namespace {

ComputationGraph build_for(const Template& tpl, const Example& ex, const Atom& query) {
    auto gp = ground_for_query(tpl, ex, query);
    REQUIRE(gp.has_value());
    return build_graph(tpl, *gp, query);
}

} // namespace

TEST_CASE("hydrogen graph matches the table of node kinds") {
    Template tpl = helpers::molecular_template();
    ComputationGraph g = build_for(tpl, helpers::h2_example(), atom("q"));
    CHECK(g.count(NodeKind::fact) == 4);
    CHECK(g.count(NodeKind::rule) == 4); // h(h1), h(h2), q <- h1, q <- h2
    CHECK(g.count(NodeKind::aggregation) == 3);
    CHECK(g.count(NodeKind::atom) == 3);
    CHECK(g.nodes[g.output].kind == NodeKind::atom);
    CHECK(g.nodes[g.output].origin == atom("q"));
    // Node ids are topological.
    for (const auto& n : g.nodes)
        for (const auto& in : n.inputs)
            CHECK(in.node < n.id);
}

TEST_CASE("water graph matches the counting oracle") {
    Template tpl = helpers::molecular_template();
    Example ex = helpers::h2o_example();
    auto gp = ground_for_query(tpl, ex, atom("q"));
    REQUIRE(gp.has_value());
    ComputationGraph g = build_graph(tpl, *gp, atom("q"));
    auto counts = oracle::count_structure(tpl, *gp, atom("q"));
    CHECK(g.count(NodeKind::fact) == counts.facts);
    CHECK(g.count(NodeKind::rule) == counts.rules);
    CHECK(g.count(NodeKind::aggregation) == counts.aggregations);
    CHECK(g.count(NodeKind::atom) == counts.atoms);
}

TEST_CASE("propositional chain builds Fact-Rule-Aggregation-Atom") {
    Template tpl = parse_template("W2 :: q :- W1 : f.");
    Example ex = parse_examples("0.5 :: f.\n1 :: q ?")[0];
    ComputationGraph g = build_for(tpl, ex, atom("q"));
    REQUIRE(g.nodes.size() == 4);
    CHECK(g.nodes[0].kind == NodeKind::fact);
    CHECK(g.nodes[1].kind == NodeKind::rule);
    CHECK(g.nodes[2].kind == NodeKind::aggregation);
    CHECK(g.nodes[3].kind == NodeKind::atom);

    // Pruning removes the single-input unweighted aggregation node.
    ComputationGraph p = prune(g);
    CHECK(p.nodes.size() == 3);
    CHECK(p.count(NodeKind::aggregation) == 0);

    ParameterStore params;
    params.set("W1", scalar_value(3.0));
    params.set("W2", scalar_value(2.0));
    CHECK(forward(g, params).output(0, 0) == doctest::Approx(3.0));
    CHECK(forward(p, params).output(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("gcn on a single self-looped node composes as expected") {
    Template tpl = parse_template("#config and=relu, or=identity, agg=avg.\n"
                                  "W {2,2} :: h1(V) :- Win {2,2} : f(U), edge(V,U).\n");
    Example ex = parse_examples("[1, -2] :: f(n1). edge(n1,n1).")[0];
    ComputationGraph g = build_for(tpl, ex, atom("h1", {C("n1")}));
    ParameterStore params;
    TensorValue win(2, 2), w(2, 2);
    win << 1, 1, 0, -1;
    w << 2, 0, 0, 2;
    params.set("Win", win);
    params.set("W", w);
    // g_or(W . g_avg(g_relu(Win . f))) with f = [1, -2]
    TensorValue expected = w * (win * vector_value({1, -2})).cwiseMax(0.0);
    CHECK(forward(g, params).output.isApprox(expected, 1e-12));
}

TEST_CASE("structural facts are gated out of the numeric graph") {
    Template tpl = parse_template("W :: h1(V) :- f(U), edge(V,U).");
    Example ex = parse_examples("[1, 2] :: f(n1). edge(n1,n1).")[0];
    ComputationGraph g = build_for(tpl, ex, atom("h1", {C("n1")}));
    // The edge fact carries scalar 1 and no weight: it must not appear.
    CHECK(g.count(NodeKind::fact) == 1);
    // A weighted scalar-1 fact does appear.
    Template tpl2 = parse_template("W :: h1(V) :- f(U), We : edge(V,U).");
    ComputationGraph g2 = build_for(tpl2, ex, atom("h1", {C("n1")}));
    CHECK(g2.count(NodeKind::fact) == 2);
}

TEST_CASE("rule with a fully gated body outputs the neutral 1") {
    Template tpl = parse_template("W {3,1} :: h0(X) :- t(X).");
    Example ex = parse_examples("t(c1).")[0];
    ComputationGraph g = build_for(tpl, ex, atom("h0", {C("c1")}));
    ParameterStore params;
    params.set("W", vector_value({0.5, -1.0, 2.0}));
    TensorValue out = forward(g, params).output;
    CHECK(out.isApprox(vector_value({0.5, -1.0, 2.0}), 1e-12));
    // The neutral rule is a source in the layered form too.
    CHECK(layered_forward(vectorize(g), g, params).isApprox(out, 1e-12));
    ComputationGraph p = prune(g);
    CHECK(layered_forward(vectorize(p), p, params).isApprox(out, 1e-12));
}

TEST_CASE("prune is the identity when nothing is spliceable") {
    Template tpl = helpers::molecular_template();
    ComputationGraph g = build_for(tpl, helpers::h2o_example(), atom("q"));
    // Every aggregation with >1 input stays; every single-input node here
    // carries a weight somewhere... prune only drops the per-head single
    // aggregations.
    ComputationGraph p = prune(g);
    ComputationGraph pp = prune(p);
    CHECK(p.nodes.size() == pp.nodes.size());
    CHECK(p.edge_count() == pp.edge_count());
}

TEST_CASE("prune drops branches disconnected from the output") {
    // Hand-built: a fact feeding nothing.
    ComputationGraph g;
    Node live_fact;
    live_fact.id = 0;
    live_fact.kind = NodeKind::fact;
    live_fact.fixed_value = scalar_value(2.0);
    Node dead_fact;
    dead_fact.id = 1;
    dead_fact.kind = NodeKind::fact;
    dead_fact.fixed_value = scalar_value(9.0);
    Node out;
    out.id = 2;
    out.kind = NodeKind::atom;
    out.activation = Activation::identity;
    out.inputs = {{0, WeightSpec::learnable("W")}};
    g.nodes = {live_fact, dead_fact, out};
    g.output = 2;
    g.param_slots = {"W"};
    ComputationGraph p = prune(g);
    CHECK(p.nodes.size() == 2);
    CHECK(p.count(NodeKind::fact) == 1);
}

TEST_CASE("prune preserves forward values on random templates") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        // Chains with unweighted single-literal rules and identity rule
        // activations; atom activations vary.
        std::string text = "#config or=tanh.\n";
        text += "W0 :: h0 :- Win : in.\n";
        const int depth = 1 + static_cast<int>(rng.below(4));
        for (int i = 1; i <= depth; ++i)
            text += "h" + std::to_string(i) + " :- h" + std::to_string(i - 1) + ".\n";
        text += "Wq :: q :- h" + std::to_string(depth) + ".\n";
        Template tpl = parse_template(text);
        Example ex;
        ex.facts.push_back({scalar_value(rng.uniform(-2, 2)), atom("in")});
        ComputationGraph g = build_for(tpl, ex, atom("q"));
        ComputationGraph p = prune(g);
        CHECK(p.nodes.size() < g.nodes.size());
        ParameterStore params;
        for (const auto& slot : g.param_slots)
            params.set(slot, scalar_value(rng.uniform(-2, 2)));
        const double a = forward(g, params).output(0, 0);
        const double b = forward(p, params).output(0, 0);
        CHECK(b == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("vectorize: level structure and skip entries") {
    // A plain chain has no skips.
    Template mlp = parse_template("H1 {2,2} :: h1 :- B1 {2,2} : in.\n"
                                  "H2 {1,2} :: q :- B2 {2,2} : h1.\n");
    Example ex;
    ex.facts.push_back({vector_value({1.0, 2.0}), atom("in")});
    ComputationGraph g = prune(build_for(mlp, ex, atom("q")));
    LayeredGraph lg = vectorize(g);
    CHECK(lg.skip_entries == 0);

    // A residual link spans layers and needs a carry.
    Template skip = parse_template("H1 :: h1 :- B1 : in.\nH2 :: h2 :- B2 : h1.\n"
                                   "q :- W3 : h2.\nq :- W4 : h1.\n");
    ComputationGraph g2 = prune(build_for(skip, ex, atom("q")));
    LayeredGraph lg2 = vectorize(g2);
    CHECK(lg2.skip_entries > 0);

    // Single-fact graph: one level.
    Template direct = parse_template("");
    Example ex2;
    ex2.facts.push_back({scalar_value(4.0), atom("q")});
    auto gp = ground_for_query(direct, ex2, atom("q"));
    REQUIRE(gp.has_value());
    ComputationGraph g3 = build_graph(direct, *gp, atom("q"));
    CHECK(vectorize(g3).levels.size() == 1);
}

TEST_CASE("layered evaluation equals node-wise evaluation") {
    Rng rng(5);
    Example ex = helpers::h2o_example();
    Template scalar_tpl = helpers::molecular_template_scalar();
    ComputationGraph g2 = build_for(scalar_tpl, ex, atom("q"));
    ParameterStore params2;
    for (const auto& slot : g2.param_slots)
        params2.set(slot, scalar_value(rng.uniform(-1, 1)));
    const TensorValue direct = forward(g2, params2).output;
    const TensorValue layered = layered_forward(vectorize(g2), g2, params2);
    CHECK(layered.isApprox(direct, 1e-12));
    ComputationGraph p2 = prune(g2);
    CHECK(layered_forward(vectorize(p2), p2, params2).isApprox(direct, 1e-12));
}

TEST_CASE("dot export carries the fact labels and structure") {
    Template tpl = helpers::molecular_template();
    ComputationGraph g = build_for(tpl, helpers::h2_example(), atom("q"));
    const std::string dot = export_dot(g);
    CHECK(dot.find("F_b(h1,h2)") != std::string::npos);
    CHECK(dot.find("A_q") != std::string::npos);
    CHECK(dot.rfind("digraph", 0) == 0);

    ComputationGraph p = prune(g);
    const std::string dot_pruned = export_dot(p);
    // The pruned graph has fewer nodes, hence fewer label lines.
    CHECK(p.nodes.size() < g.nodes.size());

    // Light well-formedness: balanced braces, edges quoted consistently.
    CHECK(std::count(dot.begin(), dot.end(), '{') == std::count(dot.begin(), dot.end(), '}'));
    CHECK(dot.find("->") != std::string::npos);
}

TEST_CASE("graph stats line") {
    Template tpl = parse_template("W2 :: q :- W1 : f.");
    Example ex = parse_examples("0.5 :: f.")[0];
    ComputationGraph g = build_for(tpl, ex, atom("q"));
    CHECK(graph_stats(g) == "nodes=4 edges=3 params=2 depth=3");
}

TEST_CASE("identical inputs produce identical graphs") {
    Template tpl = helpers::molecular_template();
    Example ex = helpers::h2o_example();
    ComputationGraph a = build_for(tpl, ex, atom("q"));
    ComputationGraph b = build_for(tpl, ex, atom("q"));
    REQUIRE(a.nodes.size() == b.nodes.size());
    CHECK(a.output == b.output);
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].kind == b.nodes[i].kind);
        CHECK(a.nodes[i].origin == b.nodes[i].origin);
        CHECK(a.nodes[i].inputs == b.nodes[i].inputs);
    }
}

TEST_CASE("query that is both fact and derived: merge policy") {
    Template tpl = parse_template("W :: q :- Wf : f.");
    Example ex = parse_examples("0.5 :: f. 0.25 :: q.\n1 :: q ?")[0];
    auto gp = ground_for_query(tpl, ex, atom("q"));
    REQUIRE(gp.has_value());

    BuildOptions merge;
    ComputationGraph g = build_graph(tpl, *gp, atom("q"), merge);
    ParameterStore params;
    params.set("W", scalar_value(2.0));
    params.set("Wf", scalar_value(4.0));
    // derived: 2 * (4 * 0.5) = 4, plus the fact 0.25 as an extra input
    CHECK(forward(g, params).output(0, 0) == doctest::Approx(4.25));

    BuildOptions derived_only;
    derived_only.overlap = OverlapPolicy::derived_only;
    ComputationGraph g2 = build_graph(tpl, *gp, atom("q"), derived_only);
    CHECK(forward(g2, params).output(0, 0) == doctest::Approx(4.0));

    BuildOptions fact_only;
    fact_only.overlap = OverlapPolicy::fact_only;
    ComputationGraph g3 = build_graph(tpl, *gp, atom("q"), fact_only);
    CHECK(forward(g3, params).output(0, 0) == doctest::Approx(0.25));
}
