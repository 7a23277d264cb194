#include "liftc/zoo.hpp"

#include <filesystem>
#include <fstream>

#include "liftc/parse.hpp"

namespace liftc {

const char* zoo_name(ZooModel m) {
    switch (m) {
    case ZooModel::mlp: return "mlp";
    case ZooModel::cnn1d: return "cnn1d";
    case ZooModel::recurrent: return "recurrent";
    case ZooModel::recursive: return "recursive";
    case ZooModel::gcn: return "gcn";
    case ZooModel::gsage: return "gsage";
    case ZooModel::gin0: return "gin0";
    case ZooModel::ginStar: return "ginStar";
    case ZooModel::graphlets: return "graphlets";
    case ZooModel::latentBonds: return "latentBonds";
    }
    return "?";
}

std::optional<ZooModel> zoo_from_name(std::string_view name) {
    for (ZooModel m : zoo_models())
        if (name == zoo_name(m))
            return m;
    return std::nullopt;
}

std::vector<ZooModel> zoo_models() {
    return {ZooModel::mlp,       ZooModel::cnn1d,   ZooModel::recurrent,
            ZooModel::recursive, ZooModel::gcn,     ZooModel::gsage,
            ZooModel::gin0,      ZooModel::ginStar, ZooModel::graphlets,
            ZooModel::latentBonds};
}

ZooSpec default_spec(ZooModel m) {
    ZooSpec spec;
    spec.model = m;
    switch (m) {
    case ZooModel::gcn:
    case ZooModel::gsage:
    case ZooModel::mlp:
        spec.layers = 2;
        break;
    case ZooModel::gin0:
    case ZooModel::ginStar:
    case ZooModel::graphlets:
    case ZooModel::latentBonds:
        spec.layers = 5;
        break;
    case ZooModel::cnn1d:
    case ZooModel::recurrent:
    case ZooModel::recursive:
        spec.layers = 1;
        break;
    }
    return spec;
}

namespace {

Term V(const char* n) { return Term::variable(n); }

Atom atom0(const std::string& pred) {
    Atom a;
    a.pred = Predicate::make(pred, 0);
    return a;
}

Atom atom(const std::string& pred, std::vector<Term> terms) {
    Atom a;
    a.pred = Predicate::make(pred, static_cast<std::uint32_t>(terms.size()));
    a.terms = std::move(terms);
    return a;
}

WeightSpec slot(const std::string& name, int rows, int cols) {
    return WeightSpec::learnable(name, rows, cols);
}

struct TemplateBuilder {
    Template tpl;

    WeightedRule& rule(WeightSpec head_weight, Atom head) {
        WeightedRule r;
        r.head_weight = std::move(head_weight);
        r.head = std::move(head);
        tpl.rules.push_back(std::move(r));
        return tpl.rules.back();
    }

    static void lit(WeightedRule& r, WeightSpec w, Atom a) {
        r.body.push_back({std::move(w), std::move(a)});
    }
    static void lit(WeightedRule& r, Atom a) {
        r.body.push_back({WeightSpec::absent(), std::move(a)});
    }
    static void fns(WeightedRule& r, std::optional<Activation> act,
                    std::optional<Aggregation> agg) {
        r.fns.rule_activation = act;
        r.fns.aggregation = agg;
    }
};

std::string layer_pred(int i) { return "h" + std::to_string(i); }

// The input layer of the graph models: either the single feature predicate
// itself, or an `h0` embedding derived from the unary type predicates.
std::string input_layer(TemplateBuilder& b, const ZooSpec& spec) {
    if (spec.feature_predicates.size() == 1)
        return spec.feature_predicates.front();
    for (const auto& pred : spec.feature_predicates) {
        auto& r = b.rule(slot("E_" + pred, spec.input_dim, 1), atom("h0", {V("X")}));
        TemplateBuilder::lit(r, atom(pred, {V("X")}));
        TemplateBuilder::fns(r, Activation::identity, std::nullopt);
    }
    return "h0";
}

void check(bool ok, const std::string& msg) {
    if (!ok)
        throw ConfigError(msg);
}

Template make_gcn(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    b.tpl.fns.aggregation = Aggregation::avg;
    const std::string in = input_layer(b, spec);
    for (int i = 1; i <= spec.layers; ++i) {
        const int prev = i == 1 ? spec.input_dim : spec.dim;
        auto& r = b.rule(slot("W" + std::to_string(i), spec.dim, prev),
                         atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(r, atom(i == 1 ? in : layer_pred(i - 1), {V("U")}));
        TemplateBuilder::lit(r, atom(spec.edge_predicate, {V("V"), V("U")}));
        // The nonlinearity sits one node later than in the usual statement
        // of the update rule; with a linear first layer the composite is the
        // same function and the readout's relu supplies the final one.
        if (i == 1)
            TemplateBuilder::fns(r, Activation::identity, std::nullopt);
    }
    auto& q = b.rule(slot("Wq", 1, spec.dim), atom0("q"));
    TemplateBuilder::lit(q, atom(layer_pred(spec.layers), {V("U")}));
    return std::move(b.tpl);
}

Template make_gsage(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    b.tpl.fns.aggregation = Aggregation::max;
    const std::string in = input_layer(b, spec);
    for (int i = 1; i <= spec.layers; ++i) {
        const int prev = i == 1 ? spec.input_dim : spec.dim;
        const std::string x = i == 1 ? in : layer_pred(i - 1);
        auto& n = b.rule(WeightSpec::absent(), atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(n, slot("Wn" + std::to_string(i), spec.dim, prev),
                             atom(x, {V("U")}));
        TemplateBuilder::lit(n, atom(spec.edge_predicate, {V("V"), V("U")}));
        auto& s = b.rule(WeightSpec::absent(), atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(s, slot("Ws" + std::to_string(i), spec.dim, prev),
                             atom(x, {V("V")}));
    }
    auto& q = b.rule(slot("Wq", 1, spec.dim), atom0("q"));
    TemplateBuilder::lit(q, atom(layer_pred(spec.layers), {V("U")}));
    TemplateBuilder::fns(q, Activation::identity, Aggregation::avg);
    return std::move(b.tpl);
}

// Shared base for the GIN family: two rules per layer (weighted neighbors
// with sum aggregation, weighted self), relu atoms, jumping-knowledge
// readout rules from every layer. The flags switch on the fully
// parameterized ginStar variant.
Template make_gin(const ZooSpec& spec, bool edge_slots, bool readout_body_slots) {
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    b.tpl.fns.aggregation = Aggregation::sum;
    const std::string in = input_layer(b, spec);
    for (int i = 1; i <= spec.layers; ++i) {
        const int prev = i == 1 ? spec.input_dim : spec.dim;
        const std::string x = i == 1 ? in : layer_pred(i - 1);
        const std::string si = std::to_string(i);
        b.tpl.fns.atom_overrides[Predicate::make(layer_pred(i), 1)] = Activation::relu;

        if (spec.epsilon) {
            // The explicit (1+eps) form: both branches collect into an
            // auxiliary atom and a single 2-layer MLP rule follows.
            auto& n = b.rule(WeightSpec::absent(), atom("mlp" + si, {V("V")}));
            TemplateBuilder::lit(n, atom(x, {V("U")}));
            TemplateBuilder::lit(n, atom(spec.edge_predicate, {V("V"), V("U")}));
            TemplateBuilder::fns(n, Activation::identity, std::nullopt);
            auto& s = b.rule(WeightSpec::absent(), atom("mlp" + si, {V("V")}));
            TemplateBuilder::lit(s, WeightSpec::fixed(scalar_value(1.0 + *spec.epsilon)),
                                 atom(x, {V("V")}));
            TemplateBuilder::fns(s, Activation::identity, std::nullopt);
            b.tpl.fns.atom_overrides[Predicate::make("mlp" + si, 1)] =
                Activation::identity;
            auto& m = b.rule(slot("H" + si, spec.dim, spec.dim),
                             atom(layer_pred(i), {V("V")}));
            TemplateBuilder::lit(m, slot("W" + si, spec.dim, prev),
                                 atom("mlp" + si, {V("V")}));
            continue;
        }

        auto& n = b.rule(slot("Ha" + si, spec.dim, spec.dim),
                         atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(n, slot("Wa" + si, spec.dim, prev), atom(x, {V("U")}));
        if (edge_slots)
            TemplateBuilder::lit(n, slot("We" + si, spec.dim, 1),
                                 atom(spec.edge_predicate, {V("V"), V("U")}));
        else
            TemplateBuilder::lit(n, atom(spec.edge_predicate, {V("V"), V("U")}));
        auto& s = b.rule(slot("Hb" + si, spec.dim, spec.dim),
                         atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(s, slot("Wb" + si, spec.dim, prev), atom(x, {V("V")}));
    }
    // Jumping knowledge: the readout aggregates every layer.
    for (int i = 1; i <= spec.layers; ++i) {
        const std::string si = std::to_string(i);
        auto& q = b.rule(slot("Wq" + si, 1, spec.dim), atom0("q"));
        if (readout_body_slots)
            TemplateBuilder::lit(q, slot("Wqb" + si, spec.dim, spec.dim),
                                 atom(layer_pred(i), {V("U")}));
        else
            TemplateBuilder::lit(q, atom(layer_pred(i), {V("U")}));
        TemplateBuilder::fns(q, Activation::identity, Aggregation::avg);
    }
    return std::move(b.tpl);
}

Template make_graphlets(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl = make_gin(spec, false, false);
    const std::string hl = layer_pred(spec.layers);
    b.tpl.fns.atom_overrides[Predicate::make("motif", 3)] = Activation::relu;
    auto& m = b.rule(slot("Wm", spec.dim, spec.dim),
                     atom("motif", {V("U"), V("V"), V("W")}));
    TemplateBuilder::lit(m, slot("Wm1", spec.dim, spec.dim), atom(hl, {V("U")}));
    TemplateBuilder::lit(m, slot("Wm2", spec.dim, spec.dim), atom(hl, {V("V")}));
    TemplateBuilder::lit(m, slot("Wm3", spec.dim, spec.dim), atom(hl, {V("W")}));
    TemplateBuilder::lit(m, atom(spec.edge_predicate, {V("U"), V("V")}));
    TemplateBuilder::lit(m, atom(spec.edge_predicate, {V("V"), V("W")}));
    TemplateBuilder::lit(m, atom(spec.edge_predicate, {V("W"), V("U")}));
    auto& q = b.rule(slot("Wqm", 1, spec.dim), atom0("q"));
    TemplateBuilder::lit(q, atom("motif", {V("U"), V("V"), V("W")}));
    TemplateBuilder::fns(q, Activation::identity, Aggregation::avg);
    return std::move(b.tpl);
}

Template make_latent_bonds(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl = make_gin(spec, false, false);
    // Edge representations aggregated into a latent hierarchy alongside the
    // node stream.
    auto& e1 = b.rule(slot("He1", spec.dim, 1), atom("he1", {V("U"), V("V")}));
    TemplateBuilder::lit(e1, atom(spec.edge_predicate, {V("U"), V("V")}));
    TemplateBuilder::fns(e1, Activation::identity, std::nullopt);
    b.tpl.fns.atom_overrides[Predicate::make("he1", 2)] = Activation::relu;
    for (int i = 2; i <= spec.layers; ++i) {
        const std::string si = std::to_string(i);
        b.tpl.fns.atom_overrides[Predicate::make("he" + si, 2)] = Activation::relu;
        auto& e = b.rule(slot("He" + si, spec.dim, spec.dim),
                         atom("he" + si, {V("U"), V("V")}));
        TemplateBuilder::lit(e, atom("he" + std::to_string(i - 1), {V("V"), V("W")}));
        TemplateBuilder::lit(e, atom(spec.edge_predicate, {V("U"), V("V")}));
        TemplateBuilder::fns(e, Activation::relu, Aggregation::avg);
    }
    // Inject the edge stream into the node stream at each layer.
    for (int i = 1; i <= spec.layers; ++i) {
        const std::string si = std::to_string(i);
        auto& r = b.rule(WeightSpec::absent(), atom(layer_pred(i), {V("V")}));
        TemplateBuilder::lit(r, slot("Wne" + si, spec.dim, spec.dim),
                             atom("he" + si, {V("V"), V("U")}));
        TemplateBuilder::fns(r, Activation::relu, Aggregation::avg);
    }
    return std::move(b.tpl);
}

Template make_mlp(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    for (int i = 1; i <= spec.layers; ++i) {
        const std::string si = std::to_string(i);
        const bool last = i == spec.layers;
        const int in_dim = i == 1 ? spec.input_dim : spec.dim;
        auto& r = b.rule(slot("H" + si, last ? 1 : spec.dim, spec.dim),
                         last ? atom0("q") : atom0(layer_pred(i)));
        TemplateBuilder::lit(r, slot("B" + si, spec.dim, in_dim),
                             i == 1 ? atom0("in") : atom0(layer_pred(i - 1)));
    }
    return std::move(b.tpl);
}

Template make_cnn1d(const ZooSpec& spec) {
    check(spec.kernel >= 1, "cnn1d needs a kernel width of at least 1");
    TemplateBuilder b;
    b.tpl.fns.atom_activation = Activation::identity;
    // One relational rule is the convolution; its aggregation node is the
    // pooling layer over all filter positions.
    auto& conv = b.rule(slot("Wh", 1, 1), atom0("h"));
    std::vector<Term> pix;
    for (int j = 0; j < spec.kernel; ++j)
        pix.push_back(Term::variable("P" + std::to_string(j + 1)));
    for (int j = 0; j < spec.kernel; ++j)
        TemplateBuilder::lit(conv, slot("w" + std::to_string(j + 1), 1, 1),
                             atom("f", {pix[static_cast<std::size_t>(j)]}));
    for (int j = 0; j + 1 < spec.kernel; ++j)
        TemplateBuilder::lit(conv, atom("next", {pix[static_cast<std::size_t>(j)],
                                                 pix[static_cast<std::size_t>(j) + 1]}));
    TemplateBuilder::fns(conv, Activation::identity, Aggregation::max);
    auto& q = b.rule(slot("Wq", 1, 1), atom0("q"));
    TemplateBuilder::lit(q, slot("Wb", 1, 1), atom0("h"));
    TemplateBuilder::fns(q, Activation::relu, std::nullopt);
    return std::move(b.tpl);
}

Template make_recurrent(const ZooSpec& spec) {
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    auto& init = b.rule(WeightSpec::absent(), atom("h", {V("X")}));
    TemplateBuilder::lit(init, slot("W0", spec.dim, spec.input_dim), atom("f", {V("X")}));
    TemplateBuilder::lit(init, atom("first", {V("X")}));
    auto& step = b.rule(WeightSpec::absent(), atom("h", {V("Y")}));
    TemplateBuilder::lit(step, slot("Wf", spec.dim, spec.input_dim), atom("f", {V("Y")}));
    TemplateBuilder::lit(step, slot("Wh", spec.dim, spec.dim), atom("h", {V("X")}));
    TemplateBuilder::lit(step, atom("next", {V("X"), V("Y")}));
    auto& q = b.rule(slot("Wq", 1, spec.dim), atom0("q"));
    TemplateBuilder::lit(q, slot("Wl", spec.dim, spec.dim), atom("h", {V("X")}));
    TemplateBuilder::lit(q, atom("last", {V("X")}));
    TemplateBuilder::fns(q, Activation::identity, Aggregation::avg);
    return std::move(b.tpl);
}

Template make_recursive(const ZooSpec& spec) {
    check(spec.arity >= 1, "recursive needs arity >= 1");
    TemplateBuilder b;
    b.tpl.fns.rule_activation = Activation::relu;
    b.tpl.fns.atom_activation = Activation::identity;
    auto& leaf = b.rule(WeightSpec::absent(), atom("n", {V("X")}));
    TemplateBuilder::lit(leaf, slot("Wleaf", spec.dim, spec.input_dim), atom("f", {V("X")}));
    // One shared combining rule over the whole tree.
    auto& comb = b.rule(WeightSpec::absent(), atom("n", {V("P")}));
    std::vector<Term> kids{V("P")};
    for (int j = 0; j < spec.arity; ++j)
        kids.push_back(Term::variable("C" + std::to_string(j + 1)));
    for (int j = 0; j < spec.arity; ++j)
        TemplateBuilder::lit(comb, slot("Wc" + std::to_string(j + 1), spec.dim, spec.dim),
                             atom("n", {kids[static_cast<std::size_t>(j) + 1]}));
    TemplateBuilder::lit(comb, atom("parent", kids));
    auto& q = b.rule(slot("Wq", 1, spec.dim), atom0("q"));
    TemplateBuilder::lit(q, slot("Wr", spec.dim, spec.dim), atom("n", {V("X")}));
    TemplateBuilder::lit(q, atom("root", {V("X")}));
    TemplateBuilder::fns(q, Activation::identity, Aggregation::avg);
    return std::move(b.tpl);
}

} // namespace

Template instantiate(const ZooSpec& raw) {
    ZooSpec spec = raw;
    if (spec.layers == 0)
        spec.layers = default_spec(spec.model).layers;
    check(spec.layers >= 1, "layers must be at least 1");
    check(spec.dim >= 1, "dim must be at least 1");
    check(spec.input_dim >= 1, "input dim must be at least 1");
    check(!spec.feature_predicates.empty(), "at least one feature predicate is required");
    switch (spec.model) {
    case ZooModel::mlp: return make_mlp(spec);
    case ZooModel::cnn1d: return make_cnn1d(spec);
    case ZooModel::recurrent: return make_recurrent(spec);
    case ZooModel::recursive: return make_recursive(spec);
    case ZooModel::gcn: return make_gcn(spec);
    case ZooModel::gsage: return make_gsage(spec);
    case ZooModel::gin0: return make_gin(spec, false, false);
    case ZooModel::ginStar: return make_gin(spec, true, true);
    case ZooModel::graphlets: return make_graphlets(spec);
    case ZooModel::latentBonds: return make_latent_bonds(spec);
    }
    throw ConfigError("unknown zoo model");
}

std::vector<std::string> export_zoo(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::vector<std::string> written;
    for (ZooModel m : zoo_models()) {
        const fs::path path = fs::path(dir) / (std::string(zoo_name(m)) + ".tpl");
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << serialize(instantiate(default_spec(m)));
        if (!out)
            throw IoError("failed writing " + path.string());
        written.push_back(path.string());
    }
    return written;
}

} // namespace liftc
