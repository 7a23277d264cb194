#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "liftc/autodiff.hpp"
#include "liftc/parse.hpp"
#include "liftc/train.hpp"
#include "liftc/zoo.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace liftc;
using helpers::atom;

namespace {

std::size_t slots(const Template& tpl) { return tpl.parameter_slots().size(); }

TensorValue engine_output(const Template& tpl, const Example& ex,
                          const ParameterStore& params) {
    Atom q = ex.queries.at(0).atom;
    auto gp = ground_for_query(tpl, ex, q);
    REQUIRE(gp.has_value());
    ComputationGraph g = prune(build_graph(tpl, *gp, q));
    return forward(g, params).output;
}

} // namespace

TEST_CASE("every zoo template validates") {
    for (ZooModel m : zoo_models()) {
        Template tpl = instantiate(default_spec(m));
        CHECK(validate_template(tpl).empty());
    }
}

TEST_CASE("slot counts are closed-form in layers and dims") {
    auto with_layers = [](ZooModel m, int layers) {
        ZooSpec spec = default_spec(m);
        spec.layers = layers;
        return instantiate(spec);
    };
    for (int L : {1, 2, 3, 5}) {
        CHECK(slots(with_layers(ZooModel::gcn, L)) == static_cast<std::size_t>(L + 1));
        CHECK(slots(with_layers(ZooModel::gsage, L)) == static_cast<std::size_t>(2 * L + 1));
        CHECK(slots(with_layers(ZooModel::gin0, L)) == static_cast<std::size_t>(5 * L));
        CHECK(slots(with_layers(ZooModel::ginStar, L)) == static_cast<std::size_t>(7 * L));
        CHECK(slots(with_layers(ZooModel::graphlets, L)) ==
              static_cast<std::size_t>(5 * L + 5));
        CHECK(slots(with_layers(ZooModel::latentBonds, L)) ==
              static_cast<std::size_t>(7 * L));
        CHECK(slots(with_layers(ZooModel::mlp, L)) == static_cast<std::size_t>(2 * L));
    }
    CHECK(slots(instantiate(default_spec(ZooModel::cnn1d))) == 3 + 3); // kernel + Wh/Wb/Wq
    CHECK(slots(instantiate(default_spec(ZooModel::recurrent))) == 5);
    CHECK(slots(instantiate(default_spec(ZooModel::recursive))) == 3 + 3);
}

TEST_CASE("the 2-layer gcn at d=10 owns exactly 3 tensors") {
    Template tpl = instantiate(default_spec(ZooModel::gcn));
    auto ps = tpl.parameter_slots();
    REQUIRE(ps.size() == 3);
    CHECK(ps.at("W1") == SlotShape{10, 4});
    CHECK(ps.at("W2") == SlotShape{10, 10});
    CHECK(ps.at("Wq") == SlotShape{1, 10});
}

TEST_CASE("mlp with one layer is the single perceptron rule") {
    ZooSpec spec = default_spec(ZooModel::mlp);
    spec.layers = 1;
    Template tpl = instantiate(spec);
    REQUIRE(tpl.rules.size() == 1);
    CHECK(tpl.rules[0].head == atom("q"));
    CHECK(slots(tpl) == 2);
}

TEST_CASE("type-embedding mode adds one embedding slot per type predicate") {
    ZooSpec spec = default_spec(ZooModel::gcn);
    spec.feature_predicates = {"a_c", "a_h", "a_o"};
    spec.edge_predicate = "b";
    Template tpl = instantiate(spec);
    CHECK(validate_template(tpl).empty());
    CHECK(slots(tpl) == 3 + 3);
    const std::string text = serialize(tpl);
    CHECK(text.find("a_c(X)") != std::string::npos);
    CHECK(text.find("b(V,U)") != std::string::npos);
}

TEST_CASE("gin0 with an explicit epsilon uses the 3-rule form") {
    ZooSpec spec = default_spec(ZooModel::gin0);
    spec.layers = 2;
    spec.epsilon = 0.1;
    Template tpl = instantiate(spec);
    CHECK(validate_template(tpl).empty());
    CHECK(slots(tpl) == 3 * 2);
    bool found_fixed = false;
    for (const auto& rule : tpl.rules)
        for (const auto& lit : rule.body)
            if (lit.weight.is_fixed() && lit.weight.fixed_ref().value(0, 0) == 1.1)
                found_fixed = true;
    CHECK(found_fixed);
}

TEST_CASE("gcn matches the closed-form update within 1e-6") {
    Rng rng(99);
    ZooSpec spec = default_spec(ZooModel::gcn);
    spec.dim = 5;
    spec.input_dim = 3;
    Template tpl = instantiate(spec);
    TrainConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        auto g = oracle::random_simple_graph(rng, 4 + rng.below(4), 3, true);
        Example ex = oracle::graph_to_example(g);
        ParameterStore params = init_params(tpl, cfg, 500 + trial);
        TensorValue engine = engine_output(tpl, ex, params);
        TensorValue expected = oracle::gcn_oracle(g, spec.layers, params);
        CHECK((engine - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("gsage matches the two-rule additive form within 1e-6") {
    Rng rng(77);
    ZooSpec spec = default_spec(ZooModel::gsage);
    spec.dim = 5;
    spec.input_dim = 3;
    Template tpl = instantiate(spec);
    TrainConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        auto g = oracle::random_simple_graph(rng, 4 + rng.below(4), 3, false);
        Example ex = oracle::graph_to_example(g);
        ParameterStore params = init_params(tpl, cfg, 900 + trial);
        TensorValue engine = engine_output(tpl, ex, params);
        TensorValue expected = oracle::gsage_oracle(g, spec.layers, params);
        CHECK((engine - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("gin0 matches the sum-aggregation MLP form within 1e-6") {
    Rng rng(55);
    ZooSpec spec = default_spec(ZooModel::gin0);
    spec.layers = 3;
    spec.dim = 4;
    spec.input_dim = 3;
    Template tpl = instantiate(spec);
    TrainConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        auto g = oracle::random_simple_graph(rng, 4 + rng.below(4), 3, false);
        Example ex = oracle::graph_to_example(g);
        ParameterStore params = init_params(tpl, cfg, 300 + trial);
        TensorValue engine = engine_output(tpl, ex, params);
        TensorValue expected = oracle::gin0_oracle(g, spec.layers, params);
        CHECK((engine - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("gin0 jumping-knowledge links appear as skip entries") {
    Rng rng(8);
    ZooSpec spec = default_spec(ZooModel::gin0);
    spec.dim = 3;
    spec.input_dim = 2;
    Template tpl = instantiate(spec);
    auto g = oracle::random_simple_graph(rng, 5, 2, false);
    Example ex = oracle::graph_to_example(g);
    Atom q = ex.queries[0].atom;
    auto gp = ground_for_query(tpl, ex, q);
    REQUIRE(gp.has_value());
    ComputationGraph graph = prune(build_graph(tpl, *gp, q));
    LayeredGraph lg = vectorize(graph);
    CHECK(lg.skip_entries > 0);

    // A plain MLP has none.
    ZooSpec mlp = default_spec(ZooModel::mlp);
    mlp.dim = 3;
    mlp.input_dim = 2;
    Template mlp_tpl = instantiate(mlp);
    Example mex = oracle::random_mlp_example(rng, 2);
    auto mgp = ground_for_query(mlp_tpl, mex, mex.queries[0].atom);
    REQUIRE(mgp.has_value());
    ComputationGraph mlp_graph = prune(build_graph(mlp_tpl, *mgp, mex.queries[0].atom));
    CHECK(vectorize(mlp_graph).skip_entries == 0);
}

TEST_CASE("exported zoo re-parses to the same templates") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "liftc_zoo_test";
    fs::remove_all(dir);
    auto files = export_zoo(dir.string());
    CHECK(files.size() == 10);
    for (ZooModel m : zoo_models()) {
        const fs::path path = dir / (std::string(zoo_name(m)) + ".tpl");
        std::ifstream in(path);
        REQUIRE(in.good());
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        CHECK(parse_template(text, path.string()) == instantiate(default_spec(m)));
    }
    fs::remove_all(dir);
}

TEST_CASE("exporting into an unusable directory raises an I/O error") {
    namespace fs = std::filesystem;
    // A path under a regular file can never become a directory, so this
    // fails even when running as root.
    try {
        export_zoo("/dev/null/zoo");
        FAIL("expected an IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/dev/null/zoo") != std::string::npos);
    }
    if (::geteuid() != 0) {
        const fs::path dir = fs::temp_directory_path() / "liftc_zoo_ro";
        fs::create_directories(dir);
        fs::permissions(dir, fs::perms::owner_read | fs::perms::owner_exec,
                        fs::perm_options::replace);
        CHECK_THROWS_AS(export_zoo((dir / "sub" / "zoo").string()), IoError);
        fs::permissions(dir, fs::perms::owner_all, fs::perm_options::replace);
        fs::remove_all(dir);
    }
}

TEST_CASE("bad zoo configurations are rejected") {
    ZooSpec spec = default_spec(ZooModel::gcn);
    spec.dim = 0;
    CHECK_THROWS_AS(instantiate(spec), ConfigError);
    ZooSpec spec2 = default_spec(ZooModel::recursive);
    spec2.arity = 0;
    CHECK_THROWS_AS(instantiate(spec2), ConfigError);
}

TEST_CASE("recurrent and recursive templates run end to end") {
    Rng rng(2);
    TrainConfig cfg;

    ZooSpec rec = default_spec(ZooModel::recurrent);
    rec.dim = 3;
    rec.input_dim = 2;
    Template rec_tpl = instantiate(rec);
    Example seq = oracle::random_sequence(rng, 5, 2);
    ParameterStore params = init_params(rec_tpl, cfg, 4);
    CHECK(engine_output(rec_tpl, seq, params).rows() == 1);

    ZooSpec tree = default_spec(ZooModel::recursive);
    tree.dim = 3;
    tree.input_dim = 2;
    Template tree_tpl = instantiate(tree);
    Example ex = oracle::random_tree_example(rng, tree.arity, 2);
    ParameterStore params2 = init_params(tree_tpl, cfg, 5);
    CHECK(engine_output(tree_tpl, ex, params2).rows() == 1);

    ZooSpec cnn = default_spec(ZooModel::cnn1d);
    Template cnn_tpl = instantiate(cnn);
    Example pixels = oracle::random_pixel_chain(rng, 5);
    ParameterStore params3 = init_params(cnn_tpl, cfg, 6);
    CHECK(engine_output(cnn_tpl, pixels, params3).rows() == 1);
}
