#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liftc/logic.hpp"

namespace liftc {

enum class ZooModel {
    mlp,
    cnn1d,
    recurrent,
    recursive,
    gcn,
    gsage,
    gin0,
    ginStar,
    graphlets,
    latentBonds,
};

const char* zoo_name(ZooModel m);
std::optional<ZooModel> zoo_from_name(std::string_view name);
std::vector<ZooModel> zoo_models();

struct ZooSpec {
    ZooModel model = ZooModel::gcn;
    int layers = 0; // 0 = model default (2 for gcn/gsage, 5 for the GIN family, ...)
    int dim = 10;
    int input_dim = 4;
    int kernel = 3; // cnn1d filter width
    int arity = 3;  // recursive tree fan-in
    std::optional<double> epsilon; // gin0: fixed (1+eps) self coefficient
    // One predicate: examples carry vector features under it. Several:
    // unary type predicates, each embedded through a learnable vector.
    std::vector<std::string> feature_predicates = {"f"};
    std::string edge_predicate = "edge";
};

ZooSpec default_spec(ZooModel m);

// Emits the architecture as a template; the result passes validation and its
// slot count is a fixed function of (layers, dims).
Template instantiate(const ZooSpec& spec);

// Writes every model at its default spec as `<name>.tpl` under `dir`;
// returns the written paths. Files re-parse to equal templates.
std::vector<std::string> export_zoo(const std::string& dir);

} // namespace liftc
