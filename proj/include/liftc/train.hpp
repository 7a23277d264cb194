#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "liftc/autodiff.hpp"
#include "liftc/graph.hpp"
#include "liftc/parse.hpp"

namespace liftc {

enum class OptimizerKind : std::uint8_t { sgd, adam };
enum class InitScheme : std::uint8_t { glorot, uniform, constant };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 200;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::bce;
    InitScheme init = InitScheme::glorot;
    double init_lo = -1.0; // uniform bounds, or the constant value (init_lo)
    double init_hi = 1.0;
    // Apply a sigmoid before a bce loss when the output node's activation is
    // identity (the template's output_activation, when set, wins).
    bool sigmoid_output = true;
    double cwa_default = 0.0; // prediction for queries that are not entailed
    std::size_t jobs = 0;     // dataset compilation workers; 0 = all cores

    void validate() const;
};

// One training item: a query of an example with its compiled graph
// (nullopt when the query is not entailed).
struct DatasetItem {
    std::size_t example_index = 0;
    Query query;
    std::optional<ComputationGraph> graph;
};

struct Dataset {
    Template tpl;
    std::vector<DatasetItem> items;
    std::vector<int> folds; // optional fold index per item

    std::size_t size() const { return items.size(); }
};

// Grounds and compiles every (example, query) pair; examples are processed
// in parallel over `jobs` workers. Graphs are pruned when `prune_graphs`.
Dataset compile_dataset(const Template& tpl, const std::vector<Example>& examples,
                        std::size_t jobs = 0, bool prune_graphs = true,
                        const GroundLimits& limits = {});

struct FoldMetrics {
    double train_loss = 0;
    double val_loss = 0;
    double test_accuracy = 0;
};

struct Metrics {
    double loss = 0;
    double accuracy = 0;
    bool valid = false; // false for an empty dataset (loss/accuracy are NaN)
    std::vector<FoldMetrics> per_fold;
};

ParameterStore init_params(const Template& tpl, const TrainConfig& cfg, std::uint64_t seed);

// Adds parameter entries for trainable fact values found in the compiled
// graphs (initialized from the example values). No-op unless the template
// marks predicates as trainable.
void register_fact_slots(const Dataset& ds, ParameterStore& params);

struct OptState {
    std::map<std::string, TensorValue> m;
    std::map<std::string, TensorValue> v;
    long step = 0;
};

// The transformed prediction for one item together with the raw graph output.
struct Prediction {
    TensorValue raw;
    TensorValue value;
    bool entailed = false;
};

Prediction predict(const Dataset& ds, const DatasetItem& item, const ParameterStore& params,
                   const TrainConfig& cfg, EvalTape* tape = nullptr);

// One pass over the listed items in a seeded shuffled order, one
// forward/backward/update per item (batch size 1). Returns the mean of the
// per-item losses as visited.
double train_epoch(const Dataset& ds, const std::vector<std::size_t>& item_indices,
                   ParameterStore& params, const TrainConfig& cfg, OptState& opt,
                   int epoch_index);

// Convenience overload over the whole dataset.
double train_epoch(const Dataset& ds, ParameterStore& params, const TrainConfig& cfg,
                   OptState& opt, int epoch_index);

Metrics evaluate(const Dataset& ds, const std::vector<std::size_t>& item_indices,
                 const ParameterStore& params, const TrainConfig& cfg);
Metrics evaluate(const Dataset& ds, const ParameterStore& params, const TrainConfig& cfg);

struct TrainRun {
    ParameterStore params;
    std::vector<double> epoch_train_loss; // evaluate() after each epoch
    Metrics final_metrics;
};

using EpochLogger = std::function<void(int epoch, double train_loss)>;

TrainRun train(const Dataset& ds, const TrainConfig& cfg, const EpochLogger& log = {});

// k-fold cross-validation: seeded deterministic fold assignment; each fold
// trains on k-2 parts, validates on one and tests on one, reporting the test
// metrics at the epoch of the best validation loss. Sets ds.folds.
Metrics cross_validate(Dataset& ds, const TrainConfig& cfg, int k);

} // namespace liftc
