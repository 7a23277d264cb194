#include "liftc/train.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "liftc/rng.hpp"

namespace liftc {

void TrainConfig::validate() const {
    if (!(learning_rate > 0))
        throw ConfigError("learning rate must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
        throw ConfigError("adam betas must lie in [0, 1)");
    if (epochs < 0)
        throw ConfigError("epochs must be nonnegative");
}

Dataset compile_dataset(const Template& tpl, const std::vector<Example>& examples,
                        std::size_t jobs, bool prune_graphs, const GroundLimits& limits) {
    Dataset ds;
    ds.tpl = tpl;
    for (std::size_t e = 0; e < examples.size(); ++e) {
        for (const auto& q : examples[e].queries) {
            DatasetItem item;
            item.example_index = e;
            item.query = q;
            ds.items.push_back(std::move(item));
        }
    }

    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<std::size_t>(jobs, std::max<std::size_t>(ds.items.size(), 1));

    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(jobs);
    auto worker = [&](std::size_t wid) {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= ds.items.size())
                    return;
                DatasetItem& item = ds.items[i];
                const Example& ex = examples[item.example_index];
                auto gp = ground_for_query(tpl, ex, item.query.atom, limits);
                if (!gp)
                    continue; // not entailed: CWA default at evaluation time
                ComputationGraph g = build_graph(tpl, *gp, item.query.atom);
                item.graph = prune_graphs ? prune(g) : std::move(g);
            }
        } catch (const std::exception& e) {
            errors[wid] = e.what();
        }
    };
    if (jobs <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < jobs; ++w)
            pool.emplace_back(worker, w);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& err : errors)
        if (!err.empty())
            throw Error("dataset compilation failed: " + err);
    return ds;
}

ParameterStore init_params(const Template& tpl, const TrainConfig& cfg, std::uint64_t seed) {
    ParameterStore store;
    Rng rng(seed);
    for (const auto& [slot, shape] : tpl.parameter_slots()) {
        TensorValue value(shape.rows, shape.cols);
        // Bias slots start at zero so an enabled bias changes nothing until
        // it trains away from it.
        if (slot.size() > 5 && slot.compare(slot.size() - 5, 5, "#bias") == 0) {
            value.setZero();
            store.set(slot, std::move(value));
            continue;
        }
        switch (cfg.init) {
        case InitScheme::constant:
            value.setConstant(cfg.init_lo);
            break;
        case InitScheme::uniform:
            for (Eigen::Index r = 0; r < value.rows(); ++r)
                for (Eigen::Index c = 0; c < value.cols(); ++c)
                    value(r, c) = rng.uniform(cfg.init_lo, cfg.init_hi);
            break;
        case InitScheme::glorot: {
            // Glorot needs a fan-in and a fan-out, so it applies to genuine
            // matrices; scalar and vector slots fall back to uniform(-1, 1).
            double bound = 1.0;
            if (shape.rows > 1 && shape.cols > 1)
                bound = std::sqrt(6.0 / (shape.rows + shape.cols));
            for (Eigen::Index r = 0; r < value.rows(); ++r)
                for (Eigen::Index c = 0; c < value.cols(); ++c)
                    value(r, c) = rng.uniform(-bound, bound);
            break;
        }
        }
        store.set(slot, std::move(value));
    }
    return store;
}

void register_fact_slots(const Dataset& ds, ParameterStore& params) {
    if (ds.tpl.fns.trainable_fact_predicates.empty())
        return;
    for (const auto& item : ds.items) {
        if (!item.graph)
            continue;
        for (const Node& n : item.graph->nodes)
            if (!n.fact_slot.empty() && !params.contains(n.fact_slot))
                params.set(n.fact_slot, n.fixed_value);
    }
}

namespace {

Activation output_transform(const Dataset& ds, const DatasetItem& item,
                            const TrainConfig& cfg) {
    if (ds.tpl.fns.output_activation)
        return *ds.tpl.fns.output_activation;
    if (!item.graph)
        return Activation::identity;
    const Node& out = item.graph->nodes[item.graph->output];
    const Activation node_act =
        out.kind == NodeKind::fact ? Activation::identity : out.activation;
    if (cfg.loss_kind == LossKind::bce && cfg.sigmoid_output &&
        node_act == Activation::identity)
        return Activation::sigmoid;
    return Activation::identity;
}

bool thresholds_match(const TensorValue& p, const TensorValue& target) {
    if (p.rows() != target.rows() || p.cols() != target.cols())
        return false;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
        for (Eigen::Index c = 0; c < p.cols(); ++c)
            if ((p(r, c) >= 0.5) != (target(r, c) >= 0.5))
                return false;
    return true;
}

void apply_update(ParameterStore& params, const GradientStore& grads, const TrainConfig& cfg,
                  OptState& opt) {
    ++opt.step;
    for (const auto& [slot, value] : params.values()) {
        const TensorValue* g = grads.find(slot);
        TensorValue zero;
        if (!g) {
            zero = TensorValue::Zero(value.rows(), value.cols());
            g = &zero;
        }
        if (cfg.optimizer == OptimizerKind::sgd) {
            params.set(slot, value - cfg.learning_rate * *g);
            continue;
        }
        auto mit = opt.m.find(slot);
        if (mit == opt.m.end()) {
            opt.m.emplace(slot, TensorValue::Zero(value.rows(), value.cols()));
            opt.v.emplace(slot, TensorValue::Zero(value.rows(), value.cols()));
            mit = opt.m.find(slot);
        }
        TensorValue& m = mit->second;
        TensorValue& v = opt.v.at(slot);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * *g;
        v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g->array().square()).matrix();
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
        Eigen::ArrayXXd update =
            (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
        params.set(slot, value - cfg.learning_rate * update.matrix());
    }
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.items.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    return idx;
}

} // namespace

Prediction predict(const Dataset& ds, const DatasetItem& item, const ParameterStore& params,
                   const TrainConfig& cfg, EvalTape* tape) {
    Prediction p;
    if (!item.graph) {
        p.raw = scalar_value(cfg.cwa_default);
        p.value = p.raw;
        return p;
    }
    p.entailed = true;
    ForwardResult fwd = forward(*item.graph, params);
    if (tape)
        *tape = std::move(fwd.tape);
    p.raw = std::move(fwd.output);
    p.value = apply_activation(output_transform(ds, item, cfg), p.raw);
    return p;
}

double train_epoch(const Dataset& ds, const std::vector<std::size_t>& item_indices,
                   ParameterStore& params, const TrainConfig& cfg, OptState& opt,
                   int epoch_index) {
    cfg.validate();
    std::vector<std::size_t> order = item_indices;
    Rng rng(mix_seed(cfg.seed, 0xe70c0000ULL + static_cast<std::uint64_t>(epoch_index)));
    rng.shuffle(order);

    double total = 0;
    for (std::size_t idx : order) {
        const DatasetItem& item = ds.items[idx];
        try {
            EvalTape tape;
            Prediction p = predict(ds, item, params, cfg, &tape);
            LossResult l = loss(p.value, item.query.target, cfg.loss_kind);
            total += l.value;
            if (!item.graph)
                continue;
            // Chain the output transform into the loss gradient.
            TensorValue seed =
                activation_grad(output_transform(ds, item, cfg), p.raw, p.value, l.grad);
            GradientStore grads = backward(*item.graph, params, tape, seed);
            apply_update(params, grads, cfg, opt);
        } catch (const NonFinite& e) {
            throw NonFinite("item " + std::to_string(idx) + ": " + e.what());
        }
    }
    return item_indices.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : total / static_cast<double>(item_indices.size());
}

double train_epoch(const Dataset& ds, ParameterStore& params, const TrainConfig& cfg,
                   OptState& opt, int epoch_index) {
    return train_epoch(ds, all_indices(ds), params, cfg, opt, epoch_index);
}

Metrics evaluate(const Dataset& ds, const std::vector<std::size_t>& item_indices,
                 const ParameterStore& params, const TrainConfig& cfg) {
    Metrics m;
    if (item_indices.empty()) {
        m.loss = std::numeric_limits<double>::quiet_NaN();
        m.accuracy = std::numeric_limits<double>::quiet_NaN();
        m.valid = false;
        return m;
    }
    double total = 0;
    std::size_t correct = 0;
    for (std::size_t idx : item_indices) {
        const DatasetItem& item = ds.items[idx];
        Prediction p = predict(ds, item, params, cfg);
        total += loss(p.value, item.query.target, cfg.loss_kind).value;
        if (thresholds_match(p.value, item.query.target))
            ++correct;
    }
    m.loss = total / static_cast<double>(item_indices.size());
    m.accuracy = static_cast<double>(correct) / static_cast<double>(item_indices.size());
    m.valid = true;
    return m;
}

Metrics evaluate(const Dataset& ds, const ParameterStore& params, const TrainConfig& cfg) {
    return evaluate(ds, all_indices(ds), params, cfg);
}

TrainRun train(const Dataset& ds, const TrainConfig& cfg, const EpochLogger& log) {
    cfg.validate();
    TrainRun run;
    run.params = init_params(ds.tpl, cfg, cfg.seed);
    register_fact_slots(ds, run.params);
    OptState opt;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        train_epoch(ds, run.params, cfg, opt, epoch);
        Metrics m = evaluate(ds, run.params, cfg);
        run.epoch_train_loss.push_back(m.loss);
        if (log)
            log(epoch, m.loss);
    }
    run.final_metrics = evaluate(ds, run.params, cfg);
    return run;
}

Metrics cross_validate(Dataset& ds, const TrainConfig& cfg, int k) {
    cfg.validate();
    if (k < 2)
        throw ConfigError("cross-validation needs k >= 2");
    if (ds.items.size() < static_cast<std::size_t>(k))
        throw ConfigError("dataset smaller than the number of folds");

    std::vector<std::size_t> order = all_indices(ds);
    Rng rng(mix_seed(cfg.seed, 0xf01d5ULL));
    rng.shuffle(order);
    ds.folds.assign(ds.items.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i)
        ds.folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

    Metrics agg;
    double loss_sum = 0;
    double acc_sum = 0;
    for (int fold = 0; fold < k; ++fold) {
        const int val_fold = (fold + 1) % k;
        std::vector<std::size_t> train_idx, val_idx, test_idx;
        for (std::size_t i = 0; i < ds.items.size(); ++i) {
            if (ds.folds[i] == fold)
                test_idx.push_back(i);
            else if (ds.folds[i] == val_fold)
                val_idx.push_back(i);
            else
                train_idx.push_back(i);
        }

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = mix_seed(cfg.seed, 0xc5ULL * static_cast<std::uint64_t>(fold + 1));
        ParameterStore params = init_params(ds.tpl, fold_cfg, fold_cfg.seed);
        register_fact_slots(ds, params);
        OptState opt;
        ParameterStore best = params;
        double best_val = std::numeric_limits<double>::infinity();
        for (int epoch = 1; epoch <= fold_cfg.epochs; ++epoch) {
            train_epoch(ds, train_idx, params, fold_cfg, opt, epoch);
            const double val = evaluate(ds, val_idx, params, fold_cfg).loss;
            if (val < best_val) {
                best_val = val;
                best = params;
            }
        }
        FoldMetrics fm;
        fm.train_loss = evaluate(ds, train_idx, best, fold_cfg).loss;
        fm.val_loss = best_val;
        fm.test_accuracy = evaluate(ds, test_idx, best, fold_cfg).accuracy;
        agg.per_fold.push_back(fm);
        loss_sum += evaluate(ds, test_idx, best, fold_cfg).loss;
        acc_sum += fm.test_accuracy;
    }
    agg.loss = loss_sum / k;
    agg.accuracy = acc_sum / k;
    agg.valid = true;
    return agg;
}

} // namespace liftc
