#include "liftc/tensor.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace liftc {

const char* to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    }
    return "?";
}

const char* to_string(Aggregation a) {
    switch (a) {
    case Aggregation::avg: return "avg";
    case Aggregation::max: return "max";
    case Aggregation::sum: return "sum";
    }
    return "?";
}

std::optional<Activation> activation_from_string(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    return std::nullopt;
}

std::optional<Aggregation> aggregation_from_string(std::string_view s) {
    if (s == "avg") return Aggregation::avg;
    if (s == "max") return Aggregation::max;
    if (s == "sum") return Aggregation::sum;
    return std::nullopt;
}

TensorValue apply_activation(Activation fn, const TensorValue& pre) {
    switch (fn) {
    case Activation::identity: return pre;
    case Activation::sigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::relu: return pre.cwiseMax(0.0);
    }
    return pre;
}

TensorValue activation_grad(Activation fn, const TensorValue& pre, const TensorValue& out,
                            const TensorValue& upstream) {
    switch (fn) {
    case Activation::identity:
        return upstream;
    case Activation::sigmoid:
        return (upstream.array() * out.array() * (1.0 - out.array())).matrix();
    case Activation::tanh:
        return (upstream.array() * (1.0 - out.array().square())).matrix();
    case Activation::relu:
        return (upstream.array() * (pre.array() > 0.0).cast<double>()).matrix();
    }
    return upstream;
}

const TensorValue& ParameterStore::at(const std::string& slot) const {
    auto it = values_.find(slot);
    if (it == values_.end())
        throw ShapeMismatch("parameter slot '" + slot + "' is not present in the store");
    return it->second;
}

const TensorValue* ParameterStore::find(const std::string& slot) const {
    auto it = values_.find(slot);
    return it == values_.end() ? nullptr : &it->second;
}

void ParameterStore::set(const std::string& slot, TensorValue value) {
    values_[slot] = std::move(value);
    ++version_;
}

void GradientStore::accumulate(const std::string& slot, const TensorValue& g) {
    auto it = grads.find(slot);
    if (it == grads.end())
        grads.emplace(slot, g);
    else
        it->second += g;
}

const TensorValue* GradientStore::find(const std::string& slot) const {
    auto it = grads.find(slot);
    return it == grads.end() ? nullptr : &it->second;
}

void save_params(const ParameterStore& store, std::ostream& out) {
    for (const auto& [slot, value] : store.values()) {
        out << slot << ' ' << value.rows() << ' ' << value.cols();
        for (Eigen::Index r = 0; r < value.rows(); ++r)
            for (Eigen::Index c = 0; c < value.cols(); ++c)
                out << ' ' << format_double(value(r, c));
        out << '\n';
    }
}

ParameterStore load_params(std::istream& in) {
    ParameterStore store;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('%'); pos != std::string::npos)
            line.erase(pos);
        std::istringstream row(line);
        std::string slot;
        if (!(row >> slot))
            continue; // blank line
        long rows = 0, cols = 0;
        if (!(row >> rows >> cols) || rows <= 0 || cols <= 0)
            throw IoError("parameter file line " + std::to_string(lineno) + ": bad header");
        TensorValue value(rows, cols);
        std::string tok;
        for (long r = 0; r < rows; ++r) {
            for (long c = 0; c < cols; ++c) {
                if (!(row >> tok))
                    throw IoError("parameter file line " + std::to_string(lineno) +
                                  ": expected " + std::to_string(rows * cols) + " values");
                value(r, c) = parse_double(tok);
            }
        }
        if (row >> tok)
            throw IoError("parameter file line " + std::to_string(lineno) + ": trailing data");
        store.set(slot, std::move(value));
    }
    return store;
}

LossResult loss(const TensorValue& prediction, const TensorValue& target, LossKind kind) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
        throw ShapeMismatch("loss: prediction " + shape_string(prediction) + " vs target " +
                            shape_string(target));
    const double n = static_cast<double>(prediction.size());
    if (kind == LossKind::mse) {
        TensorValue diff = prediction - target;
        LossResult res;
        res.value = diff.array().square().sum() / n;
        res.grad = (2.0 / n) * diff;
        return res;
    }
    // Binary cross-entropy, summed. Values are clamped into
    // [1e-12, 1 - 1e-12]; anything outside [0, 1] beyond that window is a
    // domain error rather than a silent clamp.
    constexpr double kEps = 1e-12;
    LossResult res;
    res.value = 0.0;
    res.grad = TensorValue::Zero(prediction.rows(), prediction.cols());
    for (Eigen::Index r = 0; r < prediction.rows(); ++r) {
        for (Eigen::Index c = 0; c < prediction.cols(); ++c) {
            double p = prediction(r, c);
            const double t = target(r, c);
            if (p < -kEps || p > 1.0 + kEps)
                throw DomainError("bce prediction " + format_double(p) + " outside (0,1)");
            p = std::min(std::max(p, kEps), 1.0 - kEps);
            res.value -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
            res.grad(r, c) = -t / p + (1.0 - t) / (1.0 - p);
        }
    }
    return res;
}

} // namespace liftc
