#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "liftc/util.hpp"

namespace liftc {

// Values are rank <= 2: scalars are 1x1, column vectors n x 1.
using TensorValue = Eigen::MatrixXd;

inline TensorValue scalar_value(double v) {
    TensorValue t(1, 1);
    t(0, 0) = v;
    return t;
}

inline TensorValue vector_value(const std::vector<double>& xs) {
    TensorValue t(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i)
        t(static_cast<Eigen::Index>(i), 0) = xs[i];
    return t;
}

inline bool is_scalar(const TensorValue& t) { return t.rows() == 1 && t.cols() == 1; }

inline bool all_finite(const TensorValue& t) { return t.allFinite(); }

inline std::string shape_string(const TensorValue& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

enum class Activation : std::uint8_t { identity, sigmoid, tanh, relu };
enum class Aggregation : std::uint8_t { avg, max, sum };

const char* to_string(Activation a);
const char* to_string(Aggregation a);
std::optional<Activation> activation_from_string(std::string_view s);
std::optional<Aggregation> aggregation_from_string(std::string_view s);

// Element-wise activation and its derivative expressed through the cached
// pre-/post-activation values.
TensorValue apply_activation(Activation fn, const TensorValue& pre);
TensorValue activation_grad(Activation fn, const TensorValue& pre, const TensorValue& out,
                            const TensorValue& upstream);

// Tensor values keyed by template slot id, shared by every graph compiled
// from the same template.
class ParameterStore {
public:
    const TensorValue& at(const std::string& slot) const;
    const TensorValue* find(const std::string& slot) const;
    void set(const std::string& slot, TensorValue value);
    bool contains(const std::string& slot) const { return values_.count(slot) != 0; }
    std::size_t size() const { return values_.size(); }
    std::uint64_t version() const { return version_; }
    const std::map<std::string, TensorValue>& values() const { return values_; }

private:
    std::map<std::string, TensorValue> values_;
    std::uint64_t version_ = 0;
};

struct GradientStore {
    std::map<std::string, TensorValue> grads;

    void accumulate(const std::string& slot, const TensorValue& g);
    const TensorValue* find(const std::string& slot) const;
};

// Line-oriented text format: `slotId rows cols v11 v12 ...`, '%' comments.
void save_params(const ParameterStore& store, std::ostream& out);
ParameterStore load_params(std::istream& in);

enum class LossKind : std::uint8_t { bce, mse };

struct LossResult {
    double value;
    TensorValue grad; // d(loss)/d(prediction)
};

LossResult loss(const TensorValue& prediction, const TensorValue& target, LossKind kind);

} // namespace liftc
