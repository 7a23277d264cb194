#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liftc/logic.hpp"

namespace liftc {

enum class SyntheticKind : std::uint8_t { triangleTask, chainLengthTask, molToy };

const char* to_string(SyntheticKind k);
std::optional<SyntheticKind> synthetic_from_name(std::string_view name);

struct SyntheticOptions {
    SyntheticKind kind = SyntheticKind::triangleTask;
    int count = 2;
    std::uint64_t seed = 0;
    bool self_loops = false; // triangleTask: also emit edge(x,x) per node
};

// Desk-scale datasets with balanced classes and one query per example:
//   triangleTask    random graphs of 5-9 nodes (trees, positives close one
//                   triangle), degree-bucket features f/1, symmetric edge/2
//   chainLengthTask chains labeled by parity of length; f/1, next/2,
//                   first/1, last/1
//   molToy          molecule-like graphs with atom types a_c/a_h/a_o and
//                   symmetric bonds b/2; label: a carbon-oxygen bond exists
std::vector<Example> gen_synthetic(const SyntheticOptions& opts);

} // namespace liftc
