#include "liftc/synthetic.hpp"

#include <algorithm>
#include <set>

#include "liftc/rng.hpp"

namespace liftc {

const char* to_string(SyntheticKind k) {
    switch (k) {
    case SyntheticKind::triangleTask: return "triangleTask";
    case SyntheticKind::chainLengthTask: return "chainLengthTask";
    case SyntheticKind::molToy: return "molToy";
    }
    return "?";
}

std::optional<SyntheticKind> synthetic_from_name(std::string_view name) {
    if (name == "triangleTask") return SyntheticKind::triangleTask;
    if (name == "chainLengthTask") return SyntheticKind::chainLengthTask;
    if (name == "molToy") return SyntheticKind::molToy;
    return std::nullopt;
}

namespace {

Atom unary(const std::string& pred, const std::string& c) {
    Atom a;
    a.pred = Predicate::make(pred, 1);
    a.terms = {Term::constant(c)};
    return a;
}

Atom binary(const std::string& pred, const std::string& x, const std::string& y) {
    Atom a;
    a.pred = Predicate::make(pred, 2);
    a.terms = {Term::constant(x), Term::constant(y)};
    return a;
}

Atom proposition(const std::string& pred) {
    Atom a;
    a.pred = Predicate::make(pred, 0);
    return a;
}

std::string node_name(std::size_t i) { return "n" + std::to_string(i + 1); }

void add_query(Example& ex, bool positive) {
    ex.queries.push_back({scalar_value(positive ? 1.0 : 0.0), proposition("q")});
}

// Uniform random attachment tree on n nodes; returns adjacency lists.
std::vector<std::set<std::size_t>> random_tree(std::size_t n, Rng& rng) {
    std::vector<std::set<std::size_t>> adj(n);
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t j = rng.below(i);
        adj[i].insert(j);
        adj[j].insert(i);
    }
    return adj;
}

Example triangle_example(bool positive, bool self_loops, Rng& rng) {
    const std::size_t n = 5 + rng.below(5); // 5..9 nodes
    auto adj = random_tree(n, rng);
    if (positive) {
        // Close a triangle through a node with at least two neighbors.
        std::vector<std::size_t> hubs;
        for (std::size_t v = 0; v < n; ++v)
            if (adj[v].size() >= 2)
                hubs.push_back(v);
        const std::size_t v = hubs[rng.below(hubs.size())];
        std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
        const std::size_t a = nb[rng.below(nb.size())];
        std::size_t b = a;
        while (b == a)
            b = nb[rng.below(nb.size())];
        adj[a].insert(b);
        adj[b].insert(a);
    }

    Example ex;
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t deg = adj[v].size();
        std::vector<double> feat(4, 0.0);
        feat[std::min<std::size_t>(deg, 4) - 1] = 1.0;
        ex.facts.push_back({vector_value(feat), unary("f", node_name(v))});
    }
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t u : adj[v])
            ex.facts.push_back({scalar_value(1.0), binary("edge", node_name(v), node_name(u))});
    if (self_loops)
        for (std::size_t v = 0; v < n; ++v)
            ex.facts.push_back({scalar_value(1.0), binary("edge", node_name(v), node_name(v))});
    add_query(ex, positive);
    return ex;
}

Example chain_example(bool even, Rng& rng) {
    // Chain length of the requested parity in 2..9.
    std::size_t k = 2 + rng.below(8);
    if ((k % 2 == 0) != even)
        ++k;
    Example ex;
    for (std::size_t i = 0; i < k; ++i)
        ex.facts.push_back(
            {vector_value({0.5 + 0.05 * static_cast<double>(i % 3)}), unary("f", node_name(i))});
    for (std::size_t i = 0; i + 1 < k; ++i)
        ex.facts.push_back({scalar_value(1.0), binary("next", node_name(i), node_name(i + 1))});
    ex.facts.push_back({scalar_value(1.0), unary("first", node_name(0))});
    ex.facts.push_back({scalar_value(1.0), unary("last", node_name(k - 1))});
    add_query(ex, even);
    return ex;
}

Example mol_example(bool positive, Rng& rng) {
    const std::size_t n = 4 + rng.below(6); // 4..9 atoms
    auto adj = random_tree(n, rng);
    // Occasionally close a ring.
    if (n >= 4 && rng.below(3) == 0) {
        const std::size_t a = rng.below(n);
        std::size_t b = rng.below(n);
        if (a != b && !adj[a].count(b)) {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }

    std::vector<char> type(n);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t roll = rng.below(10);
        type[v] = roll < 5 ? 'c' : (roll < 8 ? 'h' : 'o');
    }
    auto has_co_bond = [&] {
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t u : adj[v])
                if ((type[v] == 'c' && type[u] == 'o') || (type[v] == 'o' && type[u] == 'c'))
                    return true;
        return false;
    };
    if (positive && !has_co_bond()) {
        const std::size_t v = 1 + rng.below(n - 1);
        const std::size_t u = *adj[v].begin();
        type[v] = 'c';
        type[u] = 'o';
    }
    while (!positive && has_co_bond()) {
        for (std::size_t v = 0; v < n; ++v)
            if (type[v] == 'o')
                for (std::size_t u : adj[v])
                    if (type[u] == 'c') {
                        type[v] = 'h';
                        break;
                    }
    }

    Example ex;
    for (std::size_t v = 0; v < n; ++v)
        ex.facts.push_back(
            {scalar_value(1.0), unary(std::string("a_") + type[v], node_name(v))});
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t u : adj[v])
            ex.facts.push_back({scalar_value(1.0), binary("b", node_name(v), node_name(u))});
    add_query(ex, positive);
    return ex;
}

} // namespace

std::vector<Example> gen_synthetic(const SyntheticOptions& opts) {
    if (opts.count < 2)
        throw ConfigError("synthetic datasets need at least 2 examples");
    Rng rng(mix_seed(opts.seed, 0x5e7aULL));
    std::vector<Example> out;
    const int positives = opts.count / 2;
    for (int i = 0; i < opts.count; ++i) {
        const bool positive = i < positives;
        switch (opts.kind) {
        case SyntheticKind::triangleTask:
            out.push_back(triangle_example(positive, opts.self_loops, rng));
            break;
        case SyntheticKind::chainLengthTask:
            out.push_back(chain_example(positive, rng));
            break;
        case SyntheticKind::molToy:
            out.push_back(mol_example(positive, rng));
            break;
        }
    }
    return out;
}

} // namespace liftc
