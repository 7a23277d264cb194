#include "liftc/symbols.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>

namespace liftc {

namespace {

struct Interner {
    std::mutex mutex;
    std::deque<std::string> names;
    std::unordered_map<std::string_view, Symbol> index;
};

Interner& interner() {
    static Interner table;
    return table;
}

} // namespace

Symbol intern(std::string_view name) {
    auto& t = interner();
    std::lock_guard lock(t.mutex);
    if (auto it = t.index.find(name); it != t.index.end())
        return it->second;
    t.names.emplace_back(name);
    const Symbol id = static_cast<Symbol>(t.names.size() - 1);
    t.index.emplace(t.names.back(), id);
    return id;
}

const std::string& symbol_name(Symbol s) {
    auto& t = interner();
    std::lock_guard lock(t.mutex);
    return t.names.at(s);
}

} // namespace liftc
