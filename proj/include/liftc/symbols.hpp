#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace liftc {

// Interned identifier. Two symbols with the same spelling compare equal by
// id, which keeps atom comparison and hashing away from string contents.
using Symbol = std::uint32_t;

Symbol intern(std::string_view name);
const std::string& symbol_name(Symbol s);

} // namespace liftc
