#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "liftc/logic.hpp"

namespace liftc {

struct SourceSpan {
    std::string file;
    int line = 1;   // 1-based
    int column = 1; // 1-based

    std::string to_string() const {
        return file + ":" + std::to_string(line) + ":" + std::to_string(column);
    }
};

struct ParseError : Error {
    SourceSpan span;

    ParseError(SourceSpan s, const std::string& message)
        : Error(s.to_string() + ": " + message), span(std::move(s)) {}
};

// Surface language:
//   rule      := [weight "::"] atom [":-" body] [annotations] "."
//   body      := blit { "," blit } ;  blit := [weight (":"|"::")] atom
//   weight    := NAME ["{" INT "," INT "}"] | NUMBER | "[" NUMBER {"," NUMBER} "]"
//   atom      := NAME ["(" term {"," term} ")"] ;  term := NAME | VARIABLE
//   annotations := "[" key "=" value {"," key "=" value} "]"   (keys: and, agg)
//   directives  := "#config" k=v{,k=v} "." | "#predicate" NAME "/" INT k=v{,...} "."
// Comments run from '%' to end of line. Constants start lowercase or with a
// digit, variables uppercase.
//
// `rule_spans`, when given, receives one source position per parsed rule
// (for line-anchored diagnostics).
Template parse_template(std::string_view text, const std::string& file = "<input>",
                        std::vector<SourceSpan>* rule_spans = nullptr);

// Example files hold facts `value :: atom.` and queries `value :: atom ?`
// (value defaults to scalar 1); examples are separated by blank lines or an
// explicit `#example` delimiter.
std::vector<Example> parse_examples(std::string_view text, const std::string& file = "<input>");

std::string serialize(const Template& tpl);
std::string serialize(const std::vector<Example>& examples);

} // namespace liftc
