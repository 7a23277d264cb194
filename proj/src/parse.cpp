#include "liftc/parse.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace liftc {

namespace {

enum class Tok {
    ident,
    number,
    directive, // '#name'
    lparen,
    rparen,
    lbrace,
    rbrace,
    lbracket,
    rbracket,
    comma,
    period,
    question,
    colon,
    coloncolon,
    colondash,
    equals,
    slash,
    eof,
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0;
    SourceSpan span;
    bool blank_before = false; // at least one fully blank line precedes it
};

class Lexer {
public:
    Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            Token t = next();
            bool stop = t.kind == Tok::eof;
            out.push_back(std::move(t));
            if (stop)
                return out;
        }
    }

private:
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    SourceSpan here() const { return {file_, line_, col_}; }

    Token next() {
        int newlines = 0;
        while (pos_ < src_.size()) {
            char c = peek();
            if (c == '%') {
                while (pos_ < src_.size() && peek() != '\n')
                    advance();
            } else if (c == '\n') {
                ++newlines;
                advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
        Token t;
        t.span = here();
        t.blank_before = newlines >= 2;
        if (pos_ >= src_.size()) {
            t.kind = Tok::eof;
            return t;
        }
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Tok::ident;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
                t.text += advance();
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && (std::isdigit(static_cast<unsigned char>(peek(1))) || peek(1) == '.'))) {
            return lex_number(t);
        }
        if (c == '#') {
            advance();
            if (!std::isalpha(static_cast<unsigned char>(peek())))
                throw ParseError(t.span, "expected a directive name after '#'");
            t.kind = Tok::directive;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
                t.text += advance();
            return t;
        }
        switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case '.': t.kind = Tok::period; break;
        case '?': t.kind = Tok::question; break;
        case '=': t.kind = Tok::equals; break;
        case '/': t.kind = Tok::slash; break;
        case ':':
            advance();
            if (peek() == ':') {
                advance();
                t.kind = Tok::coloncolon;
            } else if (peek() == '-') {
                advance();
                t.kind = Tok::colondash;
            } else {
                t.kind = Tok::colon;
            }
            return t;
        default:
            throw ParseError(t.span, std::string("unexpected character '") + c + "'");
        }
        advance();
        return t;
    }

    Token lex_number(Token t) {
        t.kind = Tok::number;
        std::string text;
        if (peek() == '-')
            text += advance();
        while (std::isdigit(static_cast<unsigned char>(peek())))
            text += advance();
        // A '.' is part of the number only when digits follow; otherwise it
        // is the clause terminator.
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            text += advance();
            while (std::isdigit(static_cast<unsigned char>(peek())))
                text += advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t mark = pos_;
            std::string exp;
            exp += advance();
            if (peek() == '+' || peek() == '-')
                exp += advance();
            if (std::isdigit(static_cast<unsigned char>(peek()))) {
                while (std::isdigit(static_cast<unsigned char>(peek())))
                    exp += advance();
                text += exp;
            } else {
                // not an exponent; rewind is impossible mid-line, so reject
                throw ParseError({file_, line_, col_}, "malformed exponent in number");
            }
            (void)mark;
        }
        if (text.empty() || text == "-")
            throw ParseError(t.span, "malformed number");
        t.text = text;
        t.number = parse_double(text);
        return t;
    }

    std::string_view src_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool is_variable_name(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

class Parser {
public:
    Parser(std::string_view src, const std::string& file)
        : tokens_(Lexer(src, file).run()) {}

    Template template_file(std::vector<SourceSpan>* rule_spans) {
        Template tpl;
        while (!at(Tok::eof)) {
            if (at(Tok::directive)) {
                directive(tpl);
                continue;
            }
            if (rule_spans)
                rule_spans->push_back(cur().span);
            tpl.rules.push_back(clause());
        }
        // A slot's `{m,n}` declaration may appear at any occurrence; bare
        // mentions of the same slot elsewhere take that shape.
        auto patch = [&](WeightSpec& w) {
            if (!w.is_learnable())
                return;
            const auto& l = w.learnable_ref();
            if (l.rows == 1 && l.cols == 1) {
                auto it = explicit_shapes_.find(l.slot);
                if (it != explicit_shapes_.end())
                    w = WeightSpec::learnable(l.slot, it->second.rows, it->second.cols);
            }
        };
        for (auto& rule : tpl.rules) {
            patch(rule.head_weight);
            for (auto& lit : rule.body)
                patch(lit.weight);
        }
        return tpl;
    }

    std::vector<Example> examples_file() {
        std::vector<Example> out;
        bool fresh = true; // next item starts a new example
        while (!at(Tok::eof)) {
            if (cur().blank_before)
                fresh = true;
            if (at(Tok::directive)) {
                if (cur().text != "example")
                    throw ParseError(cur().span, "unknown directive '#" + cur().text +
                                                     "' in an examples file");
                take();
                fresh = true;
                continue;
            }
            if (fresh || out.empty()) {
                out.emplace_back();
                fresh = false;
            }
            example_item(out.back());
        }
        return out;
    }

private:
    const Token& cur() const { return tokens_[index_]; }
    const Token& peek(std::size_t ahead = 1) const {
        return tokens_[std::min(index_ + ahead, tokens_.size() - 1)];
    }
    bool at(Tok k) const { return cur().kind == k; }

    Token take() { return tokens_[index_++]; }

    Token expect(Tok k, const char* what) {
        if (!at(k))
            throw ParseError(cur().span, std::string("expected ") + what);
        return take();
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(cur().span, msg); }

    // --- shared pieces ---

    long integer(const char* what) {
        Token t = expect(Tok::number, what);
        double rounded = std::round(t.number);
        if (t.number != rounded || rounded < 0)
            throw ParseError(t.span, std::string(what) + " must be a nonnegative integer");
        return static_cast<long>(rounded);
    }

    Term term() {
        // Constants start with a lowercase letter or a digit; the latter lex
        // as numbers and are interned by their spelling.
        if (at(Tok::number))
            return Term::constant(take().text);
        Token t = expect(Tok::ident, "a term");
        return is_variable_name(t.text) ? Term::variable(t.text) : Term::constant(t.text);
    }

    Atom atom() {
        Token name = expect(Tok::ident, "a predicate name");
        if (is_variable_name(name.text))
            throw ParseError(name.span, "predicate names start with a lowercase letter");
        std::vector<Term> terms;
        if (at(Tok::lparen)) {
            take();
            terms.push_back(term());
            while (at(Tok::comma)) {
                take();
                terms.push_back(term());
            }
            expect(Tok::rparen, "')'");
        }
        Atom a;
        a.pred = Predicate::make(name.text, static_cast<std::uint32_t>(terms.size()));
        a.terms = std::move(terms);
        return a;
    }

    TensorValue value_literal() {
        if (at(Tok::number))
            return scalar_value(take().number);
        expect(Tok::lbracket, "a number or '['");
        std::vector<double> xs;
        xs.push_back(expect(Tok::number, "a number").number);
        while (at(Tok::comma)) {
            take();
            xs.push_back(expect(Tok::number, "a number").number);
        }
        expect(Tok::rbracket, "']'");
        return vector_value(xs);
    }

    // True when the upcoming tokens form a weight (as opposed to an atom).
    bool looks_like_weight(bool head_position) const {
        if (at(Tok::number) || at(Tok::lbracket))
            return true;
        if (!at(Tok::ident))
            return false;
        Tok after = peek().kind;
        if (after == Tok::lbrace || after == Tok::coloncolon)
            return true;
        return !head_position && after == Tok::colon;
    }

    WeightSpec weight() {
        if (at(Tok::number) || at(Tok::lbracket))
            return WeightSpec::fixed(value_literal());
        Token name = expect(Tok::ident, "a weight");
        int rows = 1, cols = 1; // bare identifier: a learnable scalar slot
        if (at(Tok::lbrace)) {
            Token open = take();
            rows = static_cast<int>(integer("shape rows"));
            expect(Tok::comma, "','");
            cols = static_cast<int>(integer("shape cols"));
            expect(Tok::rbrace, "'}'");
            if (rows < 1 || cols < 1)
                throw ParseError(open.span, "shape dimensions must be at least 1");
            explicit_shapes_.emplace(name.text, SlotShape{rows, cols});
        }
        return WeightSpec::learnable(name.text, rows, cols);
    }

    WeightedRule clause() {
        WeightedRule rule;
        if (looks_like_weight(true)) {
            rule.head_weight = weight();
            expect(Tok::coloncolon, "'::' after the head weight");
        }
        rule.head = atom();
        if (at(Tok::colondash)) {
            take();
            for (;;) {
                BodyLiteral lit;
                if (looks_like_weight(false)) {
                    lit.weight = weight();
                    if (at(Tok::colon) || at(Tok::coloncolon))
                        take();
                    else
                        fail("expected ':' after a body weight");
                }
                lit.atom = atom();
                rule.body.push_back(std::move(lit));
                if (!at(Tok::comma))
                    break;
                take();
            }
        }
        if (at(Tok::lbracket))
            rule.fns = annotations();
        expect(Tok::period, "'.' at the end of the clause");
        return rule;
    }

    RuleOverrides annotations() {
        RuleOverrides fns;
        expect(Tok::lbracket, "'['");
        for (;;) {
            Token key = expect(Tok::ident, "an annotation key");
            expect(Tok::equals, "'='");
            Token value = expect(Tok::ident, "an annotation value");
            if (key.text == "and") {
                auto act = activation_from_string(value.text);
                if (!act)
                    throw ParseError(value.span, "unknown activation '" + value.text + "'");
                fns.rule_activation = *act;
            } else if (key.text == "agg") {
                auto agg = aggregation_from_string(value.text);
                if (!agg)
                    throw ParseError(value.span, "unknown aggregation '" + value.text + "'");
                fns.aggregation = *agg;
            } else {
                throw ParseError(key.span, "unknown annotation '" + key.text +
                                               "' (expected and/agg)");
            }
            if (!at(Tok::comma))
                break;
            take();
        }
        expect(Tok::rbracket, "']'");
        return fns;
    }

    void directive(Template& tpl) {
        Token d = take();
        if (d.text == "config") {
            for (;;) {
                Token key = expect(Tok::ident, "a config key");
                expect(Tok::equals, "'='");
                Token value = expect(Tok::ident, "a config value");
                apply_config(tpl.fns, key, value);
                if (!at(Tok::comma))
                    break;
                take();
            }
            expect(Tok::period, "'.' after #config");
        } else if (d.text == "predicate") {
            Token name = expect(Tok::ident, "a predicate name");
            expect(Tok::slash, "'/'");
            long arity = integer("arity");
            Predicate pred = Predicate::make(name.text, static_cast<std::uint32_t>(arity));
            for (;;) {
                Token key = expect(Tok::ident, "a config key");
                expect(Tok::equals, "'='");
                Token value = expect(Tok::ident, "a config value");
                if (key.text == "or") {
                    auto act = activation_from_string(value.text);
                    if (!act)
                        throw ParseError(value.span,
                                         "unknown activation '" + value.text + "'");
                    tpl.fns.atom_overrides[pred] = *act;
                } else if (key.text == "trainable") {
                    if (value.text != "true" && value.text != "false")
                        throw ParseError(value.span, "trainable expects true or false");
                    if (value.text == "true")
                        tpl.fns.trainable_fact_predicates.insert(pred);
                    else
                        tpl.fns.trainable_fact_predicates.erase(pred);
                } else {
                    throw ParseError(key.span,
                                     "only 'or' and 'trainable' can be set per predicate");
                }
                if (!at(Tok::comma))
                    break;
                take();
            }
            expect(Tok::period, "'.' after #predicate");
        } else {
            throw ParseError(d.span, "unknown directive '#" + d.text + "'");
        }
    }

    void apply_config(FunctionConfig& fns, const Token& key, const Token& value) {
        if (key.text == "and" || key.text == "or" || key.text == "output") {
            auto act = activation_from_string(value.text);
            if (!act)
                throw ParseError(value.span, "unknown activation '" + value.text + "'");
            if (key.text == "and")
                fns.rule_activation = *act;
            else if (key.text == "or")
                fns.atom_activation = *act;
            else
                fns.output_activation = *act;
        } else if (key.text == "agg") {
            auto agg = aggregation_from_string(value.text);
            if (!agg)
                throw ParseError(value.span, "unknown aggregation '" + value.text + "'");
            fns.aggregation = *agg;
        } else if (key.text == "bias") {
            if (value.text != "true" && value.text != "false")
                throw ParseError(value.span, "bias expects true or false");
            fns.slot_bias = value.text == "true";
        } else {
            throw ParseError(key.span, "unknown config key '" + key.text +
                                           "' (expected and/or/agg/output/bias)");
        }
    }

    void example_item(Example& ex) {
        TensorValue value = scalar_value(1.0);
        if (at(Tok::number) || at(Tok::lbracket)) {
            value = value_literal();
            expect(Tok::coloncolon, "'::' after a fact value");
        }
        Token first = cur();
        Atom a = atom();
        if (at(Tok::colondash))
            throw ParseError(cur().span, "rules inside examples are not supported");
        bool query = at(Tok::question);
        if (!query && !at(Tok::period))
            fail("expected '.' or '?' after the atom");
        take();
        if (!a.is_ground())
            throw ParseError(first.span, (query ? std::string("query ") : std::string("fact ")) +
                                             a.to_string() + " is not ground");
        if (query) {
            if (!all_finite(value))
                throw ParseError(first.span, "query target must be finite");
            ex.queries.push_back({std::move(value), std::move(a)});
        } else {
            ex.facts.push_back({std::move(value), std::move(a)});
        }
    }

    std::vector<Token> tokens_;
    std::size_t index_ = 0;
    std::map<std::string, SlotShape> explicit_shapes_;
};

std::string weight_to_source(const WeightSpec& w, std::set<std::string>& printed) {
    if (w.is_fixed()) {
        const TensorValue& v = w.fixed_ref().value;
        if (is_scalar(v))
            return format_double(v(0, 0));
        if (v.cols() != 1)
            throw Error("fixed matrix weights have no surface syntax");
        std::string out = "[";
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            if (r)
                out += ", ";
            out += format_double(v(r, 0));
        }
        return out + "]";
    }
    const auto& l = w.learnable_ref();
    std::string out = l.slot;
    const bool scalar = l.rows == 1 && l.cols == 1;
    if (!scalar && printed.insert(l.slot).second)
        out += " {" + std::to_string(l.rows) + "," + std::to_string(l.cols) + "}";
    return out;
}

std::string value_to_source(const TensorValue& v) {
    if (is_scalar(v))
        return format_double(v(0, 0));
    if (v.cols() != 1)
        throw Error("matrix values have no surface syntax");
    std::string out = "[";
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        if (r)
            out += ", ";
        out += format_double(v(r, 0));
    }
    return out + "]";
}

} // namespace

Template parse_template(std::string_view text, const std::string& file,
                        std::vector<SourceSpan>* rule_spans) {
    return Parser(text, file).template_file(rule_spans);
}

std::vector<Example> parse_examples(std::string_view text, const std::string& file) {
    return Parser(text, file).examples_file();
}

std::string serialize(const Template& tpl) {
    std::string out;
    const FunctionConfig defaults;
    const auto& fns = tpl.fns;
    if (fns.rule_activation != defaults.rule_activation ||
        fns.atom_activation != defaults.atom_activation ||
        fns.aggregation != defaults.aggregation || fns.output_activation.has_value() ||
        fns.slot_bias) {
        out += "#config and=";
        out += to_string(fns.rule_activation);
        out += ", or=";
        out += to_string(fns.atom_activation);
        out += ", agg=";
        out += to_string(fns.aggregation);
        if (fns.output_activation) {
            out += ", output=";
            out += to_string(*fns.output_activation);
        }
        if (fns.slot_bias)
            out += ", bias=true";
        out += ".\n";
    }
    for (const auto& [pred, act] : fns.atom_overrides) {
        out += "#predicate " + pred.text() + "/" + std::to_string(pred.arity) +
               " or=" + to_string(act) + ".\n";
    }
    for (const auto& pred : fns.trainable_fact_predicates) {
        out += "#predicate " + pred.text() + "/" + std::to_string(pred.arity) +
               " trainable=true.\n";
    }
    std::set<std::string> printed;
    for (const auto& rule : tpl.rules) {
        if (!rule.head_weight.is_absent())
            out += weight_to_source(rule.head_weight, printed) + " :: ";
        out += rule.head.to_string();
        if (!rule.body.empty()) {
            out += " :- ";
            for (std::size_t i = 0; i < rule.body.size(); ++i) {
                if (i)
                    out += ", ";
                const auto& lit = rule.body[i];
                if (!lit.weight.is_absent())
                    out += weight_to_source(lit.weight, printed) + " : ";
                out += lit.atom.to_string();
            }
        }
        if (rule.fns.any()) {
            out += " [";
            bool first = true;
            if (rule.fns.rule_activation) {
                out += std::string("and=") + to_string(*rule.fns.rule_activation);
                first = false;
            }
            if (rule.fns.aggregation) {
                if (!first)
                    out += ", ";
                out += std::string("agg=") + to_string(*rule.fns.aggregation);
            }
            out += "]";
        }
        out += ".\n";
    }
    return out;
}

std::string serialize(const std::vector<Example>& examples) {
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i)
            out += "\n";
        for (const auto& fact : examples[i].facts) {
            if (is_scalar(fact.value) && fact.value(0, 0) == 1.0)
                out += fact.atom.to_string() + ".\n";
            else
                out += value_to_source(fact.value) + " :: " + fact.atom.to_string() + ".\n";
        }
        for (const auto& query : examples[i].queries)
            out += value_to_source(query.target) + " :: " + query.atom.to_string() + " ?\n";
    }
    return out;
}

} // namespace liftc
