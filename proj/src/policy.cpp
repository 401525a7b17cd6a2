#include "provgate/policy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace provgate::policy {

std::string_view to_string(Effect e) { return e == Effect::Permit ? "Permit" : "Deny"; }

std::optional<Effect> effect_from_string(std::string_view text) {
    if (text == "Permit") return Effect::Permit;
    if (text == "Deny") return Effect::Deny;
    return std::nullopt;
}

std::string_view to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::UnknownTag: return "unknown tag";
        case ParseErrorKind::UnbalancedTags: return "unbalanced tags";
        case ParseErrorKind::UnexpectedElement: return "unexpected element";
        case ParseErrorKind::MalformedAttribute: return "malformed attribute";
        case ParseErrorKind::MalformedExpression: return "malformed expression";
        case ParseErrorKind::InvalidRecordScope: return "invalid record scope";
        case ParseErrorKind::InvalidSubject: return "invalid subject";
        case ParseErrorKind::UnknownEffect: return "unknown effect";
        case ParseErrorKind::BadDayCount: return "bad day count";
        case ParseErrorKind::InvalidTimestamp: return "invalid timestamp";
    }
    return "parse error";
}

std::string_view to_string(Truth t) {
    switch (t) {
        case Truth::False: return "false";
        case Truth::True: return "true";
        case Truth::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view source, std::size_t offset) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < source.size(); ++i) {
        if (source[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

std::string format_error(ParseErrorKind kind, std::size_t offset, std::string_view source,
                         const std::string& detail) {
    auto [line, column] = line_column(source, offset);
    std::string msg(to_string(kind));
    msg += " at line " + std::to_string(line) + ", column " + std::to_string(column);
    if (!detail.empty()) msg += ": " + detail;
    return msg;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

void append_quoted(std::string& out, std::string_view value) {
    out.push_back('"');
    for (char c : value) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
}

// Reads a quoted string starting at text[pos] == '"'. Returns the unescaped
// value and leaves pos one past the closing quote; nullopt when unterminated.
std::optional<std::string> read_quoted(std::string_view text, std::size_t& pos) {
    std::string value;
    std::size_t i = pos + 1;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\\') {
            if (i + 1 >= text.size()) return std::nullopt;
            char next = text[i + 1];
            if (next != '"' && next != '\\') return std::nullopt;
            value.push_back(next);
            i += 2;
            continue;
        }
        if (c == '"') {
            pos = i + 1;
            return value;
        }
        value.push_back(c);
        ++i;
    }
    return std::nullopt;
}

// ── Expressions ─────────────────────────────────────────────────────────────

class ExprParser {
public:
    ExprParser(std::string_view text, std::size_t base, std::string_view source)
        : text_(text), base_(base), source_(source) {}

    Expr parse() {
        Expr expr;
        expr.terms.push_back(comparison());
        skip_ws();
        while (pos_ < text_.size()) {
            if (text_.substr(pos_, 2) != "&&") fail("expected '&&'");
            pos_ += 2;
            expr.terms.push_back(comparison());
            skip_ws();
        }
        return expr;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw PolicyParseError(ParseErrorKind::MalformedExpression, base_ + pos_, source_, what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    }

    Comparison comparison() {
        skip_ws();
        Comparison cmp;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (ident_char(text_[pos_]) || text_[pos_] == '.')) ++pos_;
        cmp.path = std::string(text_.substr(start, pos_ - start));
        if (!is_attribute_path(cmp.path)) {
            pos_ = start;
            fail("expected attribute path");
        }
        skip_ws();
        const auto op = text_.substr(pos_, 2);
        if (op == "==") {
            cmp.op = CompareOp::Equal;
        } else if (op == "!=") {
            cmp.op = CompareOp::NotEqual;
        } else {
            fail("expected '==' or '!='");
        }
        pos_ += 2;
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected quoted string");
        auto literal = read_quoted(text_, pos_);
        if (!literal) fail("unterminated string literal");
        cmp.literal = std::move(*literal);
        return cmp;
    }

    std::string_view text_;
    std::size_t base_;
    std::string_view source_;
    std::size_t pos_ = 0;
};

Expr parse_expr_at(std::string_view text, std::size_t base, std::string_view source) {
    return ExprParser(text, base, source).parse();
}

// ── Document tokens ─────────────────────────────────────────────────────────

enum class TokenType { Open, Close, Text };

struct Token {
    TokenType type;
    std::string name;     // tag name, normalized
    std::string attrs;    // raw attribute text of an open tag
    std::size_t attrs_offset = 0;
    std::string_view text;  // raw text content
    std::size_t offset = 0;
};

constexpr std::string_view kKnownTags[] = {
    "policy",    "issued",    "target", "subject",    "record",
    "restriction", "condition", "effect", "obligation", "temporal constraint",
};

bool known_tag(std::string_view name) {
    return std::find(std::begin(kKnownTags), std::end(kKnownTags), name) != std::end(kKnownTags);
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view source) : src_(source) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        std::vector<std::pair<std::string, std::size_t>> open;
        while (pos_ < src_.size()) {
            if (src_[pos_] == '<') {
                Token tok = tag();
                if (tok.type == TokenType::Open) {
                    open.emplace_back(tok.name, tok.offset);
                } else {
                    if (open.empty()) {
                        throw PolicyParseError(ParseErrorKind::UnbalancedTags, tok.offset, src_,
                                               "closing </" + tok.name + "> without opening tag");
                    }
                    if (open.back().first != tok.name) {
                        throw PolicyParseError(ParseErrorKind::UnbalancedTags, tok.offset, src_,
                                               "expected </" + open.back().first + ">, found </" +
                                                   tok.name + ">");
                    }
                    open.pop_back();
                }
                tokens.push_back(std::move(tok));
            } else {
                tokens.push_back(text());
            }
        }
        if (!open.empty()) {
            throw PolicyParseError(ParseErrorKind::UnbalancedTags, open.back().second, src_,
                                   "<" + open.back().first + "> is never closed");
        }
        return tokens;
    }

private:
    Token tag() {
        const std::size_t start = pos_;
        std::size_t i = pos_ + 1;
        // Quoted attribute values may contain '>'.
        while (i < src_.size() && src_[i] != '>') {
            if (src_[i] == '"') {
                std::size_t q = i;
                if (!read_quoted(src_, q)) {
                    throw PolicyParseError(ParseErrorKind::MalformedAttribute, i, src_,
                                           "unterminated quoted value");
                }
                i = q;
            } else {
                ++i;
            }
        }
        if (i >= src_.size()) {
            throw PolicyParseError(ParseErrorKind::UnbalancedTags, start, src_,
                                   "tag is missing its closing '>'");
        }
        pos_ = i + 1;
        std::string_view inner = src_.substr(start + 1, i - start - 1);
        const std::size_t inner_offset = start + 1;

        Token tok;
        tok.offset = start;
        bool closing = false;
        std::size_t cursor = 0;
        while (cursor < inner.size() && is_space(inner[cursor])) ++cursor;
        if (cursor < inner.size() && inner[cursor] == '/') {
            closing = true;
            ++cursor;
        }
        tok.type = closing ? TokenType::Close : TokenType::Open;

        auto word = [&]() -> std::string_view {
            while (cursor < inner.size() && is_space(inner[cursor])) ++cursor;
            const std::size_t b = cursor;
            while (cursor < inner.size() && !is_space(inner[cursor]) && inner[cursor] != '=' &&
                   inner[cursor] != '"')
                ++cursor;
            return inner.substr(b, cursor - b);
        };

        std::string_view first = word();
        std::size_t after_first = cursor;
        if (first == "temporal") {
            std::string_view second = word();
            if (second == "constraint") {
                tok.name = "temporal constraint";
            } else {
                cursor = after_first;
                tok.name = std::string(first);
            }
        } else {
            tok.name = std::string(first);
        }
        if (tok.name.empty()) {
            throw PolicyParseError(ParseErrorKind::UnknownTag, start, src_, "empty tag name");
        }
        if (!known_tag(tok.name)) {
            throw PolicyParseError(ParseErrorKind::UnknownTag, start, src_,
                                   "<" + std::string(trim(inner)) + ">");
        }
        std::string_view rest = trim(inner.substr(cursor));
        if (!rest.empty()) {
            if (closing || tok.name != "policy") {
                throw PolicyParseError(ParseErrorKind::MalformedAttribute, inner_offset + cursor,
                                       src_, "<" + tok.name + "> takes no attributes");
            }
            tok.attrs = std::string(rest);
            tok.attrs_offset = inner_offset + (rest.data() - inner.data());
        }
        return tok;
    }

    Token text() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != '<') {
            if (src_[pos_] == '"') {
                std::size_t q = pos_;
                if (read_quoted(src_, q)) {
                    pos_ = q;
                    continue;
                }
            }
            ++pos_;
        }
        Token tok;
        tok.type = TokenType::Text;
        tok.text = src_.substr(start, pos_ - start);
        tok.offset = start;
        return tok;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// ── Grammar ─────────────────────────────────────────────────────────────────

class DocParser {
public:
    DocParser(std::vector<Token> tokens, std::string_view source)
        : tokens_(std::move(tokens)), src_(source) {}

    PolicyDoc parse() {
        PolicyDoc doc;
        const Token& open = expect_open("policy");
        doc.id = policy_id(open);

        if (peek_open("issued")) {
            auto [text, offset] = leaf("issued");
            try {
                doc.issued_at = Timestamp::parse(trim(text));
            } catch (const TimestampError& e) {
                throw PolicyParseError(ParseErrorKind::InvalidTimestamp, offset, src_, e.what());
            }
        }

        expect_open("target");
        {
            auto [text, offset] = leaf("subject");
            doc.target.subject = subject(text, offset);
        }
        {
            auto [text, offset] = leaf("record");
            doc.target.record = record_scope(text, offset);
        }
        {
            auto [text, offset] = leaf("restriction");
            doc.target.restriction = expression(text, offset);
        }
        expect_close("target");
        {
            auto [text, offset] = leaf("condition");
            doc.condition = expression(text, offset);
        }
        {
            auto [text, offset] = leaf("effect");
            auto effect = effect_from_string(trim(text));
            if (!effect) {
                throw PolicyParseError(ParseErrorKind::UnknownEffect, offset, src_,
                                       "'" + std::string(trim(text)) + "'");
            }
            doc.effect = *effect;
        }
        if (peek_open("obligation")) {
            expect_open("obligation");
            do {
                auto [text, offset] = leaf("temporal constraint");
                doc.obligations.push_back(TemporalConstraint{day_count(text, offset)});
            } while (peek_open("temporal constraint"));
            expect_close("obligation");
        }
        expect_close("policy");
        skip_blank_text();
        if (pos_ < tokens_.size()) unexpected("content after </policy>");
        return doc;
    }

private:
    [[noreturn]] void unexpected(const std::string& expected) const {
        std::size_t offset = pos_ < tokens_.size() ? tokens_[pos_].offset : src_.size();
        std::string found = "end of input";
        if (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_];
            if (t.type == TokenType::Open) found = "<" + t.name + ">";
            else if (t.type == TokenType::Close) found = "</" + t.name + ">";
            else found = "text '" + std::string(trim(t.text)) + "'";
        }
        throw PolicyParseError(ParseErrorKind::UnexpectedElement, offset, src_,
                               "expected " + expected + ", found " + found);
    }

    void skip_blank_text() {
        while (pos_ < tokens_.size() && tokens_[pos_].type == TokenType::Text &&
               trim(tokens_[pos_].text).empty())
            ++pos_;
    }

    bool peek_open(std::string_view name) {
        skip_blank_text();
        return pos_ < tokens_.size() && tokens_[pos_].type == TokenType::Open &&
               tokens_[pos_].name == name;
    }

    const Token& expect_open(std::string_view name) {
        if (!peek_open(name)) unexpected("<" + std::string(name) + ">");
        return tokens_[pos_++];
    }

    void expect_close(std::string_view name) {
        skip_blank_text();
        if (pos_ >= tokens_.size() || tokens_[pos_].type != TokenType::Close ||
            tokens_[pos_].name != name)
            unexpected("</" + std::string(name) + ">");
        ++pos_;
    }

    // <name> text </name>; returns the raw text and its offset.
    std::pair<std::string_view, std::size_t> leaf(std::string_view name) {
        const Token& open = expect_open(name);
        std::string_view text;
        std::size_t offset = open.offset;
        if (pos_ < tokens_.size() && tokens_[pos_].type == TokenType::Text) {
            text = tokens_[pos_].text;
            offset = tokens_[pos_].offset;
            ++pos_;
        }
        if (pos_ >= tokens_.size() || tokens_[pos_].type != TokenType::Close ||
            tokens_[pos_].name != name)
            unexpected("</" + std::string(name) + ">");
        ++pos_;
        // Report positions at the first non-blank character.
        std::size_t lead = 0;
        while (lead < text.size() && is_space(text[lead])) ++lead;
        return {text, offset + lead};
    }

    std::string policy_id(const Token& open) {
        std::string_view attrs = open.attrs;
        std::size_t i = 0;
        auto fail = [&](const std::string& what) {
            throw PolicyParseError(ParseErrorKind::MalformedAttribute, open.attrs_offset + i, src_,
                                   what);
        };
        if (attrs.substr(0, 2) != "ID") fail("expected ID=\"...\" on <policy>");
        i = 2;
        while (i < attrs.size() && is_space(attrs[i])) ++i;
        if (i >= attrs.size() || attrs[i] != '=') fail("expected '=' after ID");
        ++i;
        while (i < attrs.size() && is_space(attrs[i])) ++i;
        if (i >= attrs.size() || attrs[i] != '"') fail("expected quoted ID value");
        auto value = read_quoted(attrs, i);
        if (!value) fail("unterminated ID value");
        while (i < attrs.size() && is_space(attrs[i])) ++i;
        if (i != attrs.size()) fail("unexpected attribute text");
        if (value->empty()) fail("policy ID is empty");
        return *value;
    }

    std::string subject(std::string_view raw, std::size_t offset) {
        std::string_view text = trim(raw);
        if (text.empty()) {
            throw PolicyParseError(ParseErrorKind::InvalidSubject, offset, src_, "empty subject");
        }
        for (char c : text) {
            if (is_space(c) || c == '"' || c == '>' || c == '<') {
                throw PolicyParseError(ParseErrorKind::InvalidSubject, offset, src_,
                                       "subject must be a single path or id");
            }
        }
        return std::string(text);
    }

    RecordScope record_scope(std::string_view raw, std::size_t offset) {
        RecordScope scope;
        std::string_view text = trim(raw);
        std::size_t start = 0;
        while (true) {
            std::size_t comma = text.find(',', start);
            std::string_view item =
                trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
            bool ok = !item.empty();
            // Each entry is an identifier or a dotted attribute path.
            std::size_t seg = 0;
            while (ok && seg <= item.size()) {
                std::size_t dot = item.find('.', seg);
                ok = is_identifier(item.substr(seg, dot == item.npos ? item.npos : dot - seg));
                if (dot == item.npos) break;
                seg = dot + 1;
            }
            if (!ok) {
                throw PolicyParseError(ParseErrorKind::InvalidRecordScope, offset, src_,
                                       "bad operation entry '" + std::string(item) + "'");
            }
            scope.entries.emplace(item);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return scope;
    }

    Expr expression(std::string_view raw, std::size_t offset) {
        std::string_view text = trim(raw);
        if (text.empty()) {
            throw PolicyParseError(ParseErrorKind::MalformedExpression, offset, src_,
                                   "empty expression");
        }
        return parse_expr_at(text, offset, src_);
    }

    int day_count(std::string_view raw, std::size_t offset) {
        std::string_view text = trim(raw);
        auto bad = [&](const std::string& what) {
            throw PolicyParseError(ParseErrorKind::BadDayCount, offset, src_, what);
        };
        std::size_t i = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
        if (i == 0) bad("expected a positive integer day count, got '" + std::string(text) + "'");
        std::string_view number = text.substr(0, i);
        std::string_view unit = trim(text.substr(i));
        if (unit != "days" || i == text.size() || !is_space(text[i])) {
            bad("expected '<n> days', got '" + std::string(text) + "'");
        }
        int days = 0;
        auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), days);
        if (ec != std::errc() || ptr != number.data() + number.size()) bad("day count out of range");
        if (days < 1) bad("day count must be at least 1");
        return days;
    }

    std::vector<Token> tokens_;
    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

PolicyParseError::PolicyParseError(ParseErrorKind kind, std::size_t offset, std::string_view source,
                                   const std::string& detail)
    : std::runtime_error(format_error(kind, offset, source, detail)), kind_(kind), offset_(offset) {
    auto [line, column] = line_column(source, offset);
    line_ = line;
    column_ = column;
}

bool RecordScope::covers(std::string_view description) const {
    return entries.count(std::string(kAnyDescription)) > 0 ||
           entries.find(std::string(description)) != entries.end();
}

bool is_identifier(std::string_view text) {
    if (text.empty() || !ident_start(text.front())) return false;
    return std::all_of(text.begin(), text.end(), ident_char);
}

bool is_attribute_path(std::string_view text) {
    std::size_t segments = 0;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = text.find('.', start);
        if (!is_identifier(text.substr(start, dot == text.npos ? text.npos : dot - start)))
            return false;
        ++segments;
        if (dot == text.npos) break;
        start = dot + 1;
    }
    return segments >= 2;
}

Expr parse_expr(std::string_view text) {
    std::string_view trimmed = trim(text);
    if (trimmed.empty()) {
        throw PolicyParseError(ParseErrorKind::MalformedExpression, 0, text, "empty expression");
    }
    return parse_expr_at(trimmed, static_cast<std::size_t>(trimmed.data() - text.data()), text);
}

std::string serialize_expr(const Expr& expr) {
    std::string out;
    for (std::size_t i = 0; i < expr.terms.size(); ++i) {
        const Comparison& c = expr.terms[i];
        if (i > 0) out += " && ";
        out += c.path;
        out += c.op == CompareOp::Equal ? " == " : " != ";
        append_quoted(out, c.literal);
    }
    return out;
}

std::vector<std::string> validate_policy(const PolicyDoc& doc) {
    std::vector<std::string> problems;
    if (doc.id.empty()) problems.emplace_back("empty policy id");
    const std::string& subject = doc.target.subject;
    if (subject.empty() ||
        std::any_of(subject.begin(), subject.end(),
                    [](char c) { return is_space(c) || c == '"' || c == '<' || c == '>'; }))
        problems.emplace_back("invalid subject '" + subject + "'");
    if (doc.target.record.entries.empty()) problems.emplace_back("empty record scope");
    for (const auto& entry : doc.target.record.entries) {
        bool ok = is_identifier(entry) || is_attribute_path(entry);
        if (!ok) problems.emplace_back("invalid record entry '" + entry + "'");
    }
    auto check_expr = [&](const Expr& e, std::string_view what) {
        if (e.terms.empty()) problems.emplace_back("empty " + std::string(what));
        for (const auto& t : e.terms) {
            if (!is_attribute_path(t.path))
                problems.emplace_back("invalid path '" + t.path + "' in " + std::string(what));
        }
    };
    check_expr(doc.target.restriction, "restriction");
    check_expr(doc.condition, "condition");
    for (const auto& o : doc.obligations) {
        if (o.days < 1) problems.emplace_back("temporal constraint below 1 day");
    }
    return problems;
}

std::string serialize_policy(const PolicyDoc& doc) {
    if (auto problems = validate_policy(doc); !problems.empty()) {
        throw PolicyValidationError("cannot serialize policy: " + problems.front());
    }
    std::string out = "<policy ID=";
    append_quoted(out, doc.id);
    out += ">\n";
    if (doc.issued_at) out += "  <issued>" + doc.issued_at->to_string() + "</issued>\n";
    out += "  <target>\n";
    out += "    <subject>" + doc.target.subject + "</subject>\n";
    out += "    <record>";
    bool first = true;
    for (const auto& entry : doc.target.record.entries) {
        if (!first) out += ",";
        out += entry;
        first = false;
    }
    out += "</record>\n";
    out += "    <restriction>" + serialize_expr(doc.target.restriction) + "</restriction>\n";
    out += "  </target>\n";
    out += "  <condition>" + serialize_expr(doc.condition) + "</condition>\n";
    out += "  <effect>" + std::string(to_string(doc.effect)) + "</effect>\n";
    if (!doc.obligations.empty()) {
        out += "  <obligation>\n";
        for (const auto& o : doc.obligations) {
            out += "    <temporal constraint>" + std::to_string(o.days) +
                   " days</temporal constraint>\n";
        }
        out += "  </obligation>\n";
    }
    out += "</policy>\n";
    return out;
}

PolicyDoc parse_policy(std::string_view text) {
    return DocParser(Tokenizer(text).run(), text).parse();
}

const std::string* AttrEnv::find(std::string_view path) const {
    auto it = values_.find(path);
    return it == values_.end() ? nullptr : &it->second;
}

Truth truth_and(Truth lhs, Truth rhs) {
    if (lhs == Truth::False || rhs == Truth::False) return Truth::False;
    if (lhs == Truth::Indeterminate || rhs == Truth::Indeterminate) return Truth::Indeterminate;
    return Truth::True;
}

Truth eval_comparison(const Comparison& cmp, const AttrEnv& env) {
    const std::string* value = env.find(cmp.path);
    if (!value) return Truth::Indeterminate;
    const bool equal = *value == cmp.literal;
    return (cmp.op == CompareOp::Equal) == equal ? Truth::True : Truth::False;
}

Truth eval_expr(const Expr& expr, const AttrEnv& env) {
    if (expr.terms.empty()) return Truth::Indeterminate;
    Truth result = Truth::True;
    for (const auto& term : expr.terms) result = truth_and(result, eval_comparison(term, env));
    return result;
}

}  // namespace provgate::policy
