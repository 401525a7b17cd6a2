#pragma once

#include "provgate/timestamp.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace provgate::policy {

enum class Effect { Permit, Deny };

std::string_view to_string(Effect e);
std::optional<Effect> effect_from_string(std::string_view text);

enum class CompareOp { Equal, NotEqual };

struct Comparison {
    std::string path;     // dotted attribute path, e.g. "Actor.role"
    CompareOp op = CompareOp::Equal;
    std::string literal;

    bool operator==(const Comparison&) const = default;
};

// Conjunction of comparisons; `a && b && c` is stored flat.
struct Expr {
    std::vector<Comparison> terms;

    bool operator==(const Expr&) const = default;
};

// The `<record>` element: the operation descriptions a policy governs.
// The entry "Operation.description" names the attribute itself and covers
// every description.
struct RecordScope {
    static constexpr std::string_view kAnyDescription = "Operation.description";

    std::set<std::string> entries;

    bool covers(std::string_view description) const;
    bool operator==(const RecordScope&) const = default;
};

struct Target {
    std::string subject;  // attribute path (e.g. "Actor.ID") or literal actor id
    RecordScope record;
    Expr restriction;

    bool operator==(const Target&) const = default;
};

// The only obligation kind: validity window of `days` from issuance.
struct TemporalConstraint {
    int days = 1;

    bool operator==(const TemporalConstraint&) const = default;
};

struct PolicyDoc {
    std::string id;
    std::optional<Timestamp> issued_at;
    Target target;
    Expr condition;
    Effect effect = Effect::Deny;
    std::vector<TemporalConstraint> obligations;

    bool operator==(const PolicyDoc&) const = default;
};

enum class ParseErrorKind {
    UnknownTag,
    UnbalancedTags,
    UnexpectedElement,
    MalformedAttribute,
    MalformedExpression,
    InvalidRecordScope,
    InvalidSubject,
    UnknownEffect,
    BadDayCount,
    InvalidTimestamp,
};

std::string_view to_string(ParseErrorKind kind);

class PolicyParseError : public std::runtime_error {
public:
    PolicyParseError(ParseErrorKind kind, std::size_t offset, std::string_view source,
                     const std::string& detail);

    ParseErrorKind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    ParseErrorKind kind_;
    std::size_t offset_;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

class PolicyValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

PolicyDoc parse_policy(std::string_view text);
std::string serialize_policy(const PolicyDoc& doc);

// Returns every problem that would stop `doc` from serializing.
std::vector<std::string> validate_policy(const PolicyDoc& doc);

Expr parse_expr(std::string_view text);
std::string serialize_expr(const Expr& expr);

bool is_attribute_path(std::string_view text);
bool is_identifier(std::string_view text);

// Attribute environment for expression evaluation. Absent paths are
// distinct from paths bound to the empty string.
class AttrEnv {
public:
    AttrEnv() = default;
    AttrEnv(std::initializer_list<std::pair<const std::string, std::string>> init) : values_(init) {}

    void set(std::string path, std::string value) { values_[std::move(path)] = std::move(value); }
    const std::string* find(std::string_view path) const;
    bool contains(std::string_view path) const { return find(path) != nullptr; }
    const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

private:
    std::map<std::string, std::string, std::less<>> values_;
};

enum class Truth { False, True, Indeterminate };

std::string_view to_string(Truth t);

// Kleene conjunction: False dominates, then Indeterminate.
Truth truth_and(Truth lhs, Truth rhs);

Truth eval_comparison(const Comparison& cmp, const AttrEnv& env);
Truth eval_expr(const Expr& expr, const AttrEnv& env);

}  // namespace provgate::policy
