#pragma once

#include "provgate/policy.hpp"
#include "provgate/timestamp.hpp"

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace provgate::provenance {

enum class RecordKind { Operation, Message, Actor, Context, Preference };

// The "kind" tag used in canonical lines.
std::string_view to_string(RecordKind kind);

// An access to a resource. `output` is the SHA-256 of the resource bytes
// after the operation. `description` may list several comma-separated
// actions when one request covered more than one.
struct OperationRecord {
    std::string id;
    std::string actor_id;
    std::string context_id;
    std::string description;
    std::string output;
    std::string resource_id;
    Timestamp timestamp;

    bool operator==(const OperationRecord&) const = default;
};

struct MessageRecord {
    std::string id;
    std::string actor_id;
    std::string source_id;
    std::string destination_id;
    std::string description;
    std::string content_carrier;
    Timestamp timestamp;

    bool operator==(const MessageRecord&) const = default;
};

struct ActorRecord {
    std::string id;
    std::string name;
    std::string role;

    bool operator==(const ActorRecord&) const = default;
};

// `parameter` holds environment attributes keyed by dotted lowercase paths
// such as "system.machineid".
struct ContextRecord {
    std::string id;
    std::string state;
    std::map<std::string, std::string> parameter;

    bool operator==(const ContextRecord&) const = default;
};

// Owner-authored preference. `condition` is expression text in the policy
// language; each obligation reads "<n> days".
struct PreferenceRecord {
    std::string id;
    std::string target;
    std::string condition;
    policy::Effect effect = policy::Effect::Deny;
    std::vector<std::string> obligations;
    Timestamp timestamp;

    bool operator==(const PreferenceRecord&) const = default;
};

using ProvenanceRecord =
    std::variant<OperationRecord, MessageRecord, ActorRecord, ContextRecord, PreferenceRecord>;

RecordKind kind_of(const ProvenanceRecord& record);
const std::string& id_of(const ProvenanceRecord& record);

// Every invariant breach found in `record`; empty means valid.
std::vector<std::string> validate_record(const ProvenanceRecord& record);

bool is_dotted_lowercase_path(std::string_view key);

// Parses "<n> days" obligation text; nullopt when malformed or n < 1.
std::optional<int> parse_day_obligation(std::string_view text);

class RecordFormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// One JSON object on one line: "kind" first, then the fields in declaration
// order, no whitespace, no trailing newline. Throws RecordFormatError on an
// invalid record.
std::string canonical_serialize(const ProvenanceRecord& record);

class RecordParseError : public std::runtime_error {
public:
    enum class Kind { Malformed, UnknownKind };

    RecordParseError(Kind kind, std::size_t offset, const std::string& message)
        : std::runtime_error(message), kind_(kind), offset_(offset) {}

    Kind kind() const { return kind_; }
    // Byte offset into the line where the problem was found.
    std::size_t offset() const { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

ProvenanceRecord parse_record(std::string_view line);

}  // namespace provgate::provenance
