#include "provgate/provenance.hpp"

#include "provgate/digest.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>

namespace provgate::provenance {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kKindTags = {"operation", "message", "actor", "context",
                                                       "preference"};

void require_nonempty(std::vector<std::string>& out, const std::string& value,
                      std::string_view what) {
    if (value.empty()) out.push_back("empty " + std::string(what));
}

struct Validator {
    std::vector<std::string>& out;

    void operator()(const OperationRecord& r) const {
        require_nonempty(out, r.id, "id");
        require_nonempty(out, r.actor_id, "actor id");
        require_nonempty(out, r.context_id, "context id");
        require_nonempty(out, r.description, "description");
        require_nonempty(out, r.resource_id, "resource id");
        if (!is_sha256_hex(r.output)) out.emplace_back("output is not a lowercase sha-256 hex digest");
    }
    void operator()(const MessageRecord& r) const {
        require_nonempty(out, r.id, "id");
        require_nonempty(out, r.actor_id, "actor id");
        require_nonempty(out, r.source_id, "source id");
        require_nonempty(out, r.destination_id, "destination id");
        if (r.source_id == r.destination_id) out.emplace_back("source equals destination");
    }
    void operator()(const ActorRecord& r) const {
        require_nonempty(out, r.id, "id");
        require_nonempty(out, r.role, "role");
    }
    void operator()(const ContextRecord& r) const {
        require_nonempty(out, r.id, "id");
        for (const auto& [key, value] : r.parameter) {
            if (!is_dotted_lowercase_path(key))
                out.push_back("parameter key '" + key + "' is not a dotted lowercase path");
        }
    }
    void operator()(const PreferenceRecord& r) const {
        require_nonempty(out, r.id, "id");
        require_nonempty(out, r.target, "target");
        if (std::any_of(r.target.begin(), r.target.end(),
                        [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                                            c == '"' || c == '<' || c == '>'; }))
            out.push_back("target '" + r.target + "' is not a single path or id");
        try {
            policy::parse_expr(r.condition);
        } catch (const policy::PolicyParseError& e) {
            out.push_back(std::string("malformed condition: ") + e.what());
        }
        for (const auto& o : r.obligations) {
            if (!parse_day_obligation(o)) out.push_back("malformed obligation '" + o + "'");
        }
    }
};

Json to_json(const ProvenanceRecord& record) {
    Json j;
    j["kind"] = std::string(to_string(kind_of(record)));
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            j["id"] = r.id;
            if constexpr (std::is_same_v<T, OperationRecord>) {
                j["actorId"] = r.actor_id;
                j["contextId"] = r.context_id;
                j["description"] = r.description;
                j["output"] = r.output;
                j["resourceId"] = r.resource_id;
                j["timestamp"] = r.timestamp.to_string();
            } else if constexpr (std::is_same_v<T, MessageRecord>) {
                j["actorId"] = r.actor_id;
                j["sourceId"] = r.source_id;
                j["destinationId"] = r.destination_id;
                j["description"] = r.description;
                j["contentCarrier"] = r.content_carrier;
                j["timestamp"] = r.timestamp.to_string();
            } else if constexpr (std::is_same_v<T, ActorRecord>) {
                j["name"] = r.name;
                j["role"] = r.role;
            } else if constexpr (std::is_same_v<T, ContextRecord>) {
                j["state"] = r.state;
                Json params = Json::object();
                for (const auto& [k, v] : r.parameter) params[k] = v;
                j["parameter"] = std::move(params);
            } else {
                j["target"] = r.target;
                j["condition"] = r.condition;
                j["effect"] = std::string(policy::to_string(r.effect));
                j["obligations"] = r.obligations;
                j["timestamp"] = r.timestamp.to_string();
            }
        },
        record);
    return j;
}

// Reads fields of a parsed object in canonical key order.
class FieldReader {
public:
    FieldReader(const Json& object, std::string_view line) : obj_(object), line_(line) {
        it_ = obj_.begin();
        ++it_;  // "kind"
    }

    const Json& next(std::string_view key) {
        if (it_ == obj_.end()) fail("missing key '" + std::string(key) + "'", line_.size());
        if (it_.key() != key) {
            fail("expected key '" + std::string(key) + "', found '" + it_.key() + "'",
                 offset_of(it_.key()));
        }
        return *it_++;
    }

    std::string string(std::string_view key) {
        const Json& v = next(key);
        if (!v.is_string()) fail("key '" + std::string(key) + "' must be a string", offset_of(key));
        return v.get<std::string>();
    }

    Timestamp timestamp(std::string_view key) {
        std::string text = string(key);
        try {
            return Timestamp::parse(text);
        } catch (const TimestampError& e) {
            fail(e.what(), offset_of(key));
        }
    }

    void finish() {
        if (it_ != obj_.end()) fail("unexpected key '" + it_.key() + "'", offset_of(it_.key()));
    }

    [[noreturn]] void fail(const std::string& what, std::size_t offset) const {
        throw RecordParseError(RecordParseError::Kind::Malformed, offset,
                               "malformed record at byte " + std::to_string(offset) + ": " + what);
    }

    std::size_t offset_of(std::string_view key) const {
        auto pos = line_.find("\"" + std::string(key) + "\":");
        return pos == std::string_view::npos ? 0 : pos;
    }

private:
    const Json& obj_;
    std::string_view line_;
    Json::const_iterator it_;
};

}  // namespace

std::string_view to_string(RecordKind kind) { return kKindTags[static_cast<std::size_t>(kind)]; }

RecordKind kind_of(const ProvenanceRecord& record) {
    return static_cast<RecordKind>(record.index());
}

const std::string& id_of(const ProvenanceRecord& record) {
    return std::visit([](const auto& r) -> const std::string& { return r.id; }, record);
}

bool is_dotted_lowercase_path(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    char prev = '\0';
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
                        c == '.';
        if (!ok) return false;
        if (c == '.' && prev == '.') return false;
        prev = c;
    }
    return true;
}

std::optional<int> parse_day_obligation(std::string_view text) {
    auto space = text.find(' ');
    if (space == std::string_view::npos || text.substr(space) != " days") return std::nullopt;
    int days = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + space, days);
    if (ec != std::errc() || ptr != text.data() + space || days < 1 || text.front() == '+')
        return std::nullopt;
    return days;
}

std::vector<std::string> validate_record(const ProvenanceRecord& record) {
    std::vector<std::string> out;
    std::visit(Validator{out}, record);
    return out;
}

std::string canonical_serialize(const ProvenanceRecord& record) {
    if (auto problems = validate_record(record); !problems.empty()) {
        throw RecordFormatError("invalid " + std::string(to_string(kind_of(record))) + " record '" +
                                id_of(record) + "': " + problems.front());
    }
    try {
        return to_json(record).dump();
    } catch (const Json::type_error& e) {
        throw RecordFormatError(std::string("record is not valid UTF-8: ") + e.what());
    }
}

ProvenanceRecord parse_record(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        throw RecordParseError(RecordParseError::Kind::Malformed, offset,
                               "malformed record at byte " + std::to_string(offset) + ": " +
                                   e.what());
    }
    if (!j.is_object() || j.empty() || j.begin().key() != "kind" || !j.begin()->is_string()) {
        throw RecordParseError(RecordParseError::Kind::Malformed, 0,
                               "malformed record at byte 0: expected an object starting with "
                               "a string \"kind\"");
    }
    const std::string kind = j.begin()->get<std::string>();
    FieldReader f(j, line);
    ProvenanceRecord result;
    if (kind == "operation") {
        OperationRecord r;
        r.id = f.string("id");
        r.actor_id = f.string("actorId");
        r.context_id = f.string("contextId");
        r.description = f.string("description");
        r.output = f.string("output");
        r.resource_id = f.string("resourceId");
        r.timestamp = f.timestamp("timestamp");
        result = std::move(r);
    } else if (kind == "message") {
        MessageRecord r;
        r.id = f.string("id");
        r.actor_id = f.string("actorId");
        r.source_id = f.string("sourceId");
        r.destination_id = f.string("destinationId");
        r.description = f.string("description");
        r.content_carrier = f.string("contentCarrier");
        r.timestamp = f.timestamp("timestamp");
        result = std::move(r);
    } else if (kind == "actor") {
        ActorRecord r;
        r.id = f.string("id");
        r.name = f.string("name");
        r.role = f.string("role");
        result = std::move(r);
    } else if (kind == "context") {
        ContextRecord r;
        r.id = f.string("id");
        r.state = f.string("state");
        const Json& params = f.next("parameter");
        if (!params.is_object()) f.fail("key 'parameter' must be an object", f.offset_of("parameter"));
        for (const auto& [k, v] : params.items()) {
            if (!v.is_string()) f.fail("parameter values must be strings", f.offset_of(k));
            r.parameter[k] = v.get<std::string>();
        }
        result = std::move(r);
    } else if (kind == "preference") {
        PreferenceRecord r;
        r.id = f.string("id");
        r.target = f.string("target");
        r.condition = f.string("condition");
        const std::string effect = f.string("effect");
        auto parsed = policy::effect_from_string(effect);
        if (!parsed) f.fail("unknown effect '" + effect + "'", f.offset_of("effect"));
        r.effect = *parsed;
        const Json& obligations = f.next("obligations");
        if (!obligations.is_array())
            f.fail("key 'obligations' must be an array", f.offset_of("obligations"));
        for (const auto& o : obligations) {
            if (!o.is_string()) f.fail("obligations must be strings", f.offset_of("obligations"));
            r.obligations.push_back(o.get<std::string>());
        }
        r.timestamp = f.timestamp("timestamp");
        result = std::move(r);
    } else {
        throw RecordParseError(RecordParseError::Kind::UnknownKind, f.offset_of("kind"),
                               "unknown record kind '" + kind + "'");
    }
    f.finish();
    return result;
}

}  // namespace provgate::provenance
