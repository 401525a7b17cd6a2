#include "provgate/generator.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace provgate::generation {

using provenance::ActorRecord;
using provenance::OperationRecord;
using provenance::PreferenceRecord;

namespace {

using Triple = std::tuple<std::string, std::string, std::string>;

policy::Expr equals(std::string path, std::string literal) {
    return policy::Expr{{policy::Comparison{std::move(path), policy::CompareOp::Equal,
                                            std::move(literal)}}};
}

}  // namespace

std::string_view to_string(ViolationReason reason) {
    return reason == ViolationReason::DigestMismatch ? "digest-mismatch" : "flagged-description";
}

void validate(const GenConfig& config) {
    if (config.default_temporal_days < 1) {
        throw std::invalid_argument("defaultTemporalDays must be at least 1");
    }
    if (config.permitted_scope.empty()) {
        throw std::invalid_argument("permittedScope must not be empty");
    }
    for (const auto& entry : config.permitted_scope) {
        if (!policy::is_identifier(entry) && !policy::is_attribute_path(entry)) {
            throw std::invalid_argument("permittedScope entry '" + entry +
                                        "' is not an operation name");
        }
    }
}

const SealPoint* expected_seal(const SealHistory& seals, std::string_view resource_id,
                               std::uint64_t sequence) {
    auto it = seals.find(resource_id);
    if (it == seals.end()) return nullptr;
    const SealPoint* best = nullptr;
    for (const auto& point : it->second) {
        if (point.sequence < sequence && (!best || point.sequence >= best->sequence)) best = &point;
    }
    return best;
}

std::vector<std::string> split_actions(std::string_view description) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = description.find(',', start);
        auto part = description.substr(start, comma == description.npos ? description.npos
                                                                        : comma - start);
        if (!part.empty()) out.emplace_back(part);
        if (comma == description.npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<PolicyRecord> build_policy_records(const StoreSnapshot& snapshot,
                                               const std::vector<ViolationEvent>& violations) {
    std::unordered_map<std::string, const ActorRecord*> actors;
    std::set<std::string> contexts;
    for (const auto& r : snapshot.records()) {
        if (auto* a = std::get_if<ActorRecord>(&r)) actors.emplace(a->id, a);
        if (auto* c = std::get_if<provenance::ContextRecord>(&r)) contexts.insert(c->id);
    }

    std::map<Triple, PolicyRecord> groups;
    for (const auto& r : snapshot.records()) {
        auto* op = std::get_if<OperationRecord>(&r);
        if (!op) continue;
        auto actor = actors.find(op->actor_id);
        if (actor == actors.end()) {
            throw GenerationError("operation '" + op->id + "' references unknown actor '" +
                                  op->actor_id + "'");
        }
        if (!contexts.count(op->context_id)) {
            throw GenerationError("operation '" + op->id + "' references unknown context '" +
                                  op->context_id + "'");
        }
        auto [it, inserted] =
            groups.try_emplace(Triple{op->actor_id, op->context_id, op->resource_id});
        PolicyRecord& rec = it->second;
        if (inserted) {
            rec.actor_id = op->actor_id;
            rec.role = actor->second->role;
            rec.context_id = op->context_id;
            rec.resource_id = op->resource_id;
            rec.timestamp = op->timestamp;
        }
        rec.timestamp = std::max(rec.timestamp, op->timestamp);
        for (auto& action : split_actions(op->description))
            rec.operation_descriptions.insert(std::move(action));
        ++rec.operation_count;
    }
    for (const auto& v : violations) {
        auto it = groups.find(Triple{v.actor_id, v.context_id, v.resource_id});
        if (it != groups.end()) ++it->second.violation_count;
    }

    std::vector<PolicyRecord> out;
    out.reserve(groups.size());
    for (auto& [key, rec] : groups) out.push_back(std::move(rec));
    return out;
}

std::vector<ViolationEvent> detect_violations(const StoreSnapshot& snapshot,
                                              const SealHistory& seals, const GenConfig& config) {
    std::vector<ViolationEvent> out;
    const auto records = snapshot.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto* op = std::get_if<OperationRecord>(&records[i]);
        if (!op) continue;
        std::optional<ViolationReason> reason;
        for (const auto& action : split_actions(op->description)) {
            if (config.violation_vocabulary.count(action)) {
                reason = ViolationReason::FlaggedDescription;
                break;
            }
        }
        if (!reason) {
            const SealPoint* seal = expected_seal(seals, op->resource_id, i + 1);
            if (seal && seal->digest != op->output) reason = ViolationReason::DigestMismatch;
        }
        if (reason) {
            out.push_back(ViolationEvent{op->id, op->actor_id, op->context_id, op->resource_id,
                                         *reason, op->timestamp});
        }
    }
    return out;
}

std::vector<PolicyDoc> GeneratedPolicies::all() const {
    std::vector<PolicyDoc> out;
    for (const auto& [resource, docs] : by_resource) out.insert(out.end(), docs.begin(), docs.end());
    out.insert(out.end(), global.begin(), global.end());
    return out;
}

std::vector<PolicyDoc> GeneratedPolicies::for_resource(const std::string& resource_id) const {
    std::vector<PolicyDoc> out;
    if (auto it = by_resource.find(resource_id); it != by_resource.end()) out = it->second;
    out.insert(out.end(), global.begin(), global.end());
    return out;
}

std::string generated_policy_id(std::string_view actor_id, std::string_view context_id,
                                std::string_view resource_id) {
    std::string id = "gen-";
    id += actor_id;
    id += '-';
    id += context_id;
    id += '-';
    id += resource_id;
    return id;
}

PolicyDoc preference_policy(const PreferenceRecord& preference) {
    PolicyDoc doc;
    doc.id = "pref-" + preference.id;
    doc.issued_at = preference.timestamp;
    doc.target.subject = preference.target;
    doc.target.record.entries = {std::string(policy::RecordScope::kAnyDescription)};
    doc.target.restriction = policy::parse_expr(preference.condition);
    doc.condition = doc.target.restriction;
    doc.effect = preference.effect;
    for (const auto& o : preference.obligations) {
        auto days = provenance::parse_day_obligation(o);
        if (!days) throw GenerationError("preference '" + preference.id + "' has malformed obligation '" + o + "'");
        doc.obligations.push_back(policy::TemporalConstraint{*days});
    }
    return doc;
}

GeneratedPolicies generate_policy_sets(const std::vector<PolicyRecord>& records,
                                       const std::vector<ViolationEvent>& violations,
                                       const GenConfig& config, const Timestamp& now,
                                       const std::vector<PreferenceRecord>& preferences) {
    validate(config);
    std::map<Triple, const PolicyRecord*> triples;
    for (const auto& rec : records) {
        triples.emplace(Triple{rec.actor_id, rec.context_id, rec.resource_id}, &rec);
    }
    std::set<Triple> violated;
    for (const auto& v : violations) {
        Triple key{v.actor_id, v.context_id, v.resource_id};
        violated.insert(key);
        triples.try_emplace(key, nullptr);
    }

    GeneratedPolicies out;
    for (const auto& [key, rec] : triples) {
        const auto& [actor_id, context_id, resource_id] = key;
        PolicyDoc doc;
        doc.id = generated_policy_id(actor_id, context_id, resource_id);
        doc.issued_at = now;
        doc.target.subject = actor_id;
        // A violation by an actor with no operations on record has no known
        // role; the restriction then pins the actor id instead.
        doc.target.restriction =
            rec ? equals("Actor.role", rec->role) : equals("Actor.ID", actor_id);
        doc.condition = equals("Context.id", context_id);
        if (violated.count(key)) {
            doc.effect = policy::Effect::Deny;
            doc.target.record.entries = {std::string(policy::RecordScope::kAnyDescription)};
        } else {
            doc.effect = policy::Effect::Permit;
            doc.target.record.entries = config.permitted_scope;
            doc.obligations.push_back(policy::TemporalConstraint{config.default_temporal_days});
        }
        out.by_resource[resource_id].push_back(std::move(doc));
    }

    std::vector<const PreferenceRecord*> denies;
    for (const auto& p : preferences) {
        if (p.effect == policy::Effect::Deny) denies.push_back(&p);
    }
    std::sort(denies.begin(), denies.end(),
              [](const PreferenceRecord* a, const PreferenceRecord* b) { return a->id < b->id; });
    for (const auto* p : denies) out.global.push_back(preference_policy(*p));
    return out;
}

std::vector<PolicyDoc> generate_policies(const std::vector<PolicyRecord>& records,
                                         const std::vector<ViolationEvent>& violations,
                                         const GenConfig& config, const Timestamp& now,
                                         const std::vector<PreferenceRecord>& preferences) {
    return generate_policy_sets(records, violations, config, now, preferences).all();
}

std::vector<PreferenceRecord> preferences(const StoreSnapshot& snapshot) {
    std::vector<PreferenceRecord> out;
    for (const auto& r : snapshot.records()) {
        if (auto* p = std::get_if<PreferenceRecord>(&r)) out.push_back(*p);
    }
    return out;
}

std::string render_report(const std::vector<ViolationEvent>& violations,
                          const StoreSnapshot& snapshot) {
    std::ostringstream os;
    os << "generation report: " << violations.size() << " violation(s)\n";
    for (const auto& v : violations) {
        std::string name = "unknown";
        std::string role = "unknown";
        try {
            ActorRecord actor = store::resolve_actor(v.actor_id, snapshot);
            name = actor.name;
            role = actor.role;
        } catch (const store::NotFoundError&) {
        }
        os << "violation " << v.operation_id << " (" << to_string(v.reason) << ") on resource "
           << v.resource_id << "\n"
           << "  accountable user: " << v.actor_id << " (" << name << ")\n"
           << "  role: " << role << "\n"
           << "  time instant: " << v.timestamp.to_string() << "\n"
           << "  context: " << v.context_id << "\n";
    }
    return os.str();
}

}  // namespace provgate::generation
