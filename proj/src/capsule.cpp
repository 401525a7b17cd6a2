#include "provgate/capsule.hpp"

#include "provgate/digest.hpp"

#include <json.hpp>

namespace provgate::capsule {

using Json = nlohmann::ordered_json;

std::string policy_digest(const std::vector<PolicyDoc>& policies) {
    std::string concatenated;
    for (const auto& p : policies) concatenated += policy::serialize_policy(p);
    return sha256_hex(concatenated);
}

std::string seal_digest(std::string_view resource_id, std::string_view payload_digest,
                        std::string_view policy_digest) {
    std::string input;
    input.reserve(resource_id.size() + payload_digest.size() + policy_digest.size());
    input += resource_id;
    input += payload_digest;
    input += policy_digest;
    return sha256_hex(input);
}

Capsule seal(std::string resource_id, std::string_view payload, std::vector<PolicyDoc> policies,
             const Timestamp& now) {
    if (resource_id.empty()) throw std::invalid_argument("seal: empty resource id");
    Capsule c;
    c.resource_id = std::move(resource_id);
    c.payload_digest = sha256_hex(payload);
    c.policy_digest = policy_digest(policies);
    c.seal_digest = seal_digest(c.resource_id, c.payload_digest, c.policy_digest);
    c.policies = std::move(policies);
    c.created_at = now;
    return c;
}

VerifyResult verify(const Capsule& capsule, std::string_view payload) {
    if (sha256_hex(payload) != capsule.payload_digest) return {false, "payload-digest-mismatch"};
    std::string policies;
    try {
        policies = policy_digest(capsule.policies);
    } catch (const policy::PolicyValidationError&) {
        return {false, "policy-digest-mismatch"};
    }
    if (policies != capsule.policy_digest) return {false, "policy-digest-mismatch"};
    if (seal_digest(capsule.resource_id, capsule.payload_digest, capsule.policy_digest) !=
        capsule.seal_digest)
        return {false, "seal-digest-mismatch"};
    return {true, {}};
}

std::string to_json(const Capsule& capsule) {
    Json j;
    j["resourceId"] = capsule.resource_id;
    j["payloadDigest"] = capsule.payload_digest;
    j["policyDigest"] = capsule.policy_digest;
    j["sealDigest"] = capsule.seal_digest;
    j["createdAt"] = capsule.created_at.to_string();
    auto texts = Json::array();
    for (const auto& p : capsule.policies) texts.push_back(policy::serialize_policy(p));
    j["policies"] = std::move(texts);
    return j.dump(2) + "\n";
}

Capsule from_json(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw CapsuleFormatError(std::string("capsule: ") + e.what());
    }
    auto str = [&](const char* key) -> std::string {
        if (!j.is_object() || !j.contains(key) || !j[key].is_string())
            throw CapsuleFormatError(std::string("capsule: missing string field '") + key + "'");
        return j[key].get<std::string>();
    };
    Capsule c;
    c.resource_id = str("resourceId");
    c.payload_digest = str("payloadDigest");
    c.policy_digest = str("policyDigest");
    c.seal_digest = str("sealDigest");
    try {
        c.created_at = Timestamp::parse(str("createdAt"));
    } catch (const TimestampError& e) {
        throw CapsuleFormatError(std::string("capsule: ") + e.what());
    }
    if (!j.contains("policies") || !j["policies"].is_array())
        throw CapsuleFormatError("capsule: missing policies array");
    for (const auto& t : j["policies"]) {
        if (!t.is_string()) throw CapsuleFormatError("capsule: policy entries must be strings");
        const auto& raw = t.get_ref<const std::string&>();
        try {
            PolicyDoc doc = policy::parse_policy(raw);
            if (policy::serialize_policy(doc) != raw)
                throw CapsuleFormatError("capsule: policy '" + doc.id + "' is not in canonical form");
            c.policies.push_back(std::move(doc));
        } catch (const policy::PolicyParseError& e) {
            throw CapsuleFormatError(std::string("capsule: ") + e.what());
        }
    }
    return c;
}

VerifyResult verify_file_contents(std::string_view capsule_json, std::string_view payload) {
    try {
        Capsule c = from_json(capsule_json);
        if (to_json(c) != capsule_json) return {false, "non-canonical-capsule"};
        return verify(c, payload);
    } catch (const CapsuleFormatError&) {
        return {false, "malformed-capsule"};
    }
}

std::string access_description(const evaluation::AccessRequest& request,
                               const evaluation::Decision& decision) {
    std::string out;
    for (const auto& action : request.requested_actions) {
        if (!out.empty()) out += ",";
        if (!decision.granted_actions.count(action)) out += "denied-";
        out += action;
    }
    return out;
}

provenance::OperationRecord record_access(const Capsule& capsule,
                                          const evaluation::AccessRequest& request,
                                          const evaluation::Decision& decision,
                                          const std::string& post_payload_digest,
                                          store::ProvenanceStore& store) {
    provenance::OperationRecord op;
    op.actor_id = request.actor_id;
    op.context_id = request.context_id;
    op.description = access_description(request, decision);
    op.output = post_payload_digest;
    op.resource_id = capsule.resource_id;
    op.timestamp = request.at;
    store.append_with([&](std::uint64_t seq) {
        op.id = "op-" + std::to_string(seq);
        return provenance::ProvenanceRecord{op};
    });
    return op;
}

generation::SealHistory seal_history(const store::StoreSnapshot& snapshot) {
    generation::SealHistory history;
    const auto records = snapshot.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (auto* op = std::get_if<provenance::OperationRecord>(&records[i])) {
            history[op->resource_id].push_back({i + 1, op->output});
        }
    }
    return history;
}

}  // namespace provgate::capsule
