#pragma once

#include "provgate/evaluator.hpp"
#include "provgate/generator.hpp"
#include "provgate/policy.hpp"
#include "provgate/store.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace provgate::capsule {

using policy::PolicyDoc;

// Resource bytes bound to their attached policies under a digest seal.
// All digests are lowercase hex SHA-256:
//   payload_digest = H(payload)
//   policy_digest  = H(concatenated canonical policy texts)
//   seal_digest    = H(resource_id || payload_digest || policy_digest)
struct Capsule {
    std::string resource_id;
    std::string payload_digest;
    std::string policy_digest;
    std::string seal_digest;
    std::vector<PolicyDoc> policies;
    Timestamp created_at;

    bool operator==(const Capsule&) const = default;
};

std::string policy_digest(const std::vector<PolicyDoc>& policies);
std::string seal_digest(std::string_view resource_id, std::string_view payload_digest,
                        std::string_view policy_digest);

Capsule seal(std::string resource_id, std::string_view payload, std::vector<PolicyDoc> policies,
             const Timestamp& now);

struct VerifyResult {
    bool intact = true;
    std::string reason;  // "payload-digest-mismatch", "policy-digest-mismatch", ...
};

VerifyResult verify(const Capsule& capsule, std::string_view payload);

class CapsuleFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Capsule file: {resourceId, payloadDigest, policyDigest, sealDigest,
// createdAt, policies:[canonical policy texts]}.
std::string to_json(const Capsule& capsule);
// Rejects policy texts that are not in canonical form.
Capsule from_json(std::string_view text);

// verify() over a capsule file's text; an unreadable file is tampered
// ("malformed-capsule"), and so is one not byte-identical to its
// re-serialization ("non-canonical-capsule").
VerifyResult verify_file_contents(std::string_view capsule_json, std::string_view payload);

// Description logged for a request: requested actions in order, each one
// prefixed "denied-" unless granted, joined by ','.
std::string access_description(const evaluation::AccessRequest& request,
                               const evaluation::Decision& decision);

// Appends one operation record ("op-<sequence>") for the request regardless
// of the decision.
provenance::OperationRecord record_access(const Capsule& capsule,
                                          const evaluation::AccessRequest& request,
                                          const evaluation::Decision& decision,
                                          const std::string& post_payload_digest,
                                          store::ProvenanceStore& store);

// Seal points implied by the access log: each operation's output is the
// digest its resource was re-sealed with after that operation.
generation::SealHistory seal_history(const store::StoreSnapshot& snapshot);

}  // namespace provgate::capsule
