#pragma once

#include "provgate/policy.hpp"
#include "provgate/store.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace provgate::generation {

using policy::PolicyDoc;
using store::StoreSnapshot;

// Aggregate of all operations one actor performed on one resource under one
// context, joined with the actor's role.
struct PolicyRecord {
    std::string actor_id;
    std::string role;
    std::string context_id;
    std::string resource_id;
    Timestamp timestamp;  // latest contributing operation
    std::set<std::string> operation_descriptions;
    std::size_t operation_count = 0;
    std::size_t violation_count = 0;

    bool operator==(const PolicyRecord&) const = default;
};

enum class ViolationReason { DigestMismatch, FlaggedDescription };

std::string_view to_string(ViolationReason reason);

struct ViolationEvent {
    std::string operation_id;
    std::string actor_id;
    std::string context_id;
    std::string resource_id;
    ViolationReason reason = ViolationReason::FlaggedDescription;
    Timestamp timestamp;

    bool operator==(const ViolationEvent&) const = default;
};

struct GenConfig {
    std::set<std::string> violation_vocabulary{"alter", "corrupt", "delete-unauthorized"};
    int default_temporal_days = 10;
    std::set<std::string> permitted_scope{"read", "write"};
};

// Throws std::invalid_argument when the config breaks its invariants.
void validate(const GenConfig& config);

// A payload digest the resource's capsule was sealed with, effective for
// operations with a larger sequence number.
struct SealPoint {
    std::uint64_t sequence = 0;
    std::string digest;
};

using SealHistory = std::map<std::string, std::vector<SealPoint>, std::less<>>;

// Latest seal strictly before `sequence`; nullptr when there is none.
const SealPoint* expected_seal(const SealHistory& seals, std::string_view resource_id,
                               std::uint64_t sequence);

// Splits a (possibly comma-joined) operation description into its actions.
std::vector<std::string> split_actions(std::string_view description);

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One record per distinct (actor, context, resource) among the operation
// records, sorted by that triple. `violations` only feeds violation_count.
std::vector<PolicyRecord> build_policy_records(const StoreSnapshot& snapshot,
                                               const std::vector<ViolationEvent>& violations = {});

std::vector<ViolationEvent> detect_violations(const StoreSnapshot& snapshot,
                                              const SealHistory& seals, const GenConfig& config);

struct GeneratedPolicies {
    std::map<std::string, std::vector<PolicyDoc>> by_resource;
    std::vector<PolicyDoc> global;  // from owner preferences; attach to every resource

    std::vector<PolicyDoc> all() const;
    std::vector<PolicyDoc> for_resource(const std::string& resource_id) const;
};

std::string generated_policy_id(std::string_view actor_id, std::string_view context_id,
                                std::string_view resource_id);

GeneratedPolicies generate_policy_sets(
    const std::vector<PolicyRecord>& records, const std::vector<ViolationEvent>& violations,
    const GenConfig& config, const Timestamp& now,
    const std::vector<provenance::PreferenceRecord>& preferences = {});

// Flattened form of generate_policy_sets: generated docs in triple order,
// then preference docs.
std::vector<PolicyDoc> generate_policies(
    const std::vector<PolicyRecord>& records, const std::vector<ViolationEvent>& violations,
    const GenConfig& config, const Timestamp& now,
    const std::vector<provenance::PreferenceRecord>& preferences = {});

std::vector<provenance::PreferenceRecord> preferences(const StoreSnapshot& snapshot);

// Converts a preference into a policy document ("pref-<id>").
PolicyDoc preference_policy(const provenance::PreferenceRecord& preference);

// Text report answering, for each violation: who is accountable, in which
// role, at what time, under what context.
std::string render_report(const std::vector<ViolationEvent>& violations,
                          const StoreSnapshot& snapshot);

}  // namespace provgate::generation
