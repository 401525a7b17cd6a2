#pragma once

#include "provgate/generator.hpp"
#include "provgate/policy.hpp"
#include "provgate/store.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace provgate::evaluation {

using generation::ViolationEvent;
using policy::AttrEnv;
using policy::PolicyDoc;
using store::StoreSnapshot;

struct AccessRequest {
    std::string actor_id;
    std::string claimed_role;
    std::string context_id;
    std::string resource_id;
    std::set<std::string> requested_actions;
    std::map<std::string, std::string> system_attributes;  // e.g. "system.machineid"
    Timestamp at;
};

enum class Outcome { Deny, PartialPermit, FullPermit };

std::string_view to_string(Outcome outcome);

// Reason codes besides policy ids.
inline constexpr std::string_view kDefaultDeny = "default-deny";
inline constexpr std::string_view kMisbehaviorHistory = "misbehavior-history";
inline constexpr std::string_view kTamperedCapsule = "tampered-capsule";

struct Reason {
    std::string code;  // policy id or one of the fixed codes above
    std::string explanation;

    bool operator==(const Reason&) const = default;
};

struct Decision {
    Outcome outcome = Outcome::Deny;
    std::set<std::string> granted_actions;
    std::vector<Reason> reasons;

    bool operator==(const Decision&) const = default;
};

// FullPermit iff granted == requested (non-empty), PartialPermit iff granted
// is a non-empty proper subset, Deny iff granted is empty.
Outcome outcome_for(const std::set<std::string>& requested, const std::set<std::string>& granted);

Decision deny(std::string_view code, std::string explanation);

// {"outcome":..,"grantedActions":[..],"reasons":[{"code":..,"explanation":..}]}
std::string decision_to_json(const Decision& decision);

// Attributes visible to policy expressions:
//   Actor.ID, Actor.name, Actor.role   (role as recorded; claimed if unknown)
//   Context.id, Context.state, Context.<parameter key>
//   system.*   context parameters under "system.", overridden by the request
//   Operation.resourceId
AttrEnv build_env(const AccessRequest& request, const StoreSnapshot& snapshot);

bool subject_matches(const PolicyDoc& policy, const AccessRequest& request, const AttrEnv& env);

// nullopt when applicable; otherwise why not. Policies without an issue time
// are treated as issued at `default_issued` (or `now` when absent).
std::optional<std::string> inapplicability(const PolicyDoc& policy, const AccessRequest& request,
                                           const AttrEnv& env, const Timestamp& now,
                                           std::optional<Timestamp> default_issued = std::nullopt);

bool applicable(const PolicyDoc& policy, const AccessRequest& request, const AttrEnv& env,
                const Timestamp& now, std::optional<Timestamp> default_issued = std::nullopt);

enum class Taint { Clean, Tainted };

struct TaintCheck {
    Taint status = Taint::Clean;
    std::string detail;
};

TaintCheck misbehavior_check(const AccessRequest& request, const StoreSnapshot& snapshot,
                             const std::vector<ViolationEvent>& violations);

// Taint check first, then deny-overrides over the applicable policies with
// default deny for uncovered actions.
Decision decide(const AccessRequest& request, const std::vector<PolicyDoc>& policies,
                const StoreSnapshot& snapshot, const std::vector<ViolationEvent>& violations,
                const Timestamp& now, std::optional<Timestamp> default_issued = std::nullopt);

}  // namespace provgate::evaluation
