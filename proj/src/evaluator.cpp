#include "provgate/evaluator.hpp"

#include <json.hpp>

namespace provgate::evaluation {

namespace {

std::string join(const std::set<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ",";
        out += item;
    }
    return out;
}

}  // namespace

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Deny: return "Deny";
        case Outcome::PartialPermit: return "PartialPermit";
        case Outcome::FullPermit: return "FullPermit";
    }
    return "Deny";
}

Outcome outcome_for(const std::set<std::string>& requested, const std::set<std::string>& granted) {
    if (granted.empty()) return Outcome::Deny;
    return granted == requested ? Outcome::FullPermit : Outcome::PartialPermit;
}

Decision deny(std::string_view code, std::string explanation) {
    Decision d;
    d.outcome = Outcome::Deny;
    d.reasons.push_back(Reason{std::string(code), std::move(explanation)});
    return d;
}

std::string decision_to_json(const Decision& decision) {
    nlohmann::ordered_json j;
    j["outcome"] = std::string(to_string(decision.outcome));
    j["grantedActions"] = decision.granted_actions;
    auto reasons = nlohmann::ordered_json::array();
    for (const auto& r : decision.reasons) {
        nlohmann::ordered_json entry;
        entry["code"] = r.code;
        entry["explanation"] = r.explanation;
        reasons.push_back(std::move(entry));
    }
    j["reasons"] = std::move(reasons);
    return j.dump();
}

AttrEnv build_env(const AccessRequest& request, const StoreSnapshot& snapshot) {
    AttrEnv env;
    env.set("Actor.ID", request.actor_id);
    try {
        auto actor = store::resolve_actor(request.actor_id, snapshot);
        env.set("Actor.name", actor.name);
        env.set("Actor.role", actor.role);
    } catch (const store::NotFoundError&) {
        env.set("Actor.role", request.claimed_role);
    }
    env.set("Context.id", request.context_id);
    if (const auto* context = store::find_context(request.context_id, snapshot)) {
        env.set("Context.state", context->state);
        for (const auto& [key, value] : context->parameter) {
            env.set("Context." + key, value);
            if (key.rfind("system.", 0) == 0) env.set(key, value);
        }
    }
    for (const auto& [key, value] : request.system_attributes) env.set(key, value);
    env.set("Operation.resourceId", request.resource_id);
    return env;
}

bool subject_matches(const PolicyDoc& policy, const AccessRequest& request, const AttrEnv& env) {
    const std::string& subject = policy.target.subject;
    if (const std::string* bound = env.find(subject)) return *bound == request.actor_id;
    return subject == request.actor_id;
}

std::optional<std::string> inapplicability(const PolicyDoc& policy, const AccessRequest& request,
                                           const AttrEnv& env, const Timestamp& now,
                                           std::optional<Timestamp> default_issued) {
    if (!subject_matches(policy, request, env)) {
        return "subject '" + policy.target.subject + "' does not match actor '" +
               request.actor_id + "'";
    }
    if (auto t = policy::eval_expr(policy.target.restriction, env); t != policy::Truth::True) {
        return "restriction is " + std::string(policy::to_string(t));
    }
    if (auto t = policy::eval_expr(policy.condition, env); t != policy::Truth::True) {
        return "condition is " + std::string(policy::to_string(t));
    }
    const Timestamp issued = policy.issued_at.value_or(default_issued.value_or(now));
    for (const auto& obligation : policy.obligations) {
        const Timestamp expiry = issued.plus_days(obligation.days);
        if (!(now < expiry)) return "temporal constraint expired at " + expiry.to_string();
    }
    return std::nullopt;
}

bool applicable(const PolicyDoc& policy, const AccessRequest& request, const AttrEnv& env,
                const Timestamp& now, std::optional<Timestamp> default_issued) {
    return !inapplicability(policy, request, env, now, default_issued).has_value();
}

TaintCheck misbehavior_check(const AccessRequest& request, const StoreSnapshot& snapshot,
                             const std::vector<ViolationEvent>& violations) {
    provenance::ActorRecord actor;
    try {
        actor = store::resolve_actor(request.actor_id, snapshot);
    } catch (const store::NotFoundError&) {
        return {Taint::Tainted, "actor '" + request.actor_id + "' is not on record"};
    }
    if (actor.role != request.claimed_role) {
        return {Taint::Tainted, "claimed role '" + request.claimed_role +
                                    "' differs from recorded role '" + actor.role + "'"};
    }
    for (const auto& v : violations) {
        if (v.actor_id == request.actor_id && v.context_id == request.context_id) {
            return {Taint::Tainted, "actor '" + actor.id + "' as '" + actor.role +
                                        "' misbehaved under context '" + v.context_id +
                                        "' (operation " + v.operation_id + ", " +
                                        std::string(generation::to_string(v.reason)) + ")"};
        }
    }
    return {Taint::Clean, {}};
}

Decision decide(const AccessRequest& request, const std::vector<PolicyDoc>& policies,
                const StoreSnapshot& snapshot, const std::vector<ViolationEvent>& violations,
                const Timestamp& now, std::optional<Timestamp> default_issued) {
    if (request.requested_actions.empty()) return deny(kDefaultDeny, "no actions requested");

    if (auto taint = misbehavior_check(request, snapshot, violations);
        taint.status == Taint::Tainted) {
        return deny(kMisbehaviorHistory, std::move(taint.detail));
    }

    const AttrEnv env = build_env(request, snapshot);
    Decision decision;
    std::set<std::string> permitted;
    std::set<std::string> denied;
    for (const auto& policy : policies) {
        if (auto why = inapplicability(policy, request, env, now, default_issued)) {
            decision.reasons.push_back(Reason{policy.id, "not applicable: " + *why});
            continue;
        }
        std::set<std::string> covered;
        for (const auto& action : request.requested_actions) {
            if (policy.target.record.covers(action)) covered.insert(action);
        }
        auto& bucket = policy.effect == policy::Effect::Permit ? permitted : denied;
        bucket.insert(covered.begin(), covered.end());
        decision.reasons.push_back(
            Reason{policy.id, std::string(policy::to_string(policy.effect)) + " applies to {" +
                                  join(covered) + "}"});
    }

    std::set<std::string> uncovered;
    for (const auto& action : request.requested_actions) {
        if (denied.count(action)) continue;
        if (permitted.count(action)) {
            decision.granted_actions.insert(action);
        } else {
            uncovered.insert(action);
        }
    }
    if (!uncovered.empty()) {
        decision.reasons.push_back(
            Reason{std::string(kDefaultDeny), "no applicable policy permits {" + join(uncovered) + "}"});
    }
    decision.outcome = outcome_for(request.requested_actions, decision.granted_actions);
    return decision;
}

}  // namespace provgate::evaluation
