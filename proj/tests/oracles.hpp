#pragma once

// Brute-force reference implementations used only by tests. They share
// record types with the library but none of its algorithms.

#include "provgate/evaluator.hpp"
#include "provgate/generator.hpp"
#include "provgate/store.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace provgate::oracle {

using provenance::ActorRecord;
using provenance::OperationRecord;
using provenance::ProvenanceRecord;

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Nested-loop join of operations against actors, then group-by triple.
inline std::vector<generation::PolicyRecord> join_group_by(
    const std::vector<ProvenanceRecord>& records) {
    std::vector<OperationRecord> ops;
    std::vector<ActorRecord> actors;
    for (const auto& r : records) {
        if (auto* o = std::get_if<OperationRecord>(&r)) ops.push_back(*o);
        if (auto* a = std::get_if<ActorRecord>(&r)) actors.push_back(*a);
    }
    struct Joined {
        OperationRecord op;
        std::string role;
    };
    std::vector<Joined> joined;
    for (const auto& op : ops) {
        for (const auto& a : actors) {
            if (op.actor_id == a.id) joined.push_back({op, a.role});
        }
    }
    std::vector<generation::PolicyRecord> out;
    for (const auto& j : joined) {
        bool seen = false;
        for (const auto& r : out) {
            if (r.actor_id == j.op.actor_id && r.context_id == j.op.context_id &&
                r.resource_id == j.op.resource_id)
                seen = true;
        }
        if (seen) continue;
        generation::PolicyRecord rec;
        rec.actor_id = j.op.actor_id;
        rec.role = j.role;
        rec.context_id = j.op.context_id;
        rec.resource_id = j.op.resource_id;
        rec.timestamp = j.op.timestamp;
        for (const auto& k : joined) {
            if (k.op.actor_id == rec.actor_id && k.op.context_id == rec.context_id &&
                k.op.resource_id == rec.resource_id) {
                if (rec.timestamp < k.op.timestamp) rec.timestamp = k.op.timestamp;
                for (const auto& d : split_commas(k.op.description)) rec.operation_descriptions.insert(d);
                ++rec.operation_count;
            }
        }
        out.push_back(rec);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.actor_id != b.actor_id) return a.actor_id < b.actor_id;
        if (a.context_id != b.context_id) return a.context_id < b.context_id;
        return a.resource_id < b.resource_id;
    });
    return out;
}

inline std::vector<ProvenanceRecord> linear_filter(const std::vector<ProvenanceRecord>& records,
                                                   const store::QueryFilter& f) {
    std::vector<ProvenanceRecord> out;
    for (const auto& r : records) {
        bool keep = true;
        if (f.kind && provenance::kind_of(r) != *f.kind) keep = false;
        std::visit(
            [&](const auto& rec) {
                using T = std::decay_t<decltype(rec)>;
                std::string actor, context, resource;
                bool has_actor = false, has_context = false, has_resource = false, has_ts = false;
                Timestamp t;
                if constexpr (std::is_same_v<T, OperationRecord>) {
                    actor = rec.actor_id; has_actor = true;
                    context = rec.context_id; has_context = true;
                    resource = rec.resource_id; has_resource = true;
                    t = rec.timestamp; has_ts = true;
                } else if constexpr (std::is_same_v<T, provenance::MessageRecord>) {
                    actor = rec.actor_id; has_actor = true;
                    t = rec.timestamp; has_ts = true;
                } else if constexpr (std::is_same_v<T, ActorRecord>) {
                    actor = rec.id; has_actor = true;
                } else if constexpr (std::is_same_v<T, provenance::ContextRecord>) {
                    context = rec.id; has_context = true;
                } else {
                    t = rec.timestamp; has_ts = true;
                }
                if (f.actor_id && !(has_actor && actor == *f.actor_id)) keep = false;
                if (f.context_id && !(has_context && context == *f.context_id)) keep = false;
                if (f.resource_id && !(has_resource && resource == *f.resource_id)) keep = false;
                if (f.time_range && !(has_ts && f.time_range->from <= t && t <= f.time_range->to))
                    keep = false;
            },
            r);
        if (keep) out.push_back(r);
    }
    return out;
}

// Reference decision: for every (policy, action) pair decide coverage,
// then combine. Applicability is supplied by the caller so the oracle can
// derive it from how the case was constructed.
struct OracleCase {
    std::set<std::string> requested;
    bool tainted = false;
    struct Policy {
        bool permit = true;
        bool applicable = true;
        std::set<std::string> scope;  // "*" covers everything
    };
    std::vector<Policy> policies;
};

inline std::set<std::string> brute_force_grant(const OracleCase& c) {
    std::set<std::string> granted;
    if (c.tainted) return granted;
    for (const auto& action : c.requested) {
        bool permit = false, deny = false;
        for (const auto& p : c.policies) {
            if (!p.applicable) continue;
            const bool covers = p.scope.count("*") || p.scope.count(action);
            if (!covers) continue;
            if (p.permit) permit = true;
            else deny = true;
        }
        if (permit && !deny) granted.insert(action);
    }
    return granted;
}

inline evaluation::Outcome brute_force_outcome(const std::set<std::string>& requested,
                                               const std::set<std::string>& granted) {
    if (granted.empty()) return evaluation::Outcome::Deny;
    if (granted.size() == requested.size()) return evaluation::Outcome::FullPermit;
    return evaluation::Outcome::PartialPermit;
}

}  // namespace provgate::oracle
