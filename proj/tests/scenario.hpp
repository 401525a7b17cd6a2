#pragma once

// Scripted session: upload, two clean reads, a corrupting write by one
// actor, regeneration, then the follow-up requests.

#include "provgate/service.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

namespace provgate::testing {

inline constexpr const char* kScenarioClock = "2024-05-01T09:00:00Z";

struct ScenarioResult {
    evaluation::Decision a_read_before, b_read_before;
    evaluation::Decision a_corrupt;
    std::size_t attached = 0;
    evaluation::Decision a_repeat;      // identical corrupting request after regeneration
    evaluation::Decision a_other_context;
    evaluation::Decision b_read_after;
    std::optional<std::string> b_payload_after;
    std::size_t requests_issued = 0;    // upload included
    std::string audit;
    service::AuditTrail trail;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline evaluation::AccessRequest scenario_request(const std::string& actor, const std::string& context,
                                                  std::set<std::string> actions) {
    return {actor, "AuthorizedUser", context, "r1", std::move(actions), {}, {}};
}

inline ScenarioResult run_scenario(const std::filesystem::path& dir) {
    service::ServiceConfig config;
    config.data_dir = dir;
    config.fixed_clock = Timestamp::parse(kScenarioClock);
    service::GateService gate(config);

    gate.add_actor({"owner", "Olive", "DataOwner"});
    gate.add_actor({"a", "Alice", "AuthorizedUser"});
    gate.add_actor({"b", "Bob", "AuthorizedUser"});
    gate.add_context({"c1", "on", {{"system.machineid", "192.168.2.35"}}});
    gate.add_context({"c2", "on", {{"system.machineid", "192.168.2.36"}}});
    gate.add_preference({"share", "Actor.ID", "Actor.role == \"AuthorizedUser\"", policy::Effect::Permit,
                         {"10 days"}, Timestamp::parse(kScenarioClock)});

    ScenarioResult r;
    gate.upload_resource("r1", "quarterly figures: 42", "owner", "c1");
    ++r.requests_issued;

    auto access = [&](const std::string& actor, const std::string& context, std::set<std::string> actions,
                      std::optional<std::string> payload = std::nullopt) {
        ++r.requests_issued;
        return gate.request_access(scenario_request(actor, context, std::move(actions)), std::move(payload));
    };

    r.a_read_before = access("a", "c1", {"read"}).decision;
    r.b_read_before = access("b", "c1", {"read"}).decision;
    r.a_corrupt = access("a", "c1", {"write"}, "quarterly figures: 41").decision;

    r.attached = gate.regenerate_policies();

    r.a_repeat = access("a", "c1", {"write"}, "quarterly figures: 41").decision;
    r.a_other_context = access("a", "c2", {"read"}).decision;
    auto b_after = access("b", "c1", {"read"});
    r.b_read_after = b_after.decision;
    r.b_payload_after = b_after.payload;

    r.trail = gate.get_audit_trail("r1");
    r.audit = service::format_audit(r.trail);
    return r;
}

// Store, capsule, attachment and audit bytes of one run, for replay checks.
inline std::string scenario_fingerprint(const std::filesystem::path& dir, const ScenarioResult& r) {
    return slurp(dir / "provenance.log") + "\n--\n" + slurp(dir / "capsules" / "r1.json") + "\n--\n" +
           slurp(dir / "capsules" / "r1.bin") + "\n--\n" + slurp(dir / "attachments.log") + "\n--\n" +
           r.audit;
}

}  // namespace provgate::testing
