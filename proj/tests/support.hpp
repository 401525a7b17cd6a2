#pragma once

#include "provgate/evaluator.hpp"
#include "provgate/policy.hpp"
#include "provgate/provenance.hpp"
#include "provgate/store.hpp"

#include <unistd.h>

#include <json.hpp>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace provgate::testing {

// The sample policy exactly as printed, including its odd spacing.
inline constexpr const char* kSamplePolicyText = R"(
<policy ID="1" >
<target>
<subject> Actor.ID </subject>
<record>Operation.description</record>
<restriction>Actor.role=="AuthorizedUser"</restriction>
</target>
<condition> system.machineid == "192.168.2.35" </condition>
<effect> Permit </effect>
<obligation>
<temporal constraint> 10 days </temporal constraint>
</obligation>
</policy>
)";

// Hand-written canonical form of the sample policy.
inline constexpr const char* kSamplePolicyCanonical =
    "<policy ID=\"1\">\n"
    "  <target>\n"
    "    <subject>Actor.ID</subject>\n"
    "    <record>Operation.description</record>\n"
    "    <restriction>Actor.role == \"AuthorizedUser\"</restriction>\n"
    "  </target>\n"
    "  <condition>system.machineid == \"192.168.2.35\"</condition>\n"
    "  <effect>Permit</effect>\n"
    "  <obligation>\n"
    "    <temporal constraint>10 days</temporal constraint>\n"
    "  </obligation>\n"
    "</policy>\n";

// Digests computed with Python's hashlib, not with the code under test.
inline constexpr const char* kSha256Empty =
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
inline constexpr const char* kSha256Hello =
    "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824";
inline constexpr const char* kSha256HelloMutated =  // "hellO"
    "04a6f55face2f46be8c23f627d539827615851e10751b63ec59db6d2c706b770";
inline constexpr const char* kSha256SampleCanonical =
    "16eb0b79dddf070e5d804e0a1614577c9cab826ddddf745fc7175b105e53d9b3";
// H("r1" || H("hello") || H(sample canonical))
inline constexpr const char* kSealR1HelloSample =
    "290a794263c6062a0ad7c67a3f72367df790e3f61697ddc314f4ab7dafae8801";

// H("r0" || H("") || H(""))
inline constexpr const char* kSealR0Empty =
    "0bde382a9cc4234f36c16008cd87c52604a56502cc582aa13e24a4d666613d52";

inline Timestamp ts(const char* text) { return Timestamp::parse(text); }

inline std::string hex_digest_like(std::mt19937& rng) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(64, '0');
    for (auto& c : out) c = hex[rng() % 16];
    return out;
}

inline std::string pick(std::mt19937& rng, const std::vector<std::string>& options) {
    return options[rng() % options.size()];
}

inline std::string random_text(std::mt19937& rng, std::size_t max_len) {
    // Includes characters that need escaping in both JSON and the policy language.
    static const std::string alphabet =
        "abcXYZ019 _-.\"\\<>&=!,/\t\xc3\xa9";
    std::string out;
    const std::size_t len = rng() % (max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
        char c = alphabet[rng() % alphabet.size()];
        if (static_cast<unsigned char>(c) == 0xc3 || static_cast<unsigned char>(c) == 0xa9) {
            out += "\xc3\xa9";  // keep UTF-8 well formed
        } else {
            out.push_back(c);
        }
    }
    return out;
}

inline std::string random_ident(std::mt19937& rng) {
    static const std::vector<std::string> heads = {"Actor", "Context", "system", "Operation", "x_y"};
    static const std::vector<std::string> tails = {"ID", "role", "machineid", "id", "zone-1", "state"};
    return pick(rng, heads) + "." + pick(rng, tails);
}

inline policy::Expr random_expr(std::mt19937& rng) {
    policy::Expr e;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
        e.terms.push_back(policy::Comparison{
            random_ident(rng), rng() % 2 ? policy::CompareOp::Equal : policy::CompareOp::NotEqual,
            random_text(rng, 12)});
    }
    return e;
}

inline policy::PolicyDoc random_policy(std::mt19937& rng) {
    policy::PolicyDoc d;
    d.id = "p" + std::to_string(rng() % 100000);
    if (rng() % 3 == 0) d.id += "\"<x>";
    if (rng() % 2) d.issued_at = Timestamp::from_unix(static_cast<std::int64_t>(rng() % 2000000000));
    d.target.subject = rng() % 2 ? "Actor.ID" : "a" + std::to_string(rng() % 50);
    static const std::vector<std::string> ops = {"read", "write", "alter", "delete-unauthorized",
                                                 "Operation.description", "upload"};
    const int nops = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nops; ++i) d.target.record.entries.insert(pick(rng, ops));
    d.target.restriction = random_expr(rng);
    d.condition = random_expr(rng);
    d.effect = rng() % 2 ? policy::Effect::Permit : policy::Effect::Deny;
    const int nobl = static_cast<int>(rng() % 3);
    for (int i = 0; i < nobl; ++i) d.obligations.push_back({1 + static_cast<int>(rng() % 400)});
    return d;
}

inline provenance::ProvenanceRecord random_record(std::mt19937& rng) {
    using namespace provenance;
    const auto t = Timestamp::from_unix(static_cast<std::int64_t>(rng() % 2000000000));
    auto id = [&] { return "id" + std::to_string(rng() % 1000) + random_text(rng, 3); };
    switch (rng() % 5) {
        case 0:
            return OperationRecord{id(), id(), id(), "read" + random_text(rng, 4),
                                   hex_digest_like(rng), "r" + random_text(rng, 5), t};
        case 1: {
            MessageRecord m{id(), id(), "src" + random_text(rng, 3), "dst" + random_text(rng, 3),
                            random_text(rng, 10), random_text(rng, 10), t};
            return m;
        }
        case 2:
            return ActorRecord{id(), random_text(rng, 8), "Role" + random_text(rng, 5)};
        case 3: {
            ContextRecord c{id(), random_text(rng, 6), {}};
            const int n = static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i)
                c.parameter[pick(rng, {"system.machineid", "system.zone", "net.addr", "os"})] =
                    random_text(rng, 8);
            return c;
        }
        default: {
            PreferenceRecord p{id(), rng() % 2 ? "Actor.ID" : "a7",
                               policy::serialize_expr(random_expr(rng)),
                               rng() % 2 ? policy::Effect::Permit : policy::Effect::Deny,
                               {},
                               t};
            if (rng() % 2) p.obligations.push_back(std::to_string(1 + rng() % 30) + " days");
            return p;
        }
    }
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() /
               ("provgate-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// A referentially valid store of up to `max_records` records: a few
// actors and contexts, then operations, messages and preferences over them.
inline store::StoreSnapshot random_join_store(std::mt19937& rng, std::size_t max_records) {
    using namespace provenance;
    store::ProvenanceStore s;
    const std::size_t target = 1 + rng() % max_records;
    std::vector<std::string> actors, contexts;
    static const std::vector<std::string> roles = {"AuthorizedUser", "Auditor", "Owner"};
    static const std::vector<std::string> descriptions = {"read", "write", "upload", "alter",
                                                          "read,denied-write", "denied-read"};
    const auto base = Timestamp::parse("2024-01-01T00:00:00Z");
    for (std::size_t i = 0; i < target; ++i) {
        const auto t = base.plus_seconds(static_cast<std::int64_t>(rng() % 864000));
        const auto id = "x" + std::to_string(i);
        const unsigned roll = rng() % 10;
        if (actors.empty() || roll == 0) {
            actors.push_back("a" + std::to_string(actors.size()));
            s.append(ActorRecord{actors.back(), "N" + actors.back(), pick(rng, roles)});
        } else if (contexts.empty() || roll == 1) {
            contexts.push_back("c" + std::to_string(contexts.size()));
            s.append(ContextRecord{contexts.back(), "on", {}});
        } else if (roll == 2) {
            s.append(MessageRecord{id, pick(rng, actors), "s", "d", "note", "mail", t});
        } else if (roll == 3) {
            s.append(PreferenceRecord{id, "Actor.ID", "Context.id == \"c0\"",
                                      rng() % 2 ? policy::Effect::Permit : policy::Effect::Deny, {}, t});
        } else {
            s.append(OperationRecord{id, pick(rng, actors), pick(rng, contexts), pick(rng, descriptions),
                                     hex_digest_like(rng), "r" + std::to_string(rng() % 4), t});
        }
    }
    return s.snapshot();
}

// Changes one byte of `text` at a random position to a different value.
inline std::string mutate_byte(std::string text, std::mt19937& rng) {
    const std::size_t pos = rng() % text.size();
    text[pos] = static_cast<char>(static_cast<unsigned char>(text[pos]) ^ (1 + rng() % 255));
    return text;
}

// Capsule file whose policy entry `index` has one byte changed. Invalid
// UTF-8 left by the mutation is replaced, which is still a change.
inline std::string mutate_policy_entry(const std::string& capsule_file, std::size_t index,
                                       std::mt19937& rng) {
    auto j = nlohmann::ordered_json::parse(capsule_file);
    auto& entry = j["policies"][index];
    entry = mutate_byte(entry.get<std::string>(), rng);
    return j.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

}  // namespace provgate::testing
