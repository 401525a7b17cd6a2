#include "provgate/capsule.hpp"
#include "provgate/digest.hpp"
#include "provgate/generator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace provgate;
using namespace provgate::capsule;
using provgate::testing::ts;

namespace {

const Timestamp kNow = ts("2024-03-01T00:00:00Z");

policy::PolicyDoc sample() { return policy::parse_policy(testing::kSamplePolicyText); }

}  // namespace

TEST_CASE("digests against independently computed values") {
    auto empty = seal("r0", "", {}, kNow);
    CHECK(empty.payload_digest == testing::kSha256Empty);
    CHECK(empty.policy_digest == testing::kSha256Empty);
    CHECK(empty.seal_digest == testing::kSealR0Empty);

    auto c = seal("r1", "hello", {sample()}, kNow);
    CHECK(c.payload_digest == testing::kSha256Hello);
    CHECK(c.policy_digest == testing::kSha256SampleCanonical);
    CHECK(c.seal_digest == testing::kSealR1HelloSample);
    CHECK(verify(c, "hello").intact);
}

TEST_CASE("seal is deterministic and rejects an empty id") {
    CHECK(seal("r1", "hello", {sample()}, kNow) == seal("r1", "hello", {sample()}, kNow));
    CHECK_THROWS_AS(seal("", "x", {}, kNow), std::invalid_argument);
}

TEST_CASE("verify names the broken digest") {
    auto c = seal("r1", "hello", {sample()}, kNow);
    CHECK(verify(c, "hellO").reason == "payload-digest-mismatch");

    auto flipped = c;
    flipped.policies[0].effect = policy::Effect::Deny;
    CHECK(verify(flipped, "hello").reason == "policy-digest-mismatch");

    auto reseated = c;
    reseated.resource_id = "r2";
    CHECK(verify(reseated, "hello").reason == "seal-digest-mismatch");
}

TEST_CASE("capsule file round trip") {
    auto c = seal("r1", "hello", {sample(), sample()}, kNow);
    const auto text = to_json(c);
    CHECK(from_json(text) == c);
    CHECK(verify_file_contents(text, "hello").intact);
    CHECK(verify_file_contents("not json", "hello").reason == "malformed-capsule");
    CHECK(verify_file_contents(text + " ", "hello").reason == "non-canonical-capsule");
}

TEST_CASE("single-byte mutations are always detected") {
    std::mt19937 rng(17);
    for (int i = 0; i < 300; ++i) {
        std::vector<policy::PolicyDoc> docs;
        for (std::size_t n = 1 + rng() % 3; n > 0; --n) docs.push_back(testing::random_policy(rng));
        std::string payload = testing::random_text(rng, 64) + "x";
        auto c = seal("res-" + std::to_string(i), payload, docs, kNow);
        const auto file = to_json(c);
        REQUIRE(verify_file_contents(file, payload).intact);

        CHECK_FALSE(verify(c, testing::mutate_byte(payload, rng)).intact);
        auto mutated = testing::mutate_policy_entry(file, rng() % docs.size(), rng);
        CHECK_FALSE(verify_file_contents(mutated, payload).intact);
        // createdAt is not covered by the seal, so leave that line alone.
        std::string any = file;
        const auto created = file.find("\"createdAt\"");
        while (true) {
            any = testing::mutate_byte(file, rng);
            std::size_t pos = 0;
            while (any[pos] == file[pos]) ++pos;
            if (pos < created || pos > file.find('\n', created)) break;
        }
        CHECK_FALSE(verify_file_contents(any, payload).intact);
    }
}

TEST_CASE("record_access logs every request") {
    store::ProvenanceStore s;
    s.append(provenance::ActorRecord{"a1", "Alice", "AuthorizedUser"});
    s.append(provenance::ContextRecord{"c1", "on", {}});
    auto c = seal("r1", "hello", {}, kNow);

    evaluation::AccessRequest req{"a1", "AuthorizedUser", "c1", "r1", {"read"}, {}, kNow};
    evaluation::Decision permit{evaluation::Outcome::FullPermit, {"read"}, {}};
    auto op = record_access(c, req, permit, c.payload_digest, s);
    CHECK(op.id == "op-3");
    CHECK(op.description == "read");
    CHECK(op.output == testing::kSha256Hello);

    req.requested_actions = {"read", "write"};
    evaluation::Decision partial{evaluation::Outcome::PartialPermit, {"read"}, {}};
    CHECK(record_access(c, req, partial, c.payload_digest, s).description == "read,denied-write");
    req.requested_actions = {"write"};
    CHECK(record_access(c, req, evaluation::deny(evaluation::kDefaultDeny, "x"), c.payload_digest, s)
              .description == "denied-write");
    CHECK(s.snapshot().high_water_mark() == 5);
}

TEST_CASE("a corrupting write is flagged by the next detection pass") {
    store::ProvenanceStore s;
    s.append(provenance::ActorRecord{"a1", "Alice", "AuthorizedUser"});
    s.append(provenance::ContextRecord{"c1", "on", {}});
    auto c = seal("r1", "hello", {}, kNow);
    evaluation::AccessRequest req{"a1", "AuthorizedUser", "c1", "r1", {"read"}, {}, kNow};
    evaluation::Decision permit{evaluation::Outcome::FullPermit, {"read"}, {}};
    record_access(c, req, permit, c.payload_digest, s);
    req.requested_actions = {"write"};
    permit.granted_actions = {"write"};
    auto bad = record_access(c, req, permit, testing::kSha256HelloMutated, s);

    auto snap = s.snapshot();
    auto v = generation::detect_violations(snap, seal_history(snap), generation::GenConfig{});
    REQUIRE(v.size() == 1);
    CHECK(v[0].operation_id == bad.id);
}
