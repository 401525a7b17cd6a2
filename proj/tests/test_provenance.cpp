#include "provgate/provenance.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace provgate;
using namespace provgate::provenance;
using provgate::testing::ts;

TEST_CASE("validate_record examples") {
    CHECK(validate_record(ActorRecord{"a1", "Alice", "AuthorizedUser"}).empty());
    CHECK(validate_record(ActorRecord{"a1", "Alice", ""}) == std::vector<std::string>{"empty role"});
    MessageRecord m{"m1", "a1", "n1", "n1", "sync", "http", ts("2024-01-01T00:00:00Z")};
    CHECK(validate_record(m) == std::vector<std::string>{"source equals destination"});
}

TEST_CASE("validate_record reports every breach") {
    OperationRecord op{"", "a1", "", "", "ABC", "r1", ts("2024-01-01T00:00:00Z")};
    auto problems = validate_record(op);
    CHECK(problems.size() == 4);
    ContextRecord c{"c1", "active", {{"system.machineid", "1"}, {"System.Bad", "2"}}};
    CHECK(validate_record(c) ==
          std::vector<std::string>{"parameter key 'System.Bad' is not a dotted lowercase path"});
    PreferenceRecord p{"p1", "Actor.ID", "Actor.role = \"x\"", policy::Effect::Deny, {"ten days"},
                       ts("2024-01-01T00:00:00Z")};
    CHECK(validate_record(p).size() == 2);
}

TEST_CASE("operation line matches the hand-written canonical form") {
    OperationRecord op{"op1", "a1", "c1", "read", testing::kSha256Hello, "r1",
                       ts("2024-01-01T00:00:00Z")};
    const std::string expected =
        R"({"kind":"operation","id":"op1","actorId":"a1","contextId":"c1","description":"read",)"
        R"("output":"2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824",)"
        R"("resourceId":"r1","timestamp":"2024-01-01T00:00:00Z"})";
    CHECK(canonical_serialize(op) == expected);
    CHECK(canonical_serialize(op) == canonical_serialize(op));
}

TEST_CASE("canonical lines for the other kinds") {
    CHECK(canonical_serialize(ActorRecord{"a1", "Alice", "AuthorizedUser"}) ==
          R"({"kind":"actor","id":"a1","name":"Alice","role":"AuthorizedUser"})");
    CHECK(canonical_serialize(ContextRecord{"c1", "on", {{"system.zone", "b"}, {"system.machineid", "a"}}}) ==
          R"({"kind":"context","id":"c1","state":"on","parameter":{"system.machineid":"a","system.zone":"b"}})");
    CHECK(canonical_serialize(PreferenceRecord{"p1", "Actor.ID", "Actor.ID == \"a\"",
                                               policy::Effect::Deny, {"5 days"},
                                               ts("2024-01-01T00:00:00Z")}) ==
          R"({"kind":"preference","id":"p1","target":"Actor.ID","condition":"Actor.ID == \"a\"",)"
          R"("effect":"Deny","obligations":["5 days"],"timestamp":"2024-01-01T00:00:00Z"})");
    CHECK(canonical_serialize(MessageRecord{"m1", "a1", "s", "d", "x", "y", ts("2024-01-01T00:00:00Z")}) ==
          R"({"kind":"message","id":"m1","actorId":"a1","sourceId":"s","destinationId":"d",)"
          R"("description":"x","contentCarrier":"y","timestamp":"2024-01-01T00:00:00Z"})");
}

TEST_CASE("serialize rejects invalid records") {
    CHECK_THROWS_AS(canonical_serialize(ActorRecord{"a1", "Alice", ""}), RecordFormatError);
}

TEST_CASE("parse_record examples") {
    const std::string line = canonical_serialize(ActorRecord{"a1", "Alice", "AuthorizedUser"});
    CHECK(parse_record(line) == ProvenanceRecord{ActorRecord{"a1", "Alice", "AuthorizedUser"}});

    try {
        parse_record("");
        FAIL("empty line parsed");
    } catch (const RecordParseError& e) {
        CHECK(e.kind() == RecordParseError::Kind::Malformed);
    }
    try {
        parse_record(R"({"kind":"acto","id":"a1","name":"Alice","role":"R"})");
        FAIL("unknown kind parsed");
    } catch (const RecordParseError& e) {
        CHECK(e.kind() == RecordParseError::Kind::UnknownKind);
    }
}

TEST_CASE("parse errors report byte offsets") {
    try {
        parse_record(R"({"kind":"actor","id":"a1",})");
        FAIL("parsed");
    } catch (const RecordParseError& e) {
        CHECK(e.kind() == RecordParseError::Kind::Malformed);
        CHECK(e.offset() == 26);
    }
    try {
        parse_record(R"({"kind":"actor","id":"a1","role":"R","name":"Alice"})");
        FAIL("parsed");
    } catch (const RecordParseError& e) {
        CHECK(e.offset() == 26);
    }
    CHECK_THROWS_AS(parse_record(R"({"kind":"actor","id":"a1","name":"A","role":"R","x":"1"})"),
                    RecordParseError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a1","kind":"actor","name":"A","role":"R"})"),
                    RecordParseError);
    CHECK_THROWS_AS(parse_record(R"({"kind":"operation","id":"o","actorId":"a","contextId":"c",)"
                                 R"("description":"d","output":"o","resourceId":"r","timestamp":"2024-13-01T00:00:00Z"})"),
                    RecordParseError);
}

TEST_CASE("round-trip and injectivity over random records") {
    std::mt19937 rng(11);
    std::set<std::string> lines;
    std::vector<ProvenanceRecord> records;
    for (int i = 0; i < 500; ++i) {
        ProvenanceRecord r = testing::random_record(rng);
        REQUIRE(validate_record(r).empty());
        const std::string line = canonical_serialize(r);
        CHECK(line.find('\n') == std::string::npos);
        CHECK(line.rfind("{\"kind\":\"", 0) == 0);
        CHECK(parse_record(line) == r);
        if (std::find(records.begin(), records.end(), r) == records.end()) {
            records.push_back(r);
            CHECK(lines.insert(line).second);
        }
    }
}

TEST_CASE("timestamps round-trip and reject invalid dates") {
    for (const char* text : {"1970-01-01T00:00:00Z", "2000-02-29T23:59:59Z", "2024-12-31T12:00:00Z",
                             "1969-07-20T20:17:40Z"}) {
        CHECK(Timestamp::parse(text).to_string() == text);
    }
    CHECK(Timestamp::parse("1970-01-02T00:00:00Z").unix_seconds() == 86400);
    CHECK_THROWS_AS(Timestamp::parse("2023-02-29T00:00:00Z"), TimestampError);
    CHECK_THROWS_AS(Timestamp::parse("2024-01-01T24:00:00Z"), TimestampError);
    CHECK_THROWS_AS(Timestamp::parse("2024-01-01 00:00:00Z"), TimestampError);
    CHECK_THROWS_AS(Timestamp::parse("2024-01-01T00:00:00.5Z"), TimestampError);
    CHECK(ts("2024-01-01T00:00:00Z") < ts("2024-01-01T00:00:01Z"));
    CHECK(ts("2024-01-01T00:00:00Z").plus_days(10).to_string() == "2024-01-11T00:00:00Z");
}
