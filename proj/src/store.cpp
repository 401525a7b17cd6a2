#include "provgate/store.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

namespace provgate::store {

using provenance::ContextRecord;
using provenance::MessageRecord;
using provenance::OperationRecord;

bool StoreSnapshot::operator==(const StoreSnapshot& other) const {
    auto a = records();
    auto b = other.records();
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

const Timestamp* timestamp_of(const ProvenanceRecord& record) {
    if (auto* op = std::get_if<OperationRecord>(&record)) return &op->timestamp;
    if (auto* msg = std::get_if<MessageRecord>(&record)) return &msg->timestamp;
    if (auto* pref = std::get_if<provenance::PreferenceRecord>(&record)) return &pref->timestamp;
    return nullptr;
}

// Checks a record against the ids already present. Shared by append and load.
void check_against(const std::set<std::pair<RecordKind, std::string>>& ids,
                   const ProvenanceRecord& record) {
    if (auto problems = provenance::validate_record(record); !problems.empty()) {
        throw AppendError(AppendError::Reason::InvalidRecord,
                          "invalid " + std::string(provenance::to_string(provenance::kind_of(record))) +
                              " record '" + provenance::id_of(record) + "': " + problems.front());
    }
    const RecordKind kind = provenance::kind_of(record);
    if (ids.count({kind, provenance::id_of(record)})) {
        throw AppendError(AppendError::Reason::DuplicateId,
                          "duplicate " + std::string(provenance::to_string(kind)) + " id '" +
                              provenance::id_of(record) + "'");
    }
    auto require = [&](RecordKind k, const std::string& id, std::string_view field) {
        if (!ids.count({k, id})) {
            throw AppendError(AppendError::Reason::DanglingReference,
                              std::string(provenance::to_string(kind)) + " '" +
                                  provenance::id_of(record) + "' references unknown " +
                                  std::string(field) + " '" + id + "'");
        }
    };
    if (auto* op = std::get_if<OperationRecord>(&record)) {
        require(RecordKind::Actor, op->actor_id, "actor");
        require(RecordKind::Context, op->context_id, "context");
    } else if (auto* msg = std::get_if<MessageRecord>(&record)) {
        require(RecordKind::Actor, msg->actor_id, "actor");
    }
}

}  // namespace

bool matches(const QueryFilter& filter, const ProvenanceRecord& record) {
    if (filter.kind && provenance::kind_of(record) != *filter.kind) return false;
    if (filter.actor_id) {
        const std::string* actor = nullptr;
        if (auto* op = std::get_if<OperationRecord>(&record)) actor = &op->actor_id;
        else if (auto* msg = std::get_if<MessageRecord>(&record)) actor = &msg->actor_id;
        else if (auto* a = std::get_if<provenance::ActorRecord>(&record)) actor = &a->id;
        if (!actor || *actor != *filter.actor_id) return false;
    }
    if (filter.context_id) {
        const std::string* context = nullptr;
        if (auto* op = std::get_if<OperationRecord>(&record)) context = &op->context_id;
        else if (auto* c = std::get_if<ContextRecord>(&record)) context = &c->id;
        if (!context || *context != *filter.context_id) return false;
    }
    if (filter.resource_id) {
        auto* op = std::get_if<OperationRecord>(&record);
        if (!op || op->resource_id != *filter.resource_id) return false;
    }
    if (filter.time_range) {
        const Timestamp* ts = timestamp_of(record);
        if (!ts || *ts < filter.time_range->from || filter.time_range->to < *ts) return false;
    }
    return true;
}

std::vector<ProvenanceRecord> query(const QueryFilter& filter, const StoreSnapshot& snapshot) {
    std::vector<ProvenanceRecord> out;
    for (const auto& r : snapshot.records()) {
        if (matches(filter, r)) out.push_back(r);
    }
    return out;
}

ActorRecord resolve_actor(std::string_view actor_id, const StoreSnapshot& snapshot) {
    for (const auto& r : snapshot.records()) {
        if (auto* a = std::get_if<ActorRecord>(&r); a && a->id == actor_id) return *a;
    }
    throw NotFoundError("unknown actor '" + std::string(actor_id) + "'");
}

const ContextRecord* find_context(std::string_view context_id, const StoreSnapshot& snapshot) {
    for (const auto& r : snapshot.records()) {
        if (auto* c = std::get_if<ContextRecord>(&r); c && c->id == context_id) return c;
    }
    return nullptr;
}

ProvenanceStore::ProvenanceStore() : records_(std::make_shared<std::vector<ProvenanceRecord>>()) {}

ProvenanceStore::ProvenanceStore(std::filesystem::path path)
    : path_(std::move(path)), records_(std::make_shared<std::vector<ProvenanceRecord>>()) {
    StoreSnapshot existing = load(*path_);
    for (const auto& r : existing.records()) {
        ids_.emplace(provenance::kind_of(r), provenance::id_of(r));
        records_->push_back(r);
    }
}

ProvenanceStore::~ProvenanceStore() {
    if (file_) std::fclose(file_);
}

void ProvenanceStore::check(const ProvenanceRecord& record) const { check_against(ids_, record); }

void ProvenanceStore::insert(ProvenanceRecord record, const std::string& line) {
    if (path_) {
        if (!file_) {
            file_ = std::fopen(path_->c_str(), "ab");
            if (!file_) {
                throw AppendError(AppendError::Reason::Io,
                                  "cannot open store file " + path_->string());
            }
        }
        const std::string out = line + "\n";
        if (std::fwrite(out.data(), 1, out.size(), file_) != out.size() ||
            std::fflush(file_) != 0 || ::fsync(::fileno(file_)) != 0) {
            throw AppendError(AppendError::Reason::Io, "write to " + path_->string() + " failed");
        }
    }
    // Copy on write when a snapshot still shares the vector.
    if (records_.use_count() > 1) {
        records_ = std::make_shared<std::vector<ProvenanceRecord>>(*records_);
    }
    ids_.emplace(provenance::kind_of(record), provenance::id_of(record));
    records_->push_back(std::move(record));
}

std::uint64_t ProvenanceStore::append(const ProvenanceRecord& record) {
    return append_with([&](std::uint64_t) { return record; });
}

std::uint64_t ProvenanceStore::append_with(
    const std::function<ProvenanceRecord(std::uint64_t)>& build) {
    std::lock_guard lock(mutex_);
    const std::uint64_t seq = records_->size() + 1;
    ProvenanceRecord record = build(seq);
    check(record);
    std::string line;
    try {
        line = provenance::canonical_serialize(record);
    } catch (const provenance::RecordFormatError& e) {
        throw AppendError(AppendError::Reason::InvalidRecord, e.what());
    }
    insert(std::move(record), line);
    return seq;
}

StoreSnapshot ProvenanceStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return StoreSnapshot(records_, records_->size());
}

StoreSnapshot load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!std::filesystem::exists(path)) return StoreSnapshot();
        throw LoadError(0, "cannot read store file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    std::vector<ProvenanceRecord> records;
    std::set<std::pair<RecordKind, std::string>> ids;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < content.size()) {
        ++line_no;
        const std::size_t nl = content.find('\n', start);
        const std::string_view line(content.data() + start,
                                    (nl == std::string::npos ? content.size() : nl) - start);
        auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
        if (nl == std::string::npos) {
            throw LoadError(line_no, where() + "truncated final line (no newline)");
        }
        try {
            ProvenanceRecord record = provenance::parse_record(line);
            check_against(ids, record);
            if (provenance::canonical_serialize(record) != line) {
                throw LoadError(line_no, where() + "line is not in canonical form");
            }
            ids.emplace(provenance::kind_of(record), provenance::id_of(record));
            records.push_back(std::move(record));
        } catch (const provenance::RecordParseError& e) {
            throw LoadError(line_no, where() + e.what());
        } catch (const AppendError& e) {
            throw LoadError(line_no, where() + e.what());
        }
        start = nl + 1;
    }
    return StoreSnapshot(std::move(records));
}

}  // namespace provgate::store
