#pragma once

#include "provgate/provenance.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <cstdio>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace provgate::store {

using provenance::ActorRecord;
using provenance::ProvenanceRecord;
using provenance::RecordKind;

// Immutable view of the store at one point. Sequence number of records()[i]
// is i + 1.
class StoreSnapshot {
public:
    StoreSnapshot() : records_(std::make_shared<const std::vector<ProvenanceRecord>>()) {}
    explicit StoreSnapshot(std::vector<ProvenanceRecord> records)
        : records_(std::make_shared<const std::vector<ProvenanceRecord>>(std::move(records))),
          size_(records_->size()) {}

    std::span<const ProvenanceRecord> records() const { return {records_->data(), size_}; }
    std::uint64_t high_water_mark() const { return size_; }
    bool empty() const { return size_ == 0; }

    const ProvenanceRecord& at_sequence(std::uint64_t seq) const { return (*records_)[seq - 1]; }

    bool operator==(const StoreSnapshot& other) const;

private:
    friend class ProvenanceStore;
    StoreSnapshot(std::shared_ptr<const std::vector<ProvenanceRecord>> records, std::size_t size)
        : records_(std::move(records)), size_(size) {}

    std::shared_ptr<const std::vector<ProvenanceRecord>> records_;
    std::size_t size_ = 0;
};

struct TimeRange {
    Timestamp from;
    Timestamp to;  // inclusive
};

// Absent fields match everything. resourceId only matches operation records.
struct QueryFilter {
    std::optional<std::string> actor_id;
    std::optional<std::string> context_id;
    std::optional<std::string> resource_id;
    std::optional<TimeRange> time_range;
    std::optional<RecordKind> kind;
};

bool matches(const QueryFilter& filter, const ProvenanceRecord& record);

std::vector<ProvenanceRecord> query(const QueryFilter& filter, const StoreSnapshot& snapshot);

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ActorRecord resolve_actor(std::string_view actor_id, const StoreSnapshot& snapshot);
const provenance::ContextRecord* find_context(std::string_view context_id,
                                              const StoreSnapshot& snapshot);

class AppendError : public std::runtime_error {
public:
    enum class Reason { InvalidRecord, DuplicateId, DanglingReference, Io };

    AppendError(Reason reason, const std::string& message)
        : std::runtime_error(message), reason_(reason) {}
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

class LoadError : public std::runtime_error {
public:
    LoadError(std::size_t line, const std::string& message)
        : std::runtime_error(message), line_(line) {}
    // 1-based line number of the offending line.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Append-only provenance store. One writer at a time (appends take an
// internal lock); snapshots are immutable and never block appends.
// When backed by a file, each record is written and flushed to disk before
// append returns.
class ProvenanceStore {
public:
    // In-memory store.
    ProvenanceStore();
    // Opens (or creates on first append) a line-delimited store file.
    explicit ProvenanceStore(std::filesystem::path path);
    ~ProvenanceStore();

    ProvenanceStore(const ProvenanceStore&) = delete;
    ProvenanceStore& operator=(const ProvenanceStore&) = delete;

    std::uint64_t append(const ProvenanceRecord& record);

    // Builds the record from the sequence number it will receive, atomically
    // with the append.
    std::uint64_t append_with(const std::function<ProvenanceRecord(std::uint64_t)>& build);

    StoreSnapshot snapshot() const;

    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    void check(const ProvenanceRecord& record) const;
    void insert(ProvenanceRecord record, const std::string& line);

    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> path_;
    std::FILE* file_ = nullptr;
    std::shared_ptr<std::vector<ProvenanceRecord>> records_;
    std::set<std::pair<RecordKind, std::string>> ids_;
};

// Reads a store file; a missing file is an empty snapshot.
StoreSnapshot load(const std::filesystem::path& path);

}  // namespace provgate::store
