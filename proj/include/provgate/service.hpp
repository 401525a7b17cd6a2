#pragma once

#include "provgate/capsule.hpp"
#include "provgate/evaluator.hpp"
#include "provgate/generator.hpp"
#include "provgate/store.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace provgate::service {

struct ServiceConfig {
    std::filesystem::path data_dir;
    generation::GenConfig generation;
    std::string listen_address = "127.0.0.1:8080";
    // When set, the clock always reads this instant.
    std::optional<Timestamp> fixed_clock;
};

// Reads a JSON config file:
//   {"dataDir": "...", "listenAddress": "host:port", "fixedClock": "...",
//    "generation": {"violationVocabulary": [...], "defaultTemporalDays": 10,
//                   "permittedScope": [...]}}
// Every key is optional.
ServiceConfig load_config(const std::filesystem::path& path);

class ServiceError : public std::runtime_error {
public:
    enum class Code { BadRequest, NotFound, Conflict, Internal };

    ServiceError(Code code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct CapsuleSummary {
    std::string resource_id;
    std::string payload_digest;
    std::string policy_digest;
    std::string seal_digest;
    std::size_t policy_count = 0;
    Timestamp created_at;
};

struct AccessResult {
    evaluation::Decision decision;
    std::optional<std::string> payload;  // present when "read" was granted
    provenance::OperationRecord logged;
};

struct AuditTrail {
    std::vector<provenance::OperationRecord> operations;
    std::string report;
};

// Canonical operation lines followed by the generation report.
std::string format_audit(const AuditTrail& trail);

bool is_valid_resource_id(std::string_view id);

// Mediates every access to the resources kept under data_dir:
//   provenance.log            append-only provenance store
//   capsules/<id>.json        capsule file
//   capsules/<id>.bin         payload bytes
//   attachments.log           one line per policy attachment
class GateService {
public:
    explicit GateService(ServiceConfig config);

    const ServiceConfig& config() const { return config_; }
    Timestamp now() const;

    void add_actor(const provenance::ActorRecord& actor);
    void add_context(const provenance::ContextRecord& context);
    void add_preference(const provenance::PreferenceRecord& preference);

    // Seals the payload with the owner's preference-derived policies and
    // logs an "upload" operation under `context_id`.
    CapsuleSummary upload_resource(const std::string& resource_id, std::string_view payload,
                                   const std::string& owner_actor_id,
                                   const std::string& context_id);

    // Verify, decide, optionally apply a granted write, log. The request's
    // timestamp is taken from the service clock.
    AccessResult request_access(evaluation::AccessRequest request,
                                std::optional<std::string> new_payload = std::nullopt);

    // Returns the number of policies attached across the affected capsules.
    std::size_t regenerate_policies(const std::optional<std::string>& resource_id = std::nullopt);

    AuditTrail get_audit_trail(const std::string& resource_id) const;

    capsule::VerifyResult verify_resource(const std::string& resource_id) const;

    std::vector<std::string> resources() const;

    store::StoreSnapshot snapshot() const { return store_.snapshot(); }

private:
    std::filesystem::path capsule_path(const std::string& resource_id) const;
    std::filesystem::path payload_path(const std::string& resource_id) const;
    std::mutex& resource_mutex(const std::string& resource_id);
    void append_seed(const provenance::ProvenanceRecord& record);
    void log_attachment(const capsule::Capsule& capsule, std::string_view note);

    ServiceConfig config_;
    mutable store::ProvenanceStore store_;
    Timestamp load_time_;

    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> resource_locks_;
    std::mutex upload_mutex_;
    std::mutex attachment_mutex_;
};

}  // namespace provgate::service
