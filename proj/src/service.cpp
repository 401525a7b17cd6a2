#include "provgate/service.hpp"

#include "provgate/digest.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace provgate::service {

namespace fs = std::filesystem;
using evaluation::AccessRequest;
using evaluation::Decision;
using provenance::OperationRecord;
using provenance::ProvenanceRecord;

namespace {

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out.flush()) {
            throw ServiceError(ServiceError::Code::Internal, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

// Digest of the resource's bytes as last recorded in the access log.
std::optional<std::string> last_logged_digest(const store::StoreSnapshot& snapshot,
                                              std::string_view resource_id) {
    std::optional<std::string> digest;
    for (const auto& r : snapshot.records()) {
        if (auto* op = std::get_if<OperationRecord>(&r); op && op->resource_id == resource_id)
            digest = op->output;
    }
    return digest;
}

std::vector<policy::PolicyDoc> preference_policies(const store::StoreSnapshot& snapshot) {
    auto prefs = generation::preferences(snapshot);
    std::sort(prefs.begin(), prefs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<policy::PolicyDoc> docs;
    for (const auto& p : prefs) docs.push_back(generation::preference_policy(p));
    return docs;
}

// Creates the directory layout and returns the store file path.
fs::path prepare_data_dir(const fs::path& data_dir) {
    fs::create_directories(data_dir / "capsules");
    return data_dir / "provenance.log";
}

}  // namespace

ServiceConfig load_config(const fs::path& path) {
    auto text = read_file(path);
    if (!text) throw ServiceError(ServiceError::Code::BadRequest, "cannot read config " + path.string());
    ServiceConfig config;
    try {
        auto j = nlohmann::json::parse(*text);
        if (j.contains("dataDir")) config.data_dir = j.at("dataDir").get<std::string>();
        if (j.contains("listenAddress"))
            config.listen_address = j.at("listenAddress").get<std::string>();
        if (j.contains("fixedClock"))
            config.fixed_clock = Timestamp::parse(j.at("fixedClock").get<std::string>());
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            if (g.contains("violationVocabulary"))
                config.generation.violation_vocabulary =
                    g.at("violationVocabulary").get<std::set<std::string>>();
            if (g.contains("defaultTemporalDays"))
                config.generation.default_temporal_days = g.at("defaultTemporalDays").get<int>();
            if (g.contains("permittedScope"))
                config.generation.permitted_scope = g.at("permittedScope").get<std::set<std::string>>();
        }
        generation::validate(config.generation);
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(ServiceError::Code::BadRequest,
                           "config " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ServiceError(ServiceError::Code::BadRequest,
                           "config " + path.string() + ": " + e.what());
    } catch (const TimestampError& e) {
        throw ServiceError(ServiceError::Code::BadRequest,
                           "config " + path.string() + ": " + e.what());
    }
    return config;
}

std::string format_audit(const AuditTrail& trail) {
    std::string out;
    for (const auto& op : trail.operations) {
        out += provenance::canonical_serialize(op);
        out += "\n";
    }
    out += trail.report;
    return out;
}

bool is_valid_resource_id(std::string_view id) {
    if (id.empty() || id == "." || id == ".." || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-' || c == '.';
    });
}

GateService::GateService(ServiceConfig config)
    : config_(std::move(config)),
      store_(prepare_data_dir(config_.data_dir)) {
    generation::validate(config_.generation);
    load_time_ = now();
}

Timestamp GateService::now() const {
    if (config_.fixed_clock) return *config_.fixed_clock;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::system_clock::now().time_since_epoch());
    return Timestamp::from_unix(secs.count());
}

fs::path GateService::capsule_path(const std::string& resource_id) const {
    return config_.data_dir / "capsules" / (resource_id + ".json");
}

fs::path GateService::payload_path(const std::string& resource_id) const {
    return config_.data_dir / "capsules" / (resource_id + ".bin");
}

std::mutex& GateService::resource_mutex(const std::string& resource_id) {
    std::lock_guard lock(locks_mutex_);
    auto& slot = resource_locks_[resource_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

void GateService::append_seed(const ProvenanceRecord& record) {
    try {
        store_.append(record);
    } catch (const store::AppendError& e) {
        auto code = e.reason() == store::AppendError::Reason::DuplicateId
                        ? ServiceError::Code::Conflict
                        : e.reason() == store::AppendError::Reason::Io ? ServiceError::Code::Internal
                                                                       : ServiceError::Code::BadRequest;
        throw ServiceError(code, e.what());
    }
}

void GateService::add_actor(const provenance::ActorRecord& actor) { append_seed(actor); }
void GateService::add_context(const provenance::ContextRecord& context) { append_seed(context); }
void GateService::add_preference(const provenance::PreferenceRecord& preference) {
    append_seed(preference);
}

void GateService::log_attachment(const capsule::Capsule& capsule, std::string_view note) {
    std::lock_guard lock(attachment_mutex_);
    std::ofstream out(config_.data_dir / "attachments.log", std::ios::app | std::ios::binary);
    out << now().to_string() << " " << capsule.resource_id << " policies=" << capsule.policies.size()
        << " policyDigest=" << capsule.policy_digest << " " << note << "\n";
}

CapsuleSummary GateService::upload_resource(const std::string& resource_id,
                                            std::string_view payload,
                                            const std::string& owner_actor_id,
                                            const std::string& context_id) {
    if (!is_valid_resource_id(resource_id)) {
        throw ServiceError(ServiceError::Code::BadRequest, "invalid resource id '" + resource_id + "'");
    }
    std::lock_guard upload_lock(upload_mutex_);
    std::lock_guard lock(resource_mutex(resource_id));
    if (fs::exists(capsule_path(resource_id))) {
        throw ServiceError(ServiceError::Code::Conflict,
                           "resource '" + resource_id + "' already exists");
    }
    const auto snap = store_.snapshot();
    try {
        store::resolve_actor(owner_actor_id, snap);
    } catch (const store::NotFoundError& e) {
        throw ServiceError(ServiceError::Code::NotFound, e.what());
    }
    if (!store::find_context(context_id, snap)) {
        throw ServiceError(ServiceError::Code::NotFound, "unknown context '" + context_id + "'");
    }

    const Timestamp at = now();
    capsule::Capsule sealed = capsule::seal(resource_id, payload, preference_policies(snap), at);
    write_file_atomic(payload_path(resource_id), payload);
    write_file_atomic(capsule_path(resource_id), capsule::to_json(sealed));

    OperationRecord op;
    op.actor_id = owner_actor_id;
    op.context_id = context_id;
    op.description = "upload";
    op.output = sealed.payload_digest;
    op.resource_id = resource_id;
    op.timestamp = at;
    try {
        store_.append_with([&](std::uint64_t seq) {
            op.id = "op-" + std::to_string(seq);
            return ProvenanceRecord{op};
        });
    } catch (...) {
        fs::remove(capsule_path(resource_id));
        fs::remove(payload_path(resource_id));
        throw;
    }
    log_attachment(sealed, "upload");
    return CapsuleSummary{sealed.resource_id, sealed.payload_digest, sealed.policy_digest,
                          sealed.seal_digest, sealed.policies.size(), sealed.created_at};
}

AccessResult GateService::request_access(AccessRequest request,
                                         std::optional<std::string> new_payload) {
    if (!is_valid_resource_id(request.resource_id) ||
        !fs::exists(capsule_path(request.resource_id))) {
        throw ServiceError(ServiceError::Code::NotFound,
                           "unknown resource '" + request.resource_id + "'");
    }
    if (request.requested_actions.empty()) {
        throw ServiceError(ServiceError::Code::BadRequest, "no actions requested");
    }
    {
        const auto snap = store_.snapshot();
        try {
            store::resolve_actor(request.actor_id, snap);
        } catch (const store::NotFoundError& e) {
            throw ServiceError(ServiceError::Code::BadRequest, e.what());
        }
        if (!store::find_context(request.context_id, snap)) {
            throw ServiceError(ServiceError::Code::BadRequest,
                               "unknown context '" + request.context_id + "'");
        }
    }

    std::lock_guard lock(resource_mutex(request.resource_id));
    request.at = now();
    const auto capsule_text = read_file(capsule_path(request.resource_id)).value_or("");
    const auto payload = read_file(payload_path(request.resource_id)).value_or("");
    const auto snap = store_.snapshot();
    const std::string unchanged_digest =
        last_logged_digest(snap, request.resource_id).value_or(sha256_hex(payload));

    AccessResult result;
    std::string post_digest = unchanged_digest;
    std::optional<capsule::Capsule> sealed;
    const auto integrity = capsule::verify_file_contents(capsule_text, payload);
    if (!integrity.intact) {
        result.decision = evaluation::deny(evaluation::kTamperedCapsule, integrity.reason);
    } else {
        try {
            sealed = capsule::from_json(capsule_text);
            const auto violations = generation::detect_violations(
                snap, capsule::seal_history(snap), config_.generation);
            result.decision = evaluation::decide(request, sealed->policies, snap, violations,
                                                 request.at, load_time_);
        } catch (const std::exception& e) {
            result.decision =
                evaluation::deny(evaluation::kDefaultDeny, std::string("internal error: ") + e.what());
        }
    }

    std::string current = payload;
    if (sealed && result.decision.granted_actions.count("write") && new_payload) {
        capsule::Capsule resealed = capsule::seal(sealed->resource_id, *new_payload,
                                                  sealed->policies, request.at);
        write_file_atomic(payload_path(request.resource_id), *new_payload);
        write_file_atomic(capsule_path(request.resource_id), capsule::to_json(resealed));
        post_digest = resealed.payload_digest;
        current = *new_payload;
    }
    if (result.decision.granted_actions.count("read")) result.payload = current;

    capsule::Capsule for_log;
    for_log.resource_id = request.resource_id;
    result.logged = capsule::record_access(for_log, request, result.decision, post_digest, store_);
    return result;
}

std::vector<std::string> GateService::resources() const {
    std::vector<std::string> out;
    const fs::path dir = config_.data_dir / "capsules";
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t GateService::regenerate_policies(const std::optional<std::string>& resource_id) {
    std::vector<std::string> targets;
    if (resource_id) {
        if (!is_valid_resource_id(*resource_id) || !fs::exists(capsule_path(*resource_id))) {
            throw ServiceError(ServiceError::Code::NotFound,
                               "unknown resource '" + *resource_id + "'");
        }
        targets.push_back(*resource_id);
    } else {
        targets = resources();
    }

    const auto snap = store_.snapshot();
    const Timestamp at = now();
    generation::GeneratedPolicies generated;
    try {
        const auto violations =
            generation::detect_violations(snap, capsule::seal_history(snap), config_.generation);
        const auto records = generation::build_policy_records(snap, violations);
        generated = generation::generate_policy_sets(records, violations, config_.generation, at,
                                                     generation::preferences(snap));
    } catch (const generation::GenerationError& e) {
        throw ServiceError(ServiceError::Code::Internal, e.what());
    }

    std::size_t attached = 0;
    for (const auto& id : targets) {
        std::lock_guard lock(resource_mutex(id));
        const auto capsule_text = read_file(capsule_path(id)).value_or("");
        const auto payload = read_file(payload_path(id)).value_or("");
        // A tampered capsule stays as it is so that access keeps failing closed.
        if (!capsule::verify_file_contents(capsule_text, payload).intact) continue;
        capsule::Capsule resealed = capsule::seal(id, payload, generated.for_resource(id), at);
        write_file_atomic(capsule_path(id), capsule::to_json(resealed));
        log_attachment(resealed, "regenerate");
        attached += resealed.policies.size();
    }
    return attached;
}

AuditTrail GateService::get_audit_trail(const std::string& resource_id) const {
    if (!is_valid_resource_id(resource_id) || !fs::exists(capsule_path(resource_id))) {
        throw ServiceError(ServiceError::Code::NotFound, "unknown resource '" + resource_id + "'");
    }
    const auto snap = store_.snapshot();
    AuditTrail trail;
    store::QueryFilter filter;
    filter.resource_id = resource_id;
    filter.kind = provenance::RecordKind::Operation;
    for (auto& r : store::query(filter, snap)) trail.operations.push_back(std::get<OperationRecord>(r));

    auto violations =
        generation::detect_violations(snap, capsule::seal_history(snap), config_.generation);
    std::erase_if(violations, [&](const auto& v) { return v.resource_id != resource_id; });
    trail.report = generation::render_report(violations, snap);
    return trail;
}

capsule::VerifyResult GateService::verify_resource(const std::string& resource_id) const {
    if (!is_valid_resource_id(resource_id) || !fs::exists(capsule_path(resource_id))) {
        throw ServiceError(ServiceError::Code::NotFound, "unknown resource '" + resource_id + "'");
    }
    return capsule::verify_file_contents(read_file(capsule_path(resource_id)).value_or(""),
                                         read_file(payload_path(resource_id)).value_or(""));
}

}  // namespace provgate::service
