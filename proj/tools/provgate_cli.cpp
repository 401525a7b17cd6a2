// Admin CLI over a local data directory.
// Exit codes: 0 permit / intact / success, 3 deny / tampered, 2 error.

#include "provgate/http_api.hpp"
#include "provgate/policy.hpp"
#include "provgate/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace provgate;

namespace {

constexpr int kOk = 0;
constexpr int kError = 2;
constexpr int kDenied = 3;

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& items) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("expected key=value, got '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"provenance-based access gate"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string data_dir, config_path, fixed_clock;
    app.add_option("--data-dir", data_dir, "data directory (store file and capsules)");
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--fixed-clock", fixed_clock, "use this ISO-8601 UTC instant as the clock");

    // actor add / context add / preference add
    auto* actor = app.add_subcommand("actor", "actor records")->require_subcommand(1);
    provenance::ActorRecord actor_rec;
    auto* actor_add = actor->add_subcommand("add", "append an actor record");
    actor_add->add_option("--id", actor_rec.id)->required();
    actor_add->add_option("--name", actor_rec.name);
    actor_add->add_option("--role", actor_rec.role)->required();

    auto* context = app.add_subcommand("context", "context records")->require_subcommand(1);
    provenance::ContextRecord context_rec;
    std::vector<std::string> context_params;
    auto* context_add = context->add_subcommand("add", "append a context record");
    context_add->add_option("--id", context_rec.id)->required();
    context_add->add_option("--state", context_rec.state);
    context_add->add_option("--param", context_params, "key=value, repeatable");

    auto* preference = app.add_subcommand("preference", "owner preferences")->require_subcommand(1);
    provenance::PreferenceRecord pref_rec;
    std::string pref_effect;
    auto* preference_add = preference->add_subcommand("add", "append a preference record");
    preference_add->add_option("--id", pref_rec.id)->required();
    preference_add->add_option("--target", pref_rec.target)->required();
    preference_add->add_option("--condition", pref_rec.condition)->required();
    preference_add->add_option("--effect", pref_effect)->required()->check(CLI::IsMember({"Permit", "Deny"}));
    preference_add->add_option("--obligation", pref_rec.obligations, "e.g. \"10 days\", repeatable");

    std::string resource, owner, actor_id, role, context_id, file, out_file;
    std::vector<std::string> actions, attrs;

    auto* upload = app.add_subcommand("upload", "seal and store a resource");
    upload->add_option("--resource", resource)->required();
    upload->add_option("--owner", owner)->required();
    upload->add_option("--context", context_id)->required();
    upload->add_option("--file", file, "payload file")->required();

    auto* access = app.add_subcommand("access", "request access to a resource");
    access->add_option("--resource", resource)->required();
    access->add_option("--actor", actor_id)->required();
    access->add_option("--role", role, "claimed role")->required();
    access->add_option("--context", context_id)->required();
    access->add_option("--action", actions, "requested action, repeatable")->required();
    access->add_option("--attr", attrs, "system attribute key=value, repeatable");
    access->add_option("--payload-file", file, "new bytes for a write");
    access->add_option("--out", out_file, "where to write the bytes of a granted read");

    auto* regen = app.add_subcommand("regen", "regenerate and attach policies");
    regen->add_option("--resource", resource);

    auto* audit = app.add_subcommand("audit", "print a resource's audit trail");
    audit->add_option("--resource", resource)->required();

    auto* verify = app.add_subcommand("verify", "check a resource's seal");
    verify->add_option("--resource", resource)->required();

    std::string listen;
    auto* serve = app.add_subcommand("serve", "serve the HTTP API");
    serve->add_option("--listen", listen, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kError;
    }

    try {
        service::ServiceConfig config;
        if (!config_path.empty()) config = service::load_config(config_path);
        if (!data_dir.empty()) config.data_dir = data_dir;
        if (!fixed_clock.empty()) config.fixed_clock = Timestamp::parse(fixed_clock);
        if (config.data_dir.empty()) throw std::invalid_argument("no data directory (--data-dir or config)");
        service::GateService gate(config);

        if (actor_add->parsed()) {
            gate.add_actor(actor_rec);
        } else if (context_add->parsed()) {
            context_rec.parameter = key_values(context_params);
            gate.add_context(context_rec);
        } else if (preference_add->parsed()) {
            pref_rec.effect = *policy::effect_from_string(pref_effect);
            pref_rec.timestamp = gate.now();
            gate.add_preference(pref_rec);
        } else if (upload->parsed()) {
            auto s = gate.upload_resource(resource, read_all(file), owner, context_id);
            std::cout << s.resource_id << " sealed " << s.seal_digest << " (" << s.policy_count
                      << " policies)\n";
        } else if (access->parsed()) {
            evaluation::AccessRequest req{actor_id, role, context_id, resource,
                                          {actions.begin(), actions.end()}, key_values(attrs), {}};
            std::optional<std::string> payload;
            if (!file.empty()) payload = read_all(file);
            auto result = gate.request_access(req, payload);
            std::cout << evaluation::decision_to_json(result.decision) << "\n";
            if (result.payload && !out_file.empty()) {
                std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
                out << *result.payload;
            }
            return result.decision.outcome == evaluation::Outcome::Deny ? kDenied : kOk;
        } else if (regen->parsed()) {
            std::optional<std::string> only;
            if (!resource.empty()) only = resource;
            std::cout << gate.regenerate_policies(only) << " policies attached\n";
        } else if (audit->parsed()) {
            std::cout << service::format_audit(gate.get_audit_trail(resource));
        } else if (verify->parsed()) {
            auto v = gate.verify_resource(resource);
            std::cout << (v.intact ? "intact" : "tampered: " + v.reason) << "\n";
            return v.intact ? kOk : kDenied;
        } else if (serve->parsed()) {
            const std::string address = listen.empty() ? config.listen_address : listen;
            const auto colon = address.rfind(':');
            if (colon == std::string::npos) throw std::invalid_argument("listen address needs host:port");
            std::cerr << "listening on " << address << "\n";
            service::serve(gate, address.substr(0, colon), std::stoi(address.substr(colon + 1)));
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
}
