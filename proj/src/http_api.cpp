#include "provgate/http_api.hpp"

#include "provgate/digest.hpp"

#include <httplib.h>
#include <json.hpp>

namespace provgate::service {

using Json = nlohmann::ordered_json;

namespace {

ApiResponse json_response(int status, const Json& body) { return {status, body.dump()}; }

ApiResponse error_response(int status, const std::string& message) {
    Json j;
    j["error"] = message;
    return json_response(status, j);
}

int status_for(ServiceError::Code code) {
    switch (code) {
        case ServiceError::Code::BadRequest: return 400;
        case ServiceError::Code::NotFound: return 404;
        case ServiceError::Code::Conflict: return 409;
        case ServiceError::Code::Internal: return 500;
    }
    return 500;
}

Json decision_json(const evaluation::Decision& decision) {
    return Json::parse(evaluation::decision_to_json(decision));
}

// "/resources/{id}/<action>" -> id, or empty.
std::string resource_segment(std::string_view path, std::string_view action) {
    constexpr std::string_view prefix = "/resources/";
    if (path.substr(0, prefix.size()) != prefix) return {};
    std::string_view rest = path.substr(prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos || rest.substr(slash + 1) != action) return {};
    return std::string(rest.substr(0, slash));
}

std::string optional_string(const Json& j, const char* key) {
    return j.contains(key) ? j.at(key).get<std::string>() : std::string();
}

}  // namespace

ApiResponse HttpApi::handle(std::string_view method, std::string_view path, std::string_view body) {
    try {
        Json in = body.empty() ? Json::object() : Json::parse(body);
        if (method == "POST" && path == "/actors") {
            service_.add_actor({in.at("id").get<std::string>(), optional_string(in, "name"),
                                in.at("role").get<std::string>()});
            return json_response(201, Json{{"id", in.at("id")}});
        }
        if (method == "POST" && path == "/contexts") {
            provenance::ContextRecord c;
            c.id = in.at("id").get<std::string>();
            c.state = optional_string(in, "state");
            if (in.contains("parameter"))
                c.parameter = in.at("parameter").get<std::map<std::string, std::string>>();
            service_.add_context(c);
            return json_response(201, Json{{"id", c.id}});
        }
        if (method == "POST" && path == "/preferences") {
            provenance::PreferenceRecord p;
            p.id = in.at("id").get<std::string>();
            p.target = in.at("target").get<std::string>();
            p.condition = in.at("condition").get<std::string>();
            auto effect = policy::effect_from_string(in.at("effect").get<std::string>());
            if (!effect) return error_response(400, "unknown effect");
            p.effect = *effect;
            if (in.contains("obligations"))
                p.obligations = in.at("obligations").get<std::vector<std::string>>();
            p.timestamp = service_.now();
            service_.add_preference(p);
            return json_response(201, Json{{"id", p.id}});
        }
        if (method == "POST" && path == "/resources") {
            auto summary = service_.upload_resource(
                in.at("resourceId").get<std::string>(),
                base64_decode(optional_string(in, "payloadBase64")),
                in.at("ownerActorId").get<std::string>(), in.at("contextId").get<std::string>());
            Json out;
            out["resourceId"] = summary.resource_id;
            out["payloadDigest"] = summary.payload_digest;
            out["policyDigest"] = summary.policy_digest;
            out["sealDigest"] = summary.seal_digest;
            out["policyCount"] = summary.policy_count;
            out["createdAt"] = summary.created_at.to_string();
            return json_response(201, out);
        }
        if (method == "POST" && path == "/policies/regenerate") {
            std::optional<std::string> resource;
            if (in.contains("resourceId")) resource = in.at("resourceId").get<std::string>();
            Json out;
            out["attached"] = service_.regenerate_policies(resource);
            return json_response(200, out);
        }
        if (auto id = resource_segment(path, "access"); method == "POST" && !id.empty()) {
            evaluation::AccessRequest req;
            req.resource_id = id;
            req.actor_id = in.at("actorId").get<std::string>();
            req.claimed_role = in.at("claimedRole").get<std::string>();
            req.context_id = in.at("contextId").get<std::string>();
            req.requested_actions = in.at("requestedActions").get<std::set<std::string>>();
            if (in.contains("systemAttributes"))
                req.system_attributes =
                    in.at("systemAttributes").get<std::map<std::string, std::string>>();
            std::optional<std::string> new_payload;
            if (in.contains("payloadBase64"))
                new_payload = base64_decode(in.at("payloadBase64").get<std::string>());
            auto result = service_.request_access(std::move(req), std::move(new_payload));
            Json out = decision_json(result.decision);
            if (result.payload) out["payloadBase64"] = base64_encode(*result.payload);
            return json_response(200, out);
        }
        if (auto id = resource_segment(path, "audit"); method == "GET" && !id.empty()) {
            auto trail = service_.get_audit_trail(id);
            Json ops = Json::array();
            for (const auto& op : trail.operations)
                ops.push_back(Json::parse(provenance::canonical_serialize(op)));
            Json out;
            out["operations"] = std::move(ops);
            out["report"] = trail.report;
            return json_response(200, out);
        }
        if (auto id = resource_segment(path, "verify"); method == "GET" && !id.empty()) {
            auto result = service_.verify_resource(id);
            Json out;
            out["intact"] = result.intact;
            if (!result.intact) out["reason"] = result.reason;
            return json_response(200, out);
        }
        return error_response(404, "no route for " + std::string(method) + " " + std::string(path));
    } catch (const ServiceError& e) {
        return error_response(status_for(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return error_response(400, std::string("bad request body: ") + e.what());
    } catch (const std::invalid_argument& e) {
        return error_response(400, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

void HttpApi::bind(httplib::Server& server) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        ApiResponse out = handle(req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    server.Post(R"(/.*)", route);
    server.Get(R"(/.*)", route);
}

void serve(GateService& service, const std::string& host, int port) {
    httplib::Server server;
    HttpApi api(service);
    api.bind(server);
    if (!server.listen(host, port)) {
        throw ServiceError(ServiceError::Code::Internal,
                           "cannot listen on " + host + ":" + std::to_string(port));
    }
}

}  // namespace provgate::service
