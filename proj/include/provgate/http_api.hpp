#pragma once

#include "provgate/service.hpp"

#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace provgate::service {

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

// JSON request/response surface of GateService:
//   POST /actors                  {"id","name","role"}
//   POST /contexts                {"id","state","parameter":{}}
//   POST /preferences             {"id","target","condition","effect","obligations":[]}
//   POST /resources               {"resourceId","ownerActorId","contextId","payloadBase64"}
//   POST /resources/{id}/access   {"actorId","claimedRole","contextId","requestedActions":[],
//                                  "systemAttributes":{},"payloadBase64"?}
//   POST /policies/regenerate     {"resourceId"?}
//   GET  /resources/{id}/audit
//   GET  /resources/{id}/verify
// Errors answer {"error": message} with 400, 404, 409 or 500.
class HttpApi {
public:
    explicit HttpApi(GateService& service) : service_(service) {}

    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

    void bind(httplib::Server& server);

private:
    GateService& service_;
};

// Blocks serving on host:port until the process stops.
void serve(GateService& service, const std::string& host, int port);

}  // namespace provgate::service
