#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "sdb/cloud/control_plane.hpp"
#include "sdb/http/message.hpp"

namespace sdb::cloud {

/// Name of the response header carrying the full-file SHA-256 on /files responses.
inline constexpr const char* digest_header = "X-Content-SHA256";

/// HTTP front of the control plane: boot routes (/boot, /auth, /files), the admin JSON API
/// under /api (bearer token), and the admin UI bundle under /admin. Transport-independent;
/// the simulator and the live server both call handle().
class CloudService {
public:
    CloudService(ControlPlane& cp, std::string admin_token,
                 std::optional<std::filesystem::path> admin_assets = std::nullopt);

    http::Response handle(const http::Request& req, const std::string& peer_ip);

    ControlPlane& control_plane() { return cp_; }

private:
    http::Response handle_api(const http::Request& req, const std::string& path);
    http::Response handle_files(const http::Request& req, const std::string& path);
    http::Response handle_admin(const std::string& path) const;
    bool authorized(const http::Request& req) const;

    ControlPlane& cp_;
    std::string token_digest_;
    std::optional<std::filesystem::path> assets_;
};

nlohmann::json to_json(const FileInfo& f);
nlohmann::json to_json(const OsDefinition& os);
/// Never includes the credential.
nlohmann::json to_json(const UserRecord& u);
nlohmann::json to_json(const AuthLogEntry& e);
nlohmann::json to_json(const LogPage& p);

/// HTTP status for an error kind.
int http_status(ErrorKind kind);

}  // namespace sdb::cloud
