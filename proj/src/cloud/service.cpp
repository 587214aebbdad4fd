#include "sdb/cloud/service.hpp"

#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <sodium.h>

#include "sdb/cloud/crypto.hpp"
#include "sdb/ipxe/script.hpp"
#include "sdb/url.hpp"

namespace sdb::cloud {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const FileInfo& f) { return {{"filename", f.filename}, {"size", f.size}, {"sha256", f.sha256}}; }

json to_json(const OsDefinition& os) {
    json files = json::array();
    for (const auto& f : os.files) files.push_back(to_json(f));
    return {{"os_id", os.os_id},
            {"name", os.name},
            {"boot_template", os.boot_template},
            {"kernel_params", os.kernel_params},
            {"created_at_ms", os.created_at_ms},
            {"files", files}};
}

json to_json(const UserRecord& u) {
    return {{"username", u.username},
            {"assigned_os", u.assigned_os},
            {"active", u.active},
            {"created_at_ms", u.created_at_ms}};
}

json to_json(const AuthLogEntry& e) {
    return {{"id", e.id},
            {"timestamp_ms", e.timestamp_ms},
            {"username", e.username},
            {"mac", e.mac},
            {"client_ip", e.client_ip},
            {"success", e.success},
            {"failure_reason", e.failure_reason ? json(to_string(*e.failure_reason)) : json(nullptr)}};
}

json to_json(const LogPage& p) {
    json entries = json::array();
    for (const auto& e : p.entries) entries.push_back(to_json(e));
    return {{"entries", entries}, {"total", p.total}, {"page", p.page}, {"page_size", p.page_size}};
}

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation:
        case ErrorKind::BadTemplate:
        case ErrorKind::EmptyFile: return 400;
        case ErrorKind::NoSuchOs:
        case ErrorKind::NoSuchUser:
        case ErrorKind::NoSuchFile: return 404;
        case ErrorKind::DuplicateName:
        case ErrorKind::DuplicateUser:
        case ErrorKind::OsInUse: return 409;
        case ErrorKind::BadRange: return 416;
        case ErrorKind::StoreCorruption: return 500;
    }
    return 500;
}

namespace {

http::Response error(int status, std::string_view kind, const std::string& message) {
    return http::Response::json(status, json{{"error", kind}, {"message", message}}.dump());
}

http::Response ok_json(int status, const json& body) { return http::Response::json(status, body.dump()); }

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        auto j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        parts.push_back(url::percent_decode(path.substr(i, j - i)));
        i = j;
    }
    return parts;
}

json parse_body(const http::Request& req) {
    try {
        auto j = json::parse(req.body.empty() ? "{}" : req.body);
        if (!j.is_object()) throw CloudError(ErrorKind::Validation, "body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw CloudError(ErrorKind::Validation, std::string("invalid JSON: ") + e.what());
    }
}

std::string str_field(const json& j, const char* key, bool required = true) {
    if (!j.contains(key)) {
        if (required) throw CloudError(ErrorKind::Validation, std::string(key) + ": required");
        return {};
    }
    if (!j.at(key).is_string()) throw CloudError(ErrorKind::Validation, std::string(key) + ": must be a string");
    return j.at(key).get<std::string>();
}

std::optional<std::string> opt_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return str_field(j, key);
}

std::size_t size_param(const std::map<std::string, std::string>& q, const char* key, std::size_t dflt) {
    auto it = q.find(key);
    if (it == q.end() || it->second.empty()) return dflt;
    try {
        std::size_t pos = 0;
        auto v = std::stoul(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw CloudError(ErrorKind::Validation, std::string(key) + ": expected a non-negative integer");
    }
}

std::string content_type_for(const fs::path& p) {
    auto ext = p.extension().string();
    if (ext == ".html") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

constexpr const char* builtin_admin_page = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>/dev/SDB admin</title></head>
<body><h1>/dev/SDB admin</h1>
<p>The admin UI bundle is not installed. Point <code>--admin-assets</code> at a built bundle,
or use <code>sdb admin</code> against the <code>/api</code> routes.</p></body></html>
)";

}  // namespace

CloudService::CloudService(ControlPlane& cp, std::string admin_token, std::optional<fs::path> admin_assets)
    : cp_(cp), token_digest_(sha256_hex(admin_token)), assets_(std::move(admin_assets)) {}

bool CloudService::authorized(const http::Request& req) const {
    auto h = req.header("Authorization");
    if (!h || h->rfind("Bearer ", 0) != 0) return false;
    auto presented = sha256_hex(std::string_view(*h).substr(7));
    return presented.size() == token_digest_.size() &&
           sodium_memcmp(presented.data(), token_digest_.data(), presented.size()) == 0;
}

http::Response CloudService::handle(const http::Request& req, const std::string& peer_ip) {
    auto path = req.path();
    try {
        if (path == "/boot") {
            if (req.method != "GET") return error(405, "MethodNotAllowed", "GET only");
            return http::Response::text(200, ipxe::render_script(cp_.boot_entry()), std::string(ipxe::media_type));
        }
        if (path == "/auth") {
            if (req.method != "GET" && req.method != "POST") return error(405, "MethodNotAllowed", "GET or POST");
            auto f = req.fields();
            auto out = cp_.authenticate_and_issue(f["username"], f["password"], f["mac"], peer_ip);
            return http::Response::text(200, ipxe::render_script(out.script), std::string(ipxe::media_type));
        }
        if (path.rfind("/files/", 0) == 0) return handle_files(req, path);
        if (path == "/api" || path.rfind("/api/", 0) == 0) {
            if (!authorized(req)) return error(401, "Unauthorized", "missing or wrong bearer token");
            return handle_api(req, path);
        }
        if (path == "/admin" || path.rfind("/admin/", 0) == 0) {
            if (req.method != "GET") return error(405, "MethodNotAllowed", "GET only");
            return handle_admin(path);
        }
        if (path == "/") {
            http::Response r;
            r.status = 302;
            r.headers["Location"] = "/admin/";
            return r;
        }
        return error(404, "NotFound", "no route for " + path);
    } catch (const CloudError& e) {
        return error(http_status(e.kind()), to_string(e.kind()), e.what());
    } catch (const std::exception& e) {
        return error(500, "Internal", e.what());
    }
}

http::Response CloudService::handle_files(const http::Request& req, const std::string& path) {
    if (req.method != "GET") return error(405, "MethodNotAllowed", "GET only");
    auto parts = split_path(path);
    if (parts.size() != 3) return error(404, "NotFound", "expected /files/<os_id>/<filename>");
    auto body = cp_.serve_file(parts[1], parts[2], req.header("Range"));
    http::Response r;
    r.status = body.range ? 206 : 200;
    r.headers["Content-Type"] = "application/octet-stream";
    r.headers["Accept-Ranges"] = "bytes";
    r.headers[digest_header] = body.sha256;
    if (body.range)
        r.headers["Content-Range"] = "bytes " + std::to_string(body.range->first) + "-" +
                                     std::to_string(body.range->last) + "/" + std::to_string(body.total_size);
    r.body.assign(body.data.begin(), body.data.end());
    return r;
}

http::Response CloudService::handle_api(const http::Request& req, const std::string& path) {
    auto p = split_path(path);  // p[0] == "api"
    const auto& m = req.method;
    auto n = p.size();

    if (n >= 2 && p[1] == "os") {
        if (n == 2 && m == "GET") {
            json list = json::array();
            for (const auto& os : cp_.list_os()) list.push_back(to_json(os));
            return ok_json(200, list);
        }
        if (n == 2 && m == "POST") {
            auto b = parse_body(req);
            auto id = cp_.create_os(str_field(b, "name"), str_field(b, "boot_template"),
                                    str_field(b, "kernel_params", false));
            return ok_json(201, to_json(cp_.get_os(id)));
        }
        if (n == 3 && m == "GET") return ok_json(200, to_json(cp_.get_os(p[2])));
        if (n == 3 && (m == "PATCH" || m == "PUT")) {
            auto b = parse_body(req);
            cp_.update_os(p[2], opt_field(b, "name"), opt_field(b, "boot_template"), opt_field(b, "kernel_params"));
            return ok_json(200, to_json(cp_.get_os(p[2])));
        }
        if (n == 3 && m == "DELETE") {
            cp_.delete_os(p[2]);
            return http::Response{204, {}, {}};
        }
        if (n == 5 && p[3] == "files" && m == "PUT") {
            auto info = cp_.upload_file(
                p[2], p[4], std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()));
            return ok_json(200, to_json(info));
        }
        if (n == 5 && p[3] == "files" && m == "DELETE") {
            cp_.delete_file(p[2], p[4]);
            return http::Response{204, {}, {}};
        }
    }

    if (n >= 2 && p[1] == "users") {
        if (n == 2 && m == "GET") {
            json list = json::array();
            for (const auto& u : cp_.list_users()) list.push_back(to_json(u));
            return ok_json(200, list);
        }
        if (n == 2 && m == "POST") {
            auto b = parse_body(req);
            auto u = cp_.create_user(str_field(b, "username"), str_field(b, "password"), str_field(b, "os_id"));
            return ok_json(201, to_json(u));
        }
        if (n == 3 && m == "GET") return ok_json(200, to_json(cp_.get_user(p[2])));
        if (n == 3 && m == "DELETE") {
            cp_.delete_user(p[2]);
            return http::Response{204, {}, {}};
        }
        if (n == 4 && p[3] == "deactivate" && m == "POST") {
            cp_.deactivate_user(p[2]);
            return ok_json(200, to_json(cp_.get_user(p[2])));
        }
        if (n == 4 && p[3] == "activate" && m == "POST") {
            cp_.activate_user(p[2]);
            return ok_json(200, to_json(cp_.get_user(p[2])));
        }
        if (n == 4 && p[3] == "os" && m == "PUT") {
            cp_.assign_os(p[2], str_field(parse_body(req), "os_id"));
            return ok_json(200, to_json(cp_.get_user(p[2])));
        }
        if (n == 4 && p[3] == "password" && m == "PUT") {
            cp_.set_password(p[2], str_field(parse_body(req), "password"));
            return ok_json(200, to_json(cp_.get_user(p[2])));
        }
    }

    if (n == 2 && p[1] == "logs" && m == "GET") {
        auto q = url::parse_query(req.query());
        LogFilter f;
        if (auto it = q.find("username"); it != q.end() && !it->second.empty()) f.username = it->second;
        if (auto it = q.find("mac"); it != q.end() && !it->second.empty()) f.mac = it->second;
        if (auto it = q.find("success"); it != q.end() && !it->second.empty()) {
            if (it->second == "true" || it->second == "1")
                f.success = true;
            else if (it->second == "false" || it->second == "0")
                f.success = false;
            else
                throw CloudError(ErrorKind::Validation, "success: expected true or false");
        }
        f.page = size_param(q, "page", 1);
        f.page_size = size_param(q, "page_size", 50);
        return ok_json(200, to_json(cp_.list_auth_log(f)));
    }

    return error(404, "NotFound", m + " " + path + " is not an API route");
}

http::Response CloudService::handle_admin(const std::string& path) const {
    std::string rel = path.size() > 7 ? path.substr(7) : std::string{};
    if (rel.empty()) rel = "index.html";
    if (!assets_) {
        if (rel == "index.html") return http::Response::text(200, builtin_admin_page, "text/html; charset=utf-8");
        return error(404, "NotFound", "no admin asset " + rel);
    }
    for (const auto& part : split_path(rel))
        if (part == ".." || part.find('\\') != std::string::npos) return error(404, "NotFound", "bad asset path");
    auto file = *assets_ / rel;
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        // Single-page app: unknown routes fall back to the shell.
        if (file.has_extension()) return error(404, "NotFound", "no admin asset " + rel);
        file = *assets_ / "index.html";
        in.open(file, std::ios::binary);
        if (!in) return error(404, "NotFound", "admin bundle has no index.html");
    }
    std::string body(std::istreambuf_iterator<char>(in), {});
    return http::Response::text(200, std::move(body), content_type_for(file));
}

}  // namespace sdb::cloud
