#include "sdb/live/admin_client.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>

#include "sdb/url.hpp"

namespace sdb::live {

using json = nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

std::string compact(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
    return lower(s);
}

std::string seg(const std::string& s) { return url::percent_encode(s); }

}  // namespace

AdminClient::AdminClient(const std::string& base_url, std::string token)
    : http_(std::make_unique<httplib::Client>(base_url)), token_(std::move(token)) {
    http_->set_connection_timeout(5);
    http_->set_read_timeout(300);
    http_->set_write_timeout(300);
}

AdminClient::~AdminClient() = default;

json AdminClient::call(const std::string& method, const std::string& path, const std::string& body,
                       const std::string& content_type, int expect) {
    httplib::Headers h;
    if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
    httplib::Result r;
    if (method == "GET")
        r = http_->Get(path, h);
    else if (method == "POST")
        r = http_->Post(path, h, body, content_type);
    else if (method == "PUT")
        r = http_->Put(path, h, body, content_type);
    else if (method == "DELETE")
        r = http_->Delete(path, h);
    if (!r) throw AdminError(0, "Unreachable", httplib::to_string(r.error()));
    if (r->status != expect) {
        std::string kind = "HttpError", message = r->body;
        try {
            auto j = json::parse(r->body);
            kind = j.value("error", kind);
            message = j.value("message", message);
        } catch (const json::exception&) {
        }
        throw AdminError(r->status, kind, message);
    }
    if (r->body.empty()) return nullptr;
    return json::parse(r->body);
}

json AdminClient::list_users() { return call("GET", "/api/users", {}, {}, 200); }

json AdminClient::create_user(const std::string& username, const std::string& password, const std::string& os_id) {
    json b = {{"username", username}, {"password", password}, {"os_id", os_id}};
    return call("POST", "/api/users", b.dump(), "application/json", 201);
}

void AdminClient::delete_user(const std::string& username) {
    call("DELETE", "/api/users/" + seg(username), {}, {}, 204);
}

json AdminClient::deactivate_user(const std::string& username) {
    return call("POST", "/api/users/" + seg(username) + "/deactivate", "{}", "application/json", 200);
}

json AdminClient::activate_user(const std::string& username) {
    return call("POST", "/api/users/" + seg(username) + "/activate", "{}", "application/json", 200);
}

json AdminClient::assign_os(const std::string& username, const std::string& os_id) {
    return call("PUT", "/api/users/" + seg(username) + "/os", json{{"os_id", os_id}}.dump(), "application/json", 200);
}

json AdminClient::set_password(const std::string& username, const std::string& password) {
    return call("PUT", "/api/users/" + seg(username) + "/password", json{{"password", password}}.dump(),
                "application/json", 200);
}

json AdminClient::list_os() { return call("GET", "/api/os", {}, {}, 200); }

json AdminClient::get_os(const std::string& os_id) { return call("GET", "/api/os/" + seg(os_id), {}, {}, 200); }

json AdminClient::create_os(const std::string& name, const std::string& boot_template,
                            const std::string& kernel_params) {
    json b = {{"name", name}, {"boot_template", boot_template}, {"kernel_params", kernel_params}};
    return call("POST", "/api/os", b.dump(), "application/json", 201);
}

void AdminClient::delete_os(const std::string& os_id) { call("DELETE", "/api/os/" + seg(os_id), {}, {}, 204); }

json AdminClient::upload_file(const std::string& os_id, const std::string& filename, const Bytes& data) {
    std::string body(data.begin(), data.end());
    return call("PUT", "/api/os/" + seg(os_id) + "/files/" + seg(filename), body, "application/octet-stream", 200);
}

void AdminClient::delete_file(const std::string& os_id, const std::string& filename) {
    call("DELETE", "/api/os/" + seg(os_id) + "/files/" + seg(filename), {}, {}, 204);
}

json AdminClient::logs(const LogQuery& q) {
    std::string path = "/api/logs?page=" + std::to_string(q.page) + "&page_size=" + std::to_string(q.page_size);
    if (q.username) path += "&username=" + url::percent_encode(*q.username);
    if (q.mac) path += "&mac=" + url::percent_encode(*q.mac);
    if (q.success) path += std::string("&success=") + (*q.success ? "true" : "false");
    return call("GET", path, {}, {}, 200);
}

std::string AdminClient::resolve_os(const std::string& text) {
    auto all = list_os();
    std::vector<std::string> prefix;
    for (const auto& os : all) {
        auto id = os.at("os_id").get<std::string>();
        if (id == text || lower(os.at("name").get<std::string>()) == lower(text)) return id;
        if (!text.empty() && compact(id).rfind(compact(text), 0) == 0) prefix.push_back(id);
    }
    if (prefix.size() == 1) return prefix.front();
    throw AdminError(404, "NoSuchOs",
                     prefix.empty() ? "no OS matches '" + text + "'" : "'" + text + "' matches several OSes");
}

}  // namespace sdb::live
