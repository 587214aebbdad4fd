#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sdb/net_types.hpp"

namespace httplib {
class Client;
}

namespace sdb::live {

/// A failed admin call. `status` is 0 when the server could not be reached; `kind` is the
/// "error" field of the response body (Unauthorized, Validation, DuplicateUser, ...).
class AdminError : public std::runtime_error {
public:
    AdminError(int status, std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), status_(status), kind_(std::move(kind)) {}
    int status() const { return status_; }
    const std::string& kind() const { return kind_; }

private:
    int status_;
    std::string kind_;
};

struct LogQuery {
    std::optional<std::string> username;
    std::optional<std::string> mac;
    std::optional<bool> success;
    std::size_t page = 1;
    std::size_t page_size = 50;
};

/// Typed client for the /api routes.
class AdminClient {
public:
    AdminClient(const std::string& base_url, std::string token);
    ~AdminClient();

    nlohmann::json list_users();
    nlohmann::json create_user(const std::string& username, const std::string& password, const std::string& os_id);
    void delete_user(const std::string& username);
    nlohmann::json deactivate_user(const std::string& username);
    nlohmann::json activate_user(const std::string& username);
    nlohmann::json assign_os(const std::string& username, const std::string& os_id);
    nlohmann::json set_password(const std::string& username, const std::string& password);

    nlohmann::json list_os();
    nlohmann::json get_os(const std::string& os_id);
    nlohmann::json create_os(const std::string& name, const std::string& boot_template,
                             const std::string& kernel_params);
    void delete_os(const std::string& os_id);
    nlohmann::json upload_file(const std::string& os_id, const std::string& filename, const Bytes& data);
    void delete_file(const std::string& os_id, const std::string& filename);

    nlohmann::json logs(const LogQuery& q);

    /// Accepts an os_id, an exact name (case-insensitive) or an unambiguous prefix of the
    /// os_id with hyphens ignored ("tinycore" -> "tiny-core-linux"). Throws AdminError
    /// (NoSuchOs) otherwise.
    std::string resolve_os(const std::string& text);

private:
    nlohmann::json call(const std::string& method, const std::string& path, const std::string& body,
                        const std::string& content_type, int expect);

    std::unique_ptr<httplib::Client> http_;
    std::string token_;
};

}  // namespace sdb::live
