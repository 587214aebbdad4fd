#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdb/cloud/crypto.hpp"
#include "sdb/http/message.hpp"
#include "sdb/ipxe/script.hpp"

struct sqlite3;

namespace sdb::cloud {

enum class ErrorKind {
    Validation,
    BadTemplate,
    DuplicateName,
    NoSuchOs,
    EmptyFile,
    DuplicateUser,
    NoSuchUser,
    NoSuchFile,
    BadRange,
    OsInUse,
    StoreCorruption,
};

const char* to_string(ErrorKind kind);

class CloudError : public std::runtime_error {
public:
    CloudError(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct FileInfo {
    std::string filename;
    std::uint64_t size = 0;
    std::string sha256;

    bool operator==(const FileInfo&) const = default;
};

struct OsDefinition {
    std::string os_id;
    std::string name;
    std::string boot_template;
    std::string kernel_params;
    std::int64_t created_at_ms = 0;
    std::vector<FileInfo> files;  // sorted by filename
};

struct UserRecord {
    std::string username;
    Credential credential;
    std::string assigned_os;
    bool active = true;
    std::int64_t created_at_ms = 0;
};

enum class FailureReason { BadPassword, NoSuchUser, Deactivated };

const char* to_string(FailureReason r);
std::optional<FailureReason> failure_reason_from_string(std::string_view s);

struct AuthLogEntry {
    std::int64_t id = 0;
    std::int64_t timestamp_ms = 0;
    std::string username;  // as presented
    std::string mac;       // lower-case colon form when parseable, otherwise as presented
    std::string client_ip;
    bool success = false;
    std::optional<FailureReason> failure_reason;
};

struct LogFilter {
    std::optional<std::string> username;
    std::optional<std::string> mac;
    std::optional<bool> success;
    std::size_t page = 1;  // 1-based
    std::size_t page_size = 50;
};

struct LogPage {
    std::vector<AuthLogEntry> entries;  // newest first
    std::size_t total = 0;              // matching entries across all pages
    std::size_t page = 1;
    std::size_t page_size = 50;
};

struct AuthOutcome {
    bool success = false;
    ipxe::Script script;
    std::optional<FailureReason> reason;  // for the caller's log only; never sent to the client
    std::string os_id;
};

struct FileBody {
    Bytes data;
    std::uint64_t total_size = 0;
    std::string sha256;  // of the full file
    std::optional<http::ByteRange> range;
};

struct ControlPlaneConfig {
    std::filesystem::path store_dir = "sdb-store";
    /// Absolute base the issued scripts point at, e.g. "http://boot.cloud.example".
    std::string base_url = "http://boot.cloud.example";
    PasswordCost password_cost = PasswordCost::interactive();
    /// Milliseconds since the Unix epoch; defaults to the system clock.
    std::function<std::int64_t()> clock;
};

/// The cloud module: OS definitions and artifacts, users, boot-time authentication and the
/// authentication log. Metadata lives in one SQLite file under store_dir, artifacts under
/// store_dir/files/<os_id>/<filename>. Every member is safe to call concurrently; store
/// writes are serialized.
class ControlPlane {
public:
    /// Opens or creates the store and applies schema migrations. Throws CloudError
    /// (StoreCorruption) when the database file is unreadable or fails its integrity check.
    explicit ControlPlane(ControlPlaneConfig cfg);
    ~ControlPlane();
    ControlPlane(const ControlPlane&) = delete;
    ControlPlane& operator=(const ControlPlane&) = delete;

    const ControlPlaneConfig& config() const { return cfg_; }
    std::filesystem::path database_path() const;

    // OS definitions
    std::string create_os(const std::string& name, const std::string& boot_template,
                          const std::string& kernel_params);
    void update_os(const std::string& os_id, std::optional<std::string> name,
                   std::optional<std::string> boot_template, std::optional<std::string> kernel_params);
    OsDefinition get_os(const std::string& os_id) const;
    std::vector<OsDefinition> list_os() const;
    /// OsInUse while any user is assigned to it.
    void delete_os(const std::string& os_id);

    // Artifacts
    FileInfo upload_file(const std::string& os_id, const std::string& filename,
                         std::span<const std::uint8_t> bytes);
    void delete_file(const std::string& os_id, const std::string& filename);
    /// `range_header` is an HTTP Range value ("bytes=a-b"). BadRange when unsatisfiable.
    FileBody serve_file(const std::string& os_id, const std::string& filename,
                        const std::optional<std::string>& range_header = std::nullopt) const;
    /// Artifacts whose bytes on disk no longer match the recorded digest, as "os_id/filename".
    std::vector<std::string> verify_files() const;

    // Users
    UserRecord create_user(const std::string& username, const std::string& password,
                           const std::string& os_id);
    UserRecord get_user(const std::string& username) const;
    std::vector<UserRecord> list_users() const;
    void deactivate_user(const std::string& username);
    void activate_user(const std::string& username);
    void assign_os(const std::string& username, const std::string& os_id);
    void set_password(const std::string& username, const std::string& password);
    void delete_user(const std::string& username);

    // Boot flow
    ipxe::Script boot_entry() const;
    /// Always appends exactly one log entry. Failures return the uniform failure script.
    AuthOutcome authenticate_and_issue(const std::string& username, const std::string& password,
                                       const std::string& mac, const std::string& client_ip);

    LogPage list_auth_log(const LogFilter& filter) const;
    std::size_t auth_log_count() const;

private:
    std::int64_t now() const;
    std::filesystem::path file_path(const std::string& os_id, const std::string& filename) const;
    std::optional<OsDefinition> find_os_locked(const std::string& os_id) const;
    std::optional<UserRecord> find_user_locked(const std::string& username) const;
    void append_log_locked(const AuthLogEntry& e);
    void exec(const char* sql) const;

    ControlPlaneConfig cfg_;
    Credential dummy_;  // verified against on unknown usernames so timing does not leak
    mutable std::mutex mu_;
    sqlite3* db_ = nullptr;
};

/// Lower-case slug of an OS name ("Tiny Core Linux" -> "tiny-core-linux").
std::string slugify(std::string_view name);

}  // namespace sdb::cloud
