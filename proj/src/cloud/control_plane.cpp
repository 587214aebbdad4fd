#include "sdb/cloud/control_plane.hpp"

#include <fcntl.h>
#include <sqlite3.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iterator>

#include "sdb/cloud/templates.hpp"
#include "sdb/net_types.hpp"

namespace sdb::cloud {

namespace fs = std::filesystem;

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation: return "Validation";
        case ErrorKind::BadTemplate: return "BadTemplate";
        case ErrorKind::DuplicateName: return "DuplicateName";
        case ErrorKind::NoSuchOs: return "NoSuchOs";
        case ErrorKind::EmptyFile: return "EmptyFile";
        case ErrorKind::DuplicateUser: return "DuplicateUser";
        case ErrorKind::NoSuchUser: return "NoSuchUser";
        case ErrorKind::NoSuchFile: return "NotFound";
        case ErrorKind::BadRange: return "BadRange";
        case ErrorKind::OsInUse: return "OsInUse";
        case ErrorKind::StoreCorruption: return "StoreCorruption";
    }
    return "?";
}

const char* to_string(FailureReason r) {
    switch (r) {
        case FailureReason::BadPassword: return "BadPassword";
        case FailureReason::NoSuchUser: return "NoSuchUser";
        case FailureReason::Deactivated: return "Deactivated";
    }
    return "?";
}

std::optional<FailureReason> failure_reason_from_string(std::string_view s) {
    if (s == "BadPassword") return FailureReason::BadPassword;
    if (s == "NoSuchUser") return FailureReason::NoSuchUser;
    if (s == "Deactivated") return FailureReason::Deactivated;
    return std::nullopt;
}

std::string slugify(std::string_view name) {
    std::string out;
    bool dash = false;
    for (unsigned char c : name) {
        if (std::isalnum(c)) {
            if (dash && !out.empty()) out += '-';
            out += char(std::tolower(c));
            dash = false;
        } else {
            dash = true;
        }
    }
    return out.empty() ? "os" : out;
}

namespace {

constexpr int schema_version = 1;

const char* const schema_v1 = R"sql(
CREATE TABLE os (
    os_id TEXT PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    boot_template TEXT NOT NULL,
    kernel_params TEXT NOT NULL,
    created_at INTEGER NOT NULL
);
CREATE TABLE os_files (
    os_id TEXT NOT NULL REFERENCES os(os_id) ON DELETE CASCADE,
    filename TEXT NOT NULL,
    size INTEGER NOT NULL,
    sha256 TEXT NOT NULL,
    PRIMARY KEY (os_id, filename)
);
CREATE TABLE users (
    username TEXT PRIMARY KEY,
    algorithm TEXT NOT NULL,
    salt TEXT NOT NULL,
    digest TEXT NOT NULL,
    assigned_os TEXT NOT NULL REFERENCES os(os_id),
    active INTEGER NOT NULL,
    created_at INTEGER NOT NULL
);
CREATE TABLE auth_log (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp INTEGER NOT NULL,
    username TEXT NOT NULL,
    mac TEXT NOT NULL,
    client_ip TEXT NOT NULL,
    success INTEGER NOT NULL,
    failure_reason TEXT
);
CREATE INDEX auth_log_mac ON auth_log(mac);
CREATE INDEX auth_log_username ON auth_log(username);
)sql";

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK)
            throw std::runtime_error(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(st_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        sqlite3_bind_text(st_, i, v.data(), int(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        sqlite3_bind_int64(st_, i, v);
        return *this;
    }
    Stmt& bind_null(int i) {
        sqlite3_bind_null(st_, i);
        return *this;
    }

    /// True while a row is available.
    bool step() {
        int rc = sqlite3_step(st_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        if (rc == SQLITE_CONSTRAINT) throw CloudError(ErrorKind::Validation, sqlite3_errmsg(db_));
        throw std::runtime_error(std::string("sqlite step: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }

    std::string text(int col) const {
        auto p = sqlite3_column_text(st_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), std::size_t(sqlite3_column_bytes(st_, col)))
                 : std::string{};
    }
    std::int64_t i64(int col) const { return sqlite3_column_int64(st_, col); }
    bool is_null(int col) const { return sqlite3_column_type(st_, col) == SQLITE_NULL; }

private:
    sqlite3* db_;
    sqlite3_stmt* st_ = nullptr;
};

/// Scoped BEGIN IMMEDIATE / COMMIT, rolled back unless committed.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec("COMMIT");
        done_ = true;
    }

private:
    void exec(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "?";
            sqlite3_free(err);
            throw std::runtime_error(std::string("sqlite: ") + msg);
        }
    }
    sqlite3* db_;
    bool done_ = false;
};

bool valid_filename(const std::string& name) {
    if (name.empty() || name.size() > 255 || name.front() == '.') return false;
    return std::none_of(name.begin(), name.end(), [](unsigned char c) {
        return c == '/' || c == '\\' || c == '?' || c == '#' || c == '%' || c < 0x21 || c == 0x7f;
    });
}

bool valid_username(const std::string& name) {
    if (name.empty() || name.size() > 64) return false;
    return std::none_of(name.begin(), name.end(), [](unsigned char c) { return c < 0x21 || c == 0x7f; });
}

std::string normalize_mac(const std::string& mac) {
    if (auto m = MacAddress::parse(mac)) return m->to_string();
    return mac.substr(0, 64);
}

void write_durably(const fs::path& path, std::span<const std::uint8_t> bytes) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw std::runtime_error("cannot create " + path.string());
    std::size_t off = 0;
    while (off < bytes.size()) {
        auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
        if (n <= 0) {
            ::close(fd);
            throw std::runtime_error("short write to " + path.string());
        }
        off += std::size_t(n);
    }
    ::fsync(fd);
    ::close(fd);
}

void sync_dir(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CloudError(ErrorKind::NoSuchFile, "artifact missing on disk: " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

std::string digest_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.update(std::span(reinterpret_cast<const std::uint8_t*>(buf), std::size_t(in.gcount())));
    }
    return h.hex_digest();
}

}  // namespace

ControlPlane::ControlPlane(ControlPlaneConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.clock)
        cfg_.clock = [] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
    while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/') cfg_.base_url.pop_back();
    fs::create_directories(cfg_.store_dir / "files");

    auto corrupt = [&](const std::string& why) {
        if (db_) sqlite3_close(db_);
        db_ = nullptr;
        throw CloudError(ErrorKind::StoreCorruption, database_path().string() + ": " + why);
    };
    if (sqlite3_open_v2(database_path().c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                        nullptr) != SQLITE_OK)
        corrupt(db_ ? sqlite3_errmsg(db_) : "cannot open");
    sqlite3_busy_timeout(db_, 5000);
    try {
        Stmt check(db_, "PRAGMA quick_check");
        if (!check.step() || check.text(0) != "ok") corrupt("integrity check failed");
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const CloudError*>(&e)) throw;
        corrupt(e.what());
    }
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec("PRAGMA foreign_keys=ON");

    std::int64_t version = 0;
    {
        Stmt v(db_, "PRAGMA user_version");
        if (v.step()) version = v.i64(0);
    }
    if (version > schema_version) corrupt("schema version " + std::to_string(version) + " is newer than supported");
    if (version < 1) {
        Transaction tx(db_);
        exec(schema_v1);
        exec("PRAGMA user_version = 1");
        tx.commit();
    }

    dummy_ = hash_password(to_hex(random_bytes(16)), cfg_.password_cost);
}

ControlPlane::~ControlPlane() {
    if (db_) sqlite3_close(db_);
}

fs::path ControlPlane::database_path() const { return cfg_.store_dir / "sdb.sqlite3"; }

std::int64_t ControlPlane::now() const { return cfg_.clock(); }

void ControlPlane::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "?";
        sqlite3_free(err);
        throw std::runtime_error("sqlite: " + msg);
    }
}

fs::path ControlPlane::file_path(const std::string& os_id, const std::string& filename) const {
    return cfg_.store_dir / "files" / os_id / filename;
}

// ---- OS definitions ----

std::optional<OsDefinition> ControlPlane::find_os_locked(const std::string& os_id) const {
    Stmt q(db_, "SELECT name, boot_template, kernel_params, created_at FROM os WHERE os_id = ?");
    q.bind(1, os_id);
    if (!q.step()) return std::nullopt;
    OsDefinition os{os_id, q.text(0), q.text(1), q.text(2), q.i64(3), {}};
    Stmt f(db_, "SELECT filename, size, sha256 FROM os_files WHERE os_id = ? ORDER BY filename");
    f.bind(1, os_id);
    while (f.step()) os.files.push_back({f.text(0), std::uint64_t(f.i64(1)), f.text(2)});
    return os;
}

std::string ControlPlane::create_os(const std::string& name, const std::string& boot_template,
                                    const std::string& kernel_params) {
    if (name.empty() || name.size() > 128) throw CloudError(ErrorKind::Validation, "name: 1 to 128 characters");
    std::lock_guard lock(mu_);
    {
        Stmt q(db_, "SELECT 1 FROM os WHERE name = ?");
        q.bind(1, name);
        if (q.step()) throw CloudError(ErrorKind::DuplicateName, "an OS named '" + name + "' exists");
    }
    auto base = slugify(name);
    std::string id = base;
    for (int n = 2;; ++n) {
        Stmt q(db_, "SELECT 1 FROM os WHERE os_id = ?");
        q.bind(1, id);
        if (!q.step()) break;
        id = base + "-" + std::to_string(n);
    }
    try {
        check_template(boot_template, id);
    } catch (const std::invalid_argument& e) {
        throw CloudError(ErrorKind::BadTemplate, e.what());
    }
    Transaction tx(db_);
    Stmt ins(db_, "INSERT INTO os (os_id, name, boot_template, kernel_params, created_at) VALUES (?, ?, ?, ?, ?)");
    ins.bind(1, id).bind(2, name).bind(3, boot_template).bind(4, kernel_params).bind(5, now()).run();
    tx.commit();
    return id;
}

void ControlPlane::update_os(const std::string& os_id, std::optional<std::string> name,
                             std::optional<std::string> boot_template, std::optional<std::string> kernel_params) {
    std::lock_guard lock(mu_);
    auto os = find_os_locked(os_id);
    if (!os) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    if (name && *name != os->name) {
        if (name->empty() || name->size() > 128) throw CloudError(ErrorKind::Validation, "name: 1 to 128 characters");
        Stmt q(db_, "SELECT 1 FROM os WHERE name = ?");
        q.bind(1, *name);
        if (q.step()) throw CloudError(ErrorKind::DuplicateName, "an OS named '" + *name + "' exists");
    }
    if (boot_template) {
        try {
            check_template(*boot_template, os_id);
        } catch (const std::invalid_argument& e) {
            throw CloudError(ErrorKind::BadTemplate, e.what());
        }
    }
    Transaction tx(db_);
    Stmt up(db_, "UPDATE os SET name = ?, boot_template = ?, kernel_params = ? WHERE os_id = ?");
    up.bind(1, name.value_or(os->name))
        .bind(2, boot_template.value_or(os->boot_template))
        .bind(3, kernel_params.value_or(os->kernel_params))
        .bind(4, os_id)
        .run();
    tx.commit();
}

OsDefinition ControlPlane::get_os(const std::string& os_id) const {
    std::lock_guard lock(mu_);
    auto os = find_os_locked(os_id);
    if (!os) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    return *os;
}

std::vector<OsDefinition> ControlPlane::list_os() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    {
        Stmt q(db_, "SELECT os_id FROM os ORDER BY created_at, os_id");
        while (q.step()) ids.push_back(q.text(0));
    }
    std::vector<OsDefinition> out;
    for (const auto& id : ids) out.push_back(*find_os_locked(id));
    return out;
}

void ControlPlane::delete_os(const std::string& os_id) {
    std::lock_guard lock(mu_);
    if (!find_os_locked(os_id)) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    {
        Stmt q(db_, "SELECT COUNT(*) FROM users WHERE assigned_os = ?");
        q.bind(1, os_id);
        q.step();
        if (auto n = q.i64(0); n > 0)
            throw CloudError(ErrorKind::OsInUse, std::to_string(n) + " user(s) are assigned to '" + os_id + "'");
    }
    Transaction tx(db_);
    Stmt del(db_, "DELETE FROM os WHERE os_id = ?");
    del.bind(1, os_id).run();
    tx.commit();
    std::error_code ec;
    fs::remove_all(cfg_.store_dir / "files" / os_id, ec);
}

// ---- Artifacts ----

FileInfo ControlPlane::upload_file(const std::string& os_id, const std::string& filename,
                                   std::span<const std::uint8_t> bytes) {
    if (!valid_filename(filename))
        throw CloudError(ErrorKind::Validation, "filename: no path separators, spaces or leading dot");
    if (bytes.empty()) throw CloudError(ErrorKind::EmptyFile, "refusing zero-length upload of " + filename);
    FileInfo info{filename, bytes.size(), sha256_hex(bytes)};

    std::lock_guard lock(mu_);
    if (!find_os_locked(os_id)) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    auto dir = cfg_.store_dir / "files" / os_id;
    fs::create_directories(dir);
    auto staged = dir / ("." + filename + ".staged-" + to_hex(random_bytes(6)));
    write_durably(staged, bytes);
    fs::rename(staged, dir / filename);
    sync_dir(dir);

    Transaction tx(db_);
    Stmt up(db_,
            "INSERT INTO os_files (os_id, filename, size, sha256) VALUES (?, ?, ?, ?) "
            "ON CONFLICT(os_id, filename) DO UPDATE SET size = excluded.size, sha256 = excluded.sha256");
    up.bind(1, os_id).bind(2, filename).bind(3, std::int64_t(info.size)).bind(4, info.sha256).run();
    tx.commit();
    return info;
}

void ControlPlane::delete_file(const std::string& os_id, const std::string& filename) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt del(db_, "DELETE FROM os_files WHERE os_id = ? AND filename = ?");
    del.bind(1, os_id).bind(2, filename).run();
    if (sqlite3_changes(db_) == 0) throw CloudError(ErrorKind::NoSuchFile, "no file " + os_id + "/" + filename);
    tx.commit();
    std::error_code ec;
    fs::remove(file_path(os_id, filename), ec);
}

FileBody ControlPlane::serve_file(const std::string& os_id, const std::string& filename,
                                  const std::optional<std::string>& range_header) const {
    FileBody body;
    {
        std::lock_guard lock(mu_);
        Stmt q(db_, "SELECT size, sha256 FROM os_files WHERE os_id = ? AND filename = ?");
        q.bind(1, os_id).bind(2, filename);
        if (!q.step()) throw CloudError(ErrorKind::NoSuchFile, "no file " + os_id + "/" + filename);
        body.total_size = std::uint64_t(q.i64(0));
        body.sha256 = q.text(1);
        // Read under the lock so a concurrent re-upload cannot pair new bytes with the old digest.
        body.data = read_file(file_path(os_id, filename));
    }
    if (range_header) {
        auto r = http::parse_range(*range_header, body.data.size());
        if (!r) throw CloudError(ErrorKind::BadRange, "unsatisfiable range '" + *range_header + "'");
        body.range = r;
        body.data = Bytes(body.data.begin() + std::ptrdiff_t(r->first), body.data.begin() + std::ptrdiff_t(r->last + 1));
    }
    return body;
}

std::vector<std::string> ControlPlane::verify_files() const {
    std::vector<std::pair<std::string, FileInfo>> files;
    {
        std::lock_guard lock(mu_);
        Stmt q(db_, "SELECT os_id, filename, size, sha256 FROM os_files ORDER BY os_id, filename");
        while (q.step()) files.push_back({q.text(0), {q.text(1), std::uint64_t(q.i64(2)), q.text(3)}});
    }
    std::vector<std::string> bad;
    for (const auto& [os, f] : files)
        if (digest_file(file_path(os, f.filename)) != f.sha256) bad.push_back(os + "/" + f.filename);
    return bad;
}

// ---- Users ----

std::optional<UserRecord> ControlPlane::find_user_locked(const std::string& username) const {
    Stmt q(db_, "SELECT algorithm, salt, digest, assigned_os, active, created_at FROM users WHERE username = ?");
    q.bind(1, username);
    if (!q.step()) return std::nullopt;
    return UserRecord{username, {q.text(0), q.text(1), q.text(2)}, q.text(3), q.i64(4) != 0, q.i64(5)};
}

UserRecord ControlPlane::create_user(const std::string& username, const std::string& password,
                                     const std::string& os_id) {
    if (!valid_username(username)) throw CloudError(ErrorKind::Validation, "username: 1 to 64 printable characters, no spaces");
    if (password.empty()) throw CloudError(ErrorKind::Validation, "password: must not be empty");
    auto cred = hash_password(password, cfg_.password_cost);
    std::lock_guard lock(mu_);
    if (find_user_locked(username)) throw CloudError(ErrorKind::DuplicateUser, "user '" + username + "' exists");
    if (!find_os_locked(os_id)) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    UserRecord u{username, cred, os_id, true, now()};
    Transaction tx(db_);
    Stmt ins(db_,
             "INSERT INTO users (username, algorithm, salt, digest, assigned_os, active, created_at) "
             "VALUES (?, ?, ?, ?, ?, 1, ?)");
    ins.bind(1, username).bind(2, cred.algorithm).bind(3, cred.salt_hex).bind(4, cred.digest_hex);
    ins.bind(5, os_id).bind(6, u.created_at_ms).run();
    tx.commit();
    return u;
}

UserRecord ControlPlane::get_user(const std::string& username) const {
    std::lock_guard lock(mu_);
    auto u = find_user_locked(username);
    if (!u) throw CloudError(ErrorKind::NoSuchUser, "no user '" + username + "'");
    return *u;
}

std::vector<UserRecord> ControlPlane::list_users() const {
    std::lock_guard lock(mu_);
    std::vector<UserRecord> out;
    Stmt q(db_, "SELECT username, algorithm, salt, digest, assigned_os, active, created_at FROM users ORDER BY username");
    while (q.step())
        out.push_back({q.text(0), {q.text(1), q.text(2), q.text(3)}, q.text(4), q.i64(5) != 0, q.i64(6)});
    return out;
}

namespace {

void require_changed(sqlite3* db, const std::string& username) {
    if (sqlite3_changes(db) == 0) throw CloudError(ErrorKind::NoSuchUser, "no user '" + username + "'");
}

}  // namespace

void ControlPlane::deactivate_user(const std::string& username) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt up(db_, "UPDATE users SET active = 0 WHERE username = ?");
    up.bind(1, username).run();
    require_changed(db_, username);
    tx.commit();
}

void ControlPlane::activate_user(const std::string& username) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt up(db_, "UPDATE users SET active = 1 WHERE username = ?");
    up.bind(1, username).run();
    require_changed(db_, username);
    tx.commit();
}

void ControlPlane::assign_os(const std::string& username, const std::string& os_id) {
    std::lock_guard lock(mu_);
    if (!find_user_locked(username)) throw CloudError(ErrorKind::NoSuchUser, "no user '" + username + "'");
    if (!find_os_locked(os_id)) throw CloudError(ErrorKind::NoSuchOs, "no OS '" + os_id + "'");
    Transaction tx(db_);
    Stmt up(db_, "UPDATE users SET assigned_os = ? WHERE username = ?");
    up.bind(1, os_id).bind(2, username).run();
    tx.commit();
}

void ControlPlane::set_password(const std::string& username, const std::string& password) {
    if (password.empty()) throw CloudError(ErrorKind::Validation, "password: must not be empty");
    auto cred = hash_password(password, cfg_.password_cost);
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt up(db_, "UPDATE users SET algorithm = ?, salt = ?, digest = ? WHERE username = ?");
    up.bind(1, cred.algorithm).bind(2, cred.salt_hex).bind(3, cred.digest_hex).bind(4, username).run();
    require_changed(db_, username);
    tx.commit();
}

void ControlPlane::delete_user(const std::string& username) {
    std::lock_guard lock(mu_);
    Transaction tx(db_);
    Stmt del(db_, "DELETE FROM users WHERE username = ?");
    del.bind(1, username).run();
    require_changed(db_, username);
    tx.commit();
}

// ---- Boot flow ----

ipxe::Script ControlPlane::boot_entry() const { return login_script(cfg_.base_url); }

void ControlPlane::append_log_locked(const AuthLogEntry& e) {
    Stmt ins(db_,
             "INSERT INTO auth_log (timestamp, username, mac, client_ip, success, failure_reason) "
             "VALUES (?, ?, ?, ?, ?, ?)");
    ins.bind(1, e.timestamp_ms).bind(2, e.username).bind(3, e.mac).bind(4, e.client_ip);
    ins.bind(5, std::int64_t(e.success));
    if (e.failure_reason)
        ins.bind(6, std::string(to_string(*e.failure_reason)));
    else
        ins.bind_null(6);
    ins.run();
}

AuthOutcome ControlPlane::authenticate_and_issue(const std::string& username, const std::string& password,
                                                 const std::string& mac, const std::string& client_ip) {
    std::optional<UserRecord> user;
    {
        std::lock_guard lock(mu_);
        user = find_user_locked(username);
    }
    // Exactly one key derivation on every path.
    bool password_ok = verify_password(user ? user->credential : dummy_, password);
    std::optional<FailureReason> reason;
    if (!user)
        reason = FailureReason::NoSuchUser;
    else if (!user->active)
        reason = FailureReason::Deactivated;
    else if (!password_ok)
        reason = FailureReason::BadPassword;

    AuthLogEntry entry{0, now(), username, normalize_mac(mac), client_ip, !reason, reason};
    AuthOutcome out;
    std::lock_guard lock(mu_);
    if (!reason) {
        // Re-read under the lock: the assignment may have changed since verification.
        auto current = find_user_locked(username);
        auto os = current ? find_os_locked(current->assigned_os) : std::nullopt;
        if (!current || !current->active || !os) {
            reason = !current ? FailureReason::NoSuchUser : FailureReason::Deactivated;
            entry.success = false;
            entry.failure_reason = reason;
        } else {
            out.script = instantiate(os->boot_template, cfg_.base_url, os->os_id, os->kernel_params);
            out.os_id = os->os_id;
            auto own = cfg_.base_url + "/files/" + os->os_id + "/";
            auto files_root = cfg_.base_url + "/files/";
            for (const auto& u : ipxe::referenced_urls(out.script))
                if (u.rfind(files_root, 0) == 0 && u.rfind(own, 0) != 0)
                    throw std::logic_error("issued script for " + os->os_id + " references " + u);
        }
    }
    if (reason) out.script = failure_script(cfg_.base_url);
    out.success = !reason;
    out.reason = reason;
    Transaction tx(db_);
    append_log_locked(entry);
    tx.commit();
    return out;
}

LogPage ControlPlane::list_auth_log(const LogFilter& filter) const {
    LogPage page;
    page.page = std::max<std::size_t>(1, filter.page);
    page.page_size = std::clamp<std::size_t>(filter.page_size, 1, 500);

    std::string where = " WHERE 1=1";
    if (filter.username) where += " AND username = ?1";
    if (filter.mac) where += " AND mac = ?2";
    if (filter.success) where += " AND success = ?3";
    auto bind = [&](Stmt& s) {
        if (filter.username) s.bind(1, *filter.username);
        if (filter.mac) s.bind(2, normalize_mac(*filter.mac));
        if (filter.success) s.bind(3, std::int64_t(*filter.success));
    };

    std::lock_guard lock(mu_);
    {
        Stmt c(db_, ("SELECT COUNT(*) FROM auth_log" + where).c_str());
        bind(c);
        c.step();
        page.total = std::size_t(c.i64(0));
    }
    Stmt q(db_, ("SELECT id, timestamp, username, mac, client_ip, success, failure_reason FROM auth_log" + where +
                 " ORDER BY id DESC LIMIT ?4 OFFSET ?5")
                    .c_str());
    bind(q);
    q.bind(4, std::int64_t(page.page_size)).bind(5, std::int64_t((page.page - 1) * page.page_size));
    while (q.step()) {
        AuthLogEntry e{q.i64(0), q.i64(1), q.text(2), q.text(3), q.text(4), q.i64(5) != 0, std::nullopt};
        if (!q.is_null(6)) e.failure_reason = failure_reason_from_string(q.text(6));
        page.entries.push_back(std::move(e));
    }
    return page;
}

std::size_t ControlPlane::auth_log_count() const {
    std::lock_guard lock(mu_);
    Stmt c(db_, "SELECT COUNT(*) FROM auth_log");
    c.step();
    return std::size_t(c.i64(0));
}

}  // namespace sdb::cloud
