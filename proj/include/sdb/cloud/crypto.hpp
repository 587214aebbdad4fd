#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "sdb/net_types.hpp"

namespace sdb::cloud {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

/// Incremental form for large artifacts.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    void update(std::span<const std::uint8_t> data);
    std::string hex_digest();

private:
    void* ctx_;
};

Bytes random_bytes(std::size_t n);

/// Argon2id work factors. Interactive is the production default; Minimal exists so property
/// tests can run thousands of authentications.
struct PasswordCost {
    std::uint64_t ops = 0;
    std::size_t mem_bytes = 0;

    static PasswordCost interactive();
    static PasswordCost moderate();
    static PasswordCost minimal();
    static PasswordCost parse(std::string_view name);  // "interactive", "moderate", "minimal"
};

struct Credential {
    /// e.g. "argon2id13$ops=2$mem=67108864"; verification re-derives with these parameters.
    std::string algorithm;
    std::string salt_hex;
    std::string digest_hex;
};

Credential hash_password(std::string_view password, PasswordCost cost);

/// Constant-time comparison of the derived key. False for an unknown algorithm tag.
bool verify_password(const Credential& cred, std::string_view password);

}  // namespace sdb::cloud
