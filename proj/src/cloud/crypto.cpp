#include "sdb/cloud/crypto.hpp"

#include <charconv>
#include <stdexcept>

#include <openssl/evp.h>
#include <sodium.h>

namespace sdb::cloud {

namespace {

constexpr std::size_t key_bytes = 32;
constexpr std::string_view tag_prefix = "argon2id13";

void ensure_sodium() {
    static const bool ok = sodium_init() >= 0;
    if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

bool parse_tag(std::string_view tag, PasswordCost& cost) {
    // argon2id13$ops=<n>$mem=<n>
    auto take = [&](std::string_view key, auto& out) {
        if (tag.substr(0, key.size()) != key) return false;
        tag.remove_prefix(key.size());
        auto end = tag.find('$');
        auto num = tag.substr(0, end);
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), out);
        if (ec != std::errc{} || p != num.data() + num.size()) return false;
        tag.remove_prefix(end == std::string_view::npos ? tag.size() : end + 1);
        return true;
    };
    if (tag.substr(0, tag_prefix.size() + 1) != std::string(tag_prefix) + "$") return false;
    tag.remove_prefix(tag_prefix.size() + 1);
    return take("ops=", cost.ops) && take("mem=", cost.mem_bytes) && tag.empty();
}

Bytes derive(std::string_view password, const Bytes& salt, PasswordCost cost) {
    ensure_sodium();
    Bytes key(key_bytes);
    if (salt.size() != crypto_pwhash_SALTBYTES) throw std::runtime_error("bad salt length");
    if (crypto_pwhash(key.data(), key.size(), password.data(), password.size(), salt.data(), cost.ops,
                      cost.mem_bytes, crypto_pwhash_ALG_ARGON2ID13) != 0)
        throw std::runtime_error("argon2id derivation failed (out of memory)");
    return key;
}

}  // namespace

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(std::span<const std::uint8_t> data) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size());
}

std::string Sha256::hex_digest() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out, &len);
    return to_hex(Bytes(out, out + len));
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    Sha256 h;
    h.update(data);
    return h.hex_digest();
}

std::string sha256_hex(std::string_view data) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Bytes random_bytes(std::size_t n) {
    ensure_sodium();
    Bytes b(n);
    randombytes_buf(b.data(), b.size());
    return b;
}

PasswordCost PasswordCost::interactive() {
    return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}
PasswordCost PasswordCost::moderate() {
    return {crypto_pwhash_OPSLIMIT_MODERATE, crypto_pwhash_MEMLIMIT_MODERATE};
}
PasswordCost PasswordCost::minimal() { return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

PasswordCost PasswordCost::parse(std::string_view name) {
    if (name == "interactive") return interactive();
    if (name == "moderate") return moderate();
    if (name == "minimal") return minimal();
    throw std::invalid_argument("unknown password cost '" + std::string(name) + "'");
}

Credential hash_password(std::string_view password, PasswordCost cost) {
    auto salt = random_bytes(crypto_pwhash_SALTBYTES);
    auto key = derive(password, salt, cost);
    return {std::string(tag_prefix) + "$ops=" + std::to_string(cost.ops) + "$mem=" + std::to_string(cost.mem_bytes),
            to_hex(salt), to_hex(key)};
}

bool verify_password(const Credential& cred, std::string_view password) {
    PasswordCost cost;
    if (!parse_tag(cred.algorithm, cost)) return false;
    auto salt = from_hex(cred.salt_hex);
    auto expected = from_hex(cred.digest_hex);
    if (!salt || !expected || expected->size() != key_bytes) return false;
    auto key = derive(password, *salt, cost);
    return sodium_memcmp(key.data(), expected->data(), key_bytes) == 0;
}

}  // namespace sdb::cloud
