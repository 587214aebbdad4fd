#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "sdb/net_types.hpp"

namespace sdb::gateway {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServicePorts {
    std::uint16_t dhcp = 67;
    std::uint16_t dhcp_client = 68;
    std::uint16_t tftp = 69;
    std::uint16_t dns = 53;
    std::uint16_t http = 80;
};

struct GatewayConfig {
    Ipv4Address static_ip{192, 168, 77, 1};
    Ipv4Subnet subnet{Ipv4Address{192, 168, 77, 0}, 24};
    Ipv4Address pool_first{192, 168, 77, 100};
    Ipv4Address pool_last{192, 168, 77, 200};
    std::uint32_t lease_ttl_s = 3600;
    std::uint32_t dns_ttl_s = 60;

    /// Served over TFTP as `boot_filename`. Empty means "generate from cloud_domain".
    Bytes bootloader_blob;
    std::string boot_filename = "boot.ipxe";
    std::string cloud_domain = "boot.cloud.example";

    std::uint32_t probe_timeout_ms = 2000;
    int probe_retries = 3;
    bool upstream_connected = false;

    ServicePorts ports;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    std::size_t pool_size() const { return pool_last.value() - pool_first.value() + 1; }
    bool in_pool(Ipv4Address a) const {
        return a.value() >= pool_first.value() && a.value() <= pool_last.value();
    }

    /// Fills the blob from cloud_domain when none was supplied.
    void ensure_bootloader();
};

/// Unknown keys are rejected so typos surface. "bootloader_file" loads the blob from disk.
GatewayConfig gateway_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GatewayConfig& cfg);

/// Stand-in for the compiled iPXE image: the embedded chainload script, a NUL terminator,
/// then deterministic filler up to `total_size` bytes.
Bytes make_bootloader_blob(const std::string& cloud_domain, std::size_t total_size = 65536);

/// Recovers the embedded script (text before the first NUL). Empty if none.
std::string embedded_script(const Bytes& blob);

}  // namespace sdb::gateway
