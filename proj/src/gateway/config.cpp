#include "sdb/gateway/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "sdb/ipxe/script.hpp"

namespace sdb::gateway {

using nlohmann::json;

void GatewayConfig::validate() const {
    if (boot_filename.empty()) throw ConfigError("boot_filename: must not be empty");
    if (boot_filename.size() > 127) throw ConfigError("boot_filename: longer than 127 bytes");
    if (cloud_domain.empty()) throw ConfigError("cloud_domain: must not be empty");
    if (!subnet.contains(static_ip)) throw ConfigError("static_ip: outside subnet " + subnet.to_string());
    if (pool_first > pool_last) throw ConfigError("lease_pool: first address after last");
    if (!subnet.contains(pool_first) || !subnet.contains(pool_last))
        throw ConfigError("lease_pool: not inside subnet " + subnet.to_string());
    if (in_pool(static_ip)) throw ConfigError("lease_pool: contains the gateway's own address");
    if (probe_retries < 1) throw ConfigError("probe_retries: must be at least 1");
    if (probe_timeout_ms == 0) throw ConfigError("probe_timeout_ms: must be positive");
    if (lease_ttl_s == 0) throw ConfigError("lease_ttl_s: must be positive");
}

void GatewayConfig::ensure_bootloader() {
    if (bootloader_blob.empty()) bootloader_blob = make_bootloader_blob(cloud_domain);
}

namespace {

Ipv4Address ip_field(const json& j, const char* key) {
    auto a = Ipv4Address::parse(j.at(key).get<std::string>());
    if (!a) throw ConfigError(std::string(key) + ": not an IPv4 address");
    return *a;
}

}  // namespace

GatewayConfig gateway_config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "static_ip",        "subnet",         "lease_pool",    "lease_ttl_s",
        "dns_ttl_s",        "boot_filename",  "cloud_domain",  "probe_timeout_ms",
        "probe_retries",    "upstream_connected", "ports",     "bootloader_file"};
    if (!j.is_object()) throw ConfigError("gateway config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.contains(k)) throw ConfigError(k + ": unknown key");

    GatewayConfig cfg;
    try {
        if (j.contains("static_ip")) cfg.static_ip = ip_field(j, "static_ip");
        if (j.contains("subnet")) {
            auto s = Ipv4Subnet::parse(j.at("subnet").get<std::string>());
            if (!s) throw ConfigError("subnet: expected a.b.c.d/len");
            cfg.subnet = *s;
        }
        if (j.contains("lease_pool")) {
            const auto& p = j.at("lease_pool");
            cfg.pool_first = ip_field(p, "first");
            cfg.pool_last = ip_field(p, "last");
        }
        if (j.contains("lease_ttl_s")) cfg.lease_ttl_s = j.at("lease_ttl_s").get<std::uint32_t>();
        if (j.contains("dns_ttl_s")) cfg.dns_ttl_s = j.at("dns_ttl_s").get<std::uint32_t>();
        if (j.contains("boot_filename")) cfg.boot_filename = j.at("boot_filename").get<std::string>();
        if (j.contains("cloud_domain")) cfg.cloud_domain = j.at("cloud_domain").get<std::string>();
        if (j.contains("probe_timeout_ms"))
            cfg.probe_timeout_ms = j.at("probe_timeout_ms").get<std::uint32_t>();
        if (j.contains("probe_retries")) cfg.probe_retries = j.at("probe_retries").get<int>();
        if (j.contains("upstream_connected"))
            cfg.upstream_connected = j.at("upstream_connected").get<bool>();
        if (j.contains("ports")) {
            const auto& p = j.at("ports");
            cfg.ports.dhcp = p.value("dhcp", cfg.ports.dhcp);
            cfg.ports.dhcp_client = p.value("dhcp_client", cfg.ports.dhcp_client);
            cfg.ports.tftp = p.value("tftp", cfg.ports.tftp);
            cfg.ports.dns = p.value("dns", cfg.ports.dns);
            cfg.ports.http = p.value("http", cfg.ports.http);
        }
        if (j.contains("bootloader_file")) {
            auto path = j.at("bootloader_file").get<std::string>();
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("bootloader_file: cannot read " + path);
            cfg.bootloader_blob.assign(std::istreambuf_iterator<char>(in), {});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("gateway config: ") + e.what());
    }
    cfg.ensure_bootloader();
    cfg.validate();
    return cfg;
}

json to_json(const GatewayConfig& cfg) {
    return json{
        {"static_ip", cfg.static_ip.to_string()},
        {"subnet", cfg.subnet.to_string()},
        {"lease_pool", {{"first", cfg.pool_first.to_string()}, {"last", cfg.pool_last.to_string()}}},
        {"lease_ttl_s", cfg.lease_ttl_s},
        {"dns_ttl_s", cfg.dns_ttl_s},
        {"boot_filename", cfg.boot_filename},
        {"cloud_domain", cfg.cloud_domain},
        {"probe_timeout_ms", cfg.probe_timeout_ms},
        {"probe_retries", cfg.probe_retries},
        {"upstream_connected", cfg.upstream_connected},
        {"ports",
         {{"dhcp", cfg.ports.dhcp},
          {"dhcp_client", cfg.ports.dhcp_client},
          {"tftp", cfg.ports.tftp},
          {"dns", cfg.ports.dns},
          {"http", cfg.ports.http}}},
    };
}

Bytes make_bootloader_blob(const std::string& cloud_domain, std::size_t total_size) {
    ipxe::Script s{{ipxe::Chain{"http://" + cloud_domain + "/boot"}}};
    Bytes blob = to_bytes(ipxe::render_script(s));
    blob.push_back(0);
    // xorshift filler so the image has realistic, non-compressible size.
    std::uint32_t x = 0x2545F491u;
    while (blob.size() < total_size) {
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        blob.push_back(std::uint8_t(x));
    }
    return blob;
}

std::string embedded_script(const Bytes& blob) {
    auto nul = std::find(blob.begin(), blob.end(), std::uint8_t{0});
    return std::string(blob.begin(), nul);
}

}  // namespace sdb::gateway
