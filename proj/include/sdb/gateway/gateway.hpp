#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sdb/codec/dhcp.hpp"
#include "sdb/codec/dns.hpp"
#include "sdb/gateway/config.hpp"
#include "sdb/gateway/lease_table.hpp"
#include "sdb/http/message.hpp"

namespace sdb::gateway {

enum class ModeKind { Standalone, Proxy };

struct GatewayMode {
    ModeKind kind = ModeKind::Standalone;
    /// Server identifier of the upstream DHCP server that answered the last probe.
    std::optional<Ipv4Address> upstream_server;

    bool operator==(const GatewayMode&) const = default;
};

const char* to_string(ModeKind kind);

enum class LinkKind { Wifi, Cellular, Wired };
enum class LinkStatus { Unconfigured, Connecting, Connected, Failed };

const char* to_string(LinkKind kind);
const char* to_string(LinkStatus status);

struct ConnectivityProfile {
    LinkKind kind = LinkKind::Wired;
    std::string ssid;
    std::string passphrase;
    std::string apn;
    std::string username;
    std::string password;
    LinkStatus status = LinkStatus::Unconfigured;
    std::string failure;  // set with status=Failed

    static ConnectivityProfile wifi(std::string ssid, std::string passphrase);
    static ConnectivityProfile cellular(std::string apn, std::string username = {},
                                        std::string password = {});
    static ConnectivityProfile wired();
};

enum class AttachResult { Connected, NoSuchNetwork, AuthFailure };

const char* to_string(AttachResult r);

/// The upstream interface as the gateway sees it; the simulation binds it to a keyed
/// virtual segment, live mode to whatever the host provides.
class UpstreamLink {
public:
    virtual ~UpstreamLink() = default;
    virtual AttachResult attach(const ConnectivityProfile& profile) = 0;
};

struct GatewayEvent {
    std::int64_t time_ms = 0;
    std::string kind;
    std::string detail;
};

/// Point-in-time copy of the mutable state.
struct GatewayState {
    GatewayMode mode;
    bool upstream_connected = false;
    std::optional<ConnectivityProfile> profile;
    std::map<MacAddress, Lease> leases;
};

/// Portal reply plus the connectivity change it asks the transport to perform.
struct PortalResult {
    std::string script;
    std::optional<ConnectivityProfile> attach_request;
};

/// The boot gateway's protocol logic, independent of transport. Every public member is
/// safe to call concurrently; mutable state sits behind a single mutex.
class Gateway {
public:
    explicit Gateway(GatewayConfig cfg);

    const GatewayConfig& config() const { return cfg_; }
    Ipv4Address address() const { return cfg_.static_ip; }
    GatewayState state() const;
    GatewayMode mode() const;
    std::vector<GatewayEvent> events() const;

    /// Dispatches on the current mode.
    std::optional<dhcp::Message> handle_dhcp(const dhcp::Message& msg, std::int64_t now_ms);
    std::optional<dhcp::Message> handle_dhcp_standalone(const dhcp::Message& msg, std::int64_t now_ms);
    std::optional<dhcp::Message> handle_dhcp_proxy(const dhcp::Message& msg, std::int64_t now_ms);

    /// Captive resolver: every A/IN question resolves to the gateway.
    dns::Answer answer_dns(const dns::Query& q) const;

    PortalResult portal_request(const std::string& path,
                                const std::map<std::string, std::string>& fields,
                                std::int64_t now_ms);
    /// HTTP adapter around portal_request.
    http::Response handle_http(const http::Request& req, std::int64_t now_ms,
                               std::optional<ConnectivityProfile>* attach_request = nullptr);

    /// Binds the upstream interface. On success the mode drops back to Standalone until a
    /// probe sees an upstream OFFER (record_probe_result).
    LinkStatus attach_upstream(ConnectivityProfile profile, UpstreamLink& link, std::int64_t now_ms);
    void record_probe_result(std::optional<Ipv4Address> upstream_server, std::int64_t now_ms);

    /// Bridge filter for DHCP server replies arriving from the upstream side: boot steering
    /// fields (siaddr, sname, file, options 66/67/43 and PXE vendor class) are removed so only
    /// this gateway can direct a client's boot. Returns true if anything was stripped.
    static bool sanitize_upstream_reply(dhcp::Message& msg);

    /// Raw-bytes entry points used by transports; undecodable input yields nullopt.
    std::optional<Bytes> handle_dhcp_bytes(const Bytes& raw, std::int64_t now_ms);
    std::optional<Bytes> handle_dns_bytes(const Bytes& raw) const;

private:
    dhcp::Message base_reply(const dhcp::Message& req, dhcp::MessageType type) const;
    void log(std::int64_t now_ms, std::string kind, std::string detail);

    GatewayConfig cfg_;
    mutable std::mutex mu_;
    GatewayMode mode_;
    bool upstream_connected_ = false;
    std::optional<ConnectivityProfile> profile_;
    LeaseTable leases_;
    std::vector<GatewayEvent> events_;
};

}  // namespace sdb::gateway
