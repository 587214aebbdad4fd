#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdb/cloud/control_plane.hpp"
#include "sdb/cloud/service.hpp"
#include "sdb/gateway/gateway.hpp"
#include "sdb/gateway/lease_table.hpp"
#include "sdb/gateway/probe.hpp"
#include "sdb/gateway/tftp_server.hpp"
#include "sdb/sim/nat.hpp"
#include "sdb/sim/network.hpp"

namespace sdb::sim {

Packet make_packet(Proto proto, MacAddress dst_mac, Endpoint src, Endpoint dst, Bytes payload);

/// TFTP read service bound to one port: RRQs arrive on the well-known port, each transfer
/// continues on its own server port. Unacknowledged packets are resent after `timeout`.
class TftpService {
public:
    TftpService(Network& net, Port& port, Ipv4Address ip, const gateway::GatewayConfig& cfg,
                Micros timeout = seconds(1), int max_resends = 5);

    /// True when the packet was a TFTP packet for this service.
    bool handle(const Packet& pkt);
    Port& port() { return port_; }
    std::size_t active() const { return sessions_.size(); }
    std::uint64_t completed() const { return completed_; }

private:
    struct Session {
        gateway::TftpTransfer transfer;
        Endpoint client;
        MacAddress client_mac;
        Clock::EventId timer{};
        int resends = 0;
    };
    void send(std::uint16_t tid, const Session& s, const tftp::Packet& p);
    void arm(std::uint16_t tid);

    Network& net_;
    Port& port_;
    Ipv4Address ip_;
    const gateway::GatewayConfig& cfg_;
    Micros timeout_;
    int max_resends_;
    std::uint16_t next_tid_ = 40000;
    std::map<std::uint16_t, Session> sessions_;
    std::uint64_t completed_ = 0;
};

/// The in-path boot gateway: a bridge between the client-facing internal port and the
/// upstream port, with DHCP, TFTP, DNS and the portal served on the internal side only.
/// Bridging is active only in Proxy mode. Upstream DHCP replies crossing the bridge pass
/// through Gateway::sanitize_upstream_reply.
class GatewayNode : public BridgeNode {
public:
    GatewayNode(Network& net, std::string name, gateway::GatewayConfig cfg);
    ~GatewayNode() override;

    Port& internal() { return *a_; }
    Port& upstream() { return *b_; }
    gateway::Gateway& logic() { return gw_; }
    const gateway::Gateway& logic() const { return gw_; }

    /// Networks the upstream interface may join: keyed segments are matched by SSID or APN;
    /// `wired` is used for wired profiles.
    void set_upstream_candidates(std::vector<Segment*> keyed, Segment* wired = nullptr);
    /// Attaches with a stored profile as if submitted through the portal, then probes.
    gateway::LinkStatus connect(const gateway::ConnectivityProfile& profile);
    /// Starts an upstream probe when the upstream port is attached.
    void start_probe();
    bool probing() const { return probe_.has_value(); }

    /// Disabling the sanitizer exists for negative-control experiments only.
    void set_sanitize(bool on) { sanitize_ = on; }
    std::uint64_t sanitized() const { return sanitized_; }

protected:
    bool forwarding() const override;
    bool local(Port& in, const Packet& pkt) override;
    bool filter(Port& in, Packet& pkt) override;

private:
    class Link;
    void serve(const Packet& pkt);
    void probe_timeout();
    std::int64_t now_ms() const { return net().now() / 1000; }

    gateway::Gateway gw_;
    TftpService tftp_;
    std::unique_ptr<Link> link_;
    std::optional<gateway::UpstreamProbe> probe_;
    Clock::EventId probe_timer_{};
    bool sanitize_ = true;
    std::uint64_t sanitized_ = 0;
};

struct RouterConfig {
    Ipv4Address lan_ip{10, 0, 0, 1};
    Ipv4Subnet lan_subnet{Ipv4Address{10, 0, 0, 0}, 24};
    Ipv4Address pool_first{10, 0, 0, 100};
    Ipv4Address pool_last{10, 0, 0, 199};
    std::uint32_t lease_ttl_s = 3600;
    Ipv4Address wan_ip{198, 51, 100, 1};
    Micros nat_idle = seconds(120);
    bool dhcp_enabled = true;
    /// Authoritative A records served to the LAN; other names get NXDOMAIN.
    std::map<std::string, Ipv4Address> zone;
};

/// The upstream network's router: DHCP and DNS on the LAN side, NAT towards the WAN.
class RouterNode : public Node {
public:
    RouterNode(Network& net, std::string name, RouterConfig cfg);

    Port& lan() { return *lan_; }
    Port& wan() { return *wan_; }
    NatTable& nat() { return nat_; }
    const RouterConfig& config() const { return cfg_; }

    void on_receive(Port& port, const Packet& pkt) override;

private:
    void serve_dhcp(const Packet& pkt);
    void serve_dns(const Packet& pkt);

    RouterConfig cfg_;
    Port* lan_;
    Port* wan_;
    NatTable nat_;
    gateway::LeaseTable leases_;
};

/// The control plane behind its HTTP service, reachable on the WAN.
class CloudNode : public Node {
public:
    CloudNode(Network& net, std::string name, Ipv4Address ip, cloud::ControlPlaneConfig cfg,
              std::string admin_token);

    Port& port() { return *port_; }
    Ipv4Address ip() const { return *port_->ip; }
    /// Null while stopped.
    cloud::ControlPlane* control_plane() { return cp_.get(); }
    cloud::CloudService* service() { return svc_.get(); }

    void stop();
    /// Reopens the store. Throws CloudError(StoreCorruption) when it cannot be opened.
    void start();
    bool running() const { return cp_ != nullptr; }
    std::uint64_t requests() const { return requests_; }

    void on_receive(Port& port, const Packet& pkt) override;

private:
    Port* port_;
    cloud::ControlPlaneConfig cfg_;
    std::string token_;
    std::unique_ptr<cloud::ControlPlane> cp_;
    std::unique_ptr<cloud::CloudService> svc_;
    std::uint64_t requests_ = 0;
};

/// Attacker on the upstream broadcast domain answering DISCOVERs with boot steering towards
/// its own TFTP server.
class RogueDhcpNode : public Node {
public:
    RogueDhcpNode(Network& net, std::string name, Ipv4Address ip, Bytes payload,
                  bool offer_address = true);

    Port& port() { return *port_; }
    const gateway::GatewayConfig& config() const { return cfg_; }
    std::uint64_t offers_sent() const { return offers_; }
    std::uint64_t transfers() const { return tftp_.completed(); }

    void on_receive(Port& port, const Packet& pkt) override;

private:
    Port* port_;
    gateway::GatewayConfig cfg_;
    TftpService tftp_;
    bool offer_address_;
    std::uint32_t next_host_ = 240;
    std::uint64_t offers_ = 0;
};

}  // namespace sdb::sim
