#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>

#include "sdb/sim/network.hpp"

namespace sdb::sim {

/// Port-translating NAT with per-flow mappings. An inside flow (proto, inside endpoint, remote
/// endpoint) gets its own external port; inbound packets are admitted only from the remote the
/// mapping was created for. Mappings expire after `idle_timeout` without traffic.
class NatTable {
public:
    struct Mapping {
        Proto proto;
        Endpoint inside;
        Endpoint remote;
        std::uint16_t external_port;
        Micros last_used;
    };

    explicit NatTable(Ipv4Address external_ip, Micros idle_timeout = seconds(120),
                      std::uint16_t first_port = 49152, std::uint16_t last_port = 65535);

    Ipv4Address external_ip() const { return external_ip_; }

    /// Rewrites the source to the external address. Nullopt when the port range is exhausted.
    std::optional<Packet> outbound(const Packet& pkt, Micros now);
    /// Rewrites the destination back to the inside endpoint. Nullopt for packets matching no
    /// live mapping.
    std::optional<Packet> inbound(const Packet& pkt, Micros now);

    void expire(Micros now);
    std::size_t size() const { return by_flow_.size(); }
    const Mapping* find_external(Proto proto, std::uint16_t port) const;

private:
    using FlowKey = std::tuple<Proto, Endpoint, Endpoint>;
    using ExtKey = std::pair<Proto, std::uint16_t>;

    Ipv4Address external_ip_;
    Micros idle_;
    std::uint16_t first_, last_;
    std::uint16_t next_;
    std::map<FlowKey, Mapping> by_flow_;
    std::map<ExtKey, FlowKey> by_external_;
};

}  // namespace sdb::sim
