#pragma once

#include <cstdint>
#include <optional>

#include "sdb/codec/dhcp.hpp"
#include "sdb/gateway/config.hpp"
#include "sdb/gateway/gateway.hpp"

namespace sdb::gateway {

/// Event-driven upstream DHCP discovery. The owner sends whatever start()/on_timeout()
/// return and arms a probe_timeout_ms timer after each send.
class UpstreamProbe {
public:
    UpstreamProbe(const GatewayConfig& cfg, MacAddress upstream_mac, std::uint32_t xid);

    Bytes start();
    /// True when `raw` is an OFFER answering our DISCOVER; the probe is then finished.
    bool on_packet(const Bytes& raw);
    /// Next DISCOVER, or nullopt once the retries are used up (probe finished, no server).
    std::optional<Bytes> on_timeout();

    bool finished() const { return finished_; }
    int attempts() const { return attempts_; }
    /// Proxy with the offering server once an OFFER was seen, else Standalone.
    GatewayMode result() const;

private:
    Bytes discover() const;

    int retries_;
    MacAddress mac_;
    std::uint32_t xid_;
    int attempts_ = 0;
    bool finished_ = false;
    std::optional<Ipv4Address> server_;
};

/// Blocking transport for probe_upstream.
class ProbeChannel {
public:
    virtual ~ProbeChannel() = default;
    virtual void broadcast(const Bytes& discover) = 0;
    /// Waits up to timeout_ms for the next datagram arriving on the DHCP client port.
    virtual std::optional<Bytes> receive(std::uint32_t timeout_ms) = 0;
};

/// Synchronous probe: up to probe_retries DISCOVERs, each followed by a probe_timeout_ms
/// window. Datagrams that are not matching OFFERs do not extend the window.
GatewayMode probe_upstream(ProbeChannel& channel, const GatewayConfig& cfg, MacAddress upstream_mac,
                           std::uint32_t xid);

}  // namespace sdb::gateway
