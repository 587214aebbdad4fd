#include "sdb/gateway/probe.hpp"

#include <chrono>

#include "sdb/codec/error.hpp"

namespace sdb::gateway {

UpstreamProbe::UpstreamProbe(const GatewayConfig& cfg, MacAddress upstream_mac, std::uint32_t xid)
    : retries_(cfg.probe_retries), mac_(upstream_mac), xid_(xid) {}

Bytes UpstreamProbe::discover() const {
    auto msg = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Discover, xid_, mac_);
    msg.flags = dhcp::flag_broadcast;
    msg.set(dhcp::opt::parameter_request, Bytes{dhcp::opt::subnet_mask, dhcp::opt::router,
                                                dhcp::opt::dns_servers});
    return dhcp::encode(msg);
}

Bytes UpstreamProbe::start() {
    attempts_ = 1;
    finished_ = false;
    server_.reset();
    return discover();
}

bool UpstreamProbe::on_packet(const Bytes& raw) {
    if (finished_) return false;
    try {
        auto msg = dhcp::decode(raw);
        if (msg.op != dhcp::Op::BootReply || msg.transaction_id != xid_ || msg.client_mac != mac_ ||
            msg.message_type() != dhcp::MessageType::Offer)
            return false;
        server_ = msg.ip_option(dhcp::opt::server_id).value_or(msg.server_ip);
        finished_ = true;
        return true;
    } catch (const codec::DecodeError&) {
        return false;
    }
}

std::optional<Bytes> UpstreamProbe::on_timeout() {
    if (finished_) return std::nullopt;
    if (attempts_ >= retries_) {
        finished_ = true;
        return std::nullopt;
    }
    ++attempts_;
    return discover();
}

GatewayMode UpstreamProbe::result() const {
    if (server_) return GatewayMode{ModeKind::Proxy, server_};
    return GatewayMode{};
}

GatewayMode probe_upstream(ProbeChannel& channel, const GatewayConfig& cfg, MacAddress upstream_mac,
                           std::uint32_t xid) {
    using clock = std::chrono::steady_clock;
    UpstreamProbe probe(cfg, upstream_mac, xid);
    std::optional<Bytes> out = probe.start();
    while (out) {
        channel.broadcast(*out);
        auto deadline = clock::now() + std::chrono::milliseconds(cfg.probe_timeout_ms);
        for (;;) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
            if (left.count() <= 0) break;
            auto raw = channel.receive(std::uint32_t(left.count()));
            if (raw && probe.on_packet(*raw)) return probe.result();
        }
        out = probe.on_timeout();
    }
    return probe.result();
}

}  // namespace sdb::gateway
