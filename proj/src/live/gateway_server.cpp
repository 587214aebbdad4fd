#include "sdb/live/gateway_server.hpp"

#include <chrono>

#include <httplib.h>

#include "sdb/codec/dhcp.hpp"
#include "sdb/codec/error.hpp"
#include "sdb/codec/tftp.hpp"
#include "sdb/gateway/probe.hpp"
#include "sdb/gateway/tftp_server.hpp"
#include "live/http_bridge.hpp"

namespace sdb::live {

namespace {

constexpr int poll_ms = 200;

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

class HookLink : public gateway::UpstreamLink {
public:
    explicit HookLink(const LiveGatewayOptions& o) : opts_(o) {}
    gateway::AttachResult attach(const gateway::ConnectivityProfile& p) override {
        if (opts_.attach_hook) return opts_.attach_hook(p);
        return p.kind == gateway::LinkKind::Wired ? gateway::AttachResult::Connected
                                                  : gateway::AttachResult::NoSuchNetwork;
    }

private:
    const LiveGatewayOptions& opts_;
};

class UdpProbeChannel : public gateway::ProbeChannel {
public:
    UdpProbeChannel(UdpSocket& sock, Ipv4Address bcast, std::uint16_t server_port)
        : sock_(sock), bcast_(bcast), server_port_(server_port) {}
    void broadcast(const Bytes& discover) override { sock_.send_to(discover, bcast_, server_port_); }
    std::optional<Bytes> receive(std::uint32_t timeout_ms) override {
        auto d = sock_.receive(int(timeout_ms));
        if (!d) return std::nullopt;
        return std::move(d->data);
    }

private:
    UdpSocket& sock_;
    Ipv4Address bcast_;
    std::uint16_t server_port_;
};

}  // namespace

LiveGateway::LiveGateway(gateway::Gateway& gw, LiveGatewayOptions opts) : gw_(gw), opts_(std::move(opts)) {}

LiveGateway::~LiveGateway() { stop(); }

std::uint16_t LiveGateway::dhcp_port() const { return dhcp_ ? dhcp_->port() : 0; }
std::uint16_t LiveGateway::tftp_port() const { return tftp_ ? tftp_->port() : 0; }
std::uint16_t LiveGateway::dns_port() const { return dns_ ? dns_->port() : 0; }

void LiveGateway::start() {
    if (running_) return;
    const auto& ports = gw_.config().ports;
    auto dhcp = std::make_unique<UdpSocket>("dhcp", opts_.bind_ip, ports.dhcp);
    auto tftp = std::make_unique<UdpSocket>("tftp", opts_.bind_ip, ports.tftp);
    auto dns = std::make_unique<UdpSocket>("dns", opts_.bind_ip, ports.dns);
    auto http = std::make_unique<httplib::Server>();
    auto host = opts_.bind_ip.to_string();
    int hp = ports.http;
    if (hp == 0) {
        hp = http->bind_to_any_port(host);
        if (hp <= 0) throw PortBindFailure("http", 0, "no free port");
    } else if (!http->bind_to_port(host, hp)) {
        throw PortBindFailure("http", ports.http, "address in use or not permitted");
    }
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<gateway::ConnectivityProfile> attach;
        auto resp = gw_.handle_http(from_httplib(req), now_ms(), &attach);
        to_httplib(resp, res);
        if (attach) {
            std::lock_guard lock(workers_mu_);
            threads_.emplace_back([this, p = *attach] { connect(p); });
        }
    };
    http->Get(".*", handler);
    http->Post(".*", handler);

    dhcp_ = std::move(dhcp);
    tftp_ = std::move(tftp);
    dns_ = std::move(dns);
    http_ = std::move(http);
    http_port_ = std::uint16_t(hp);
    running_ = true;
    std::lock_guard lock(workers_mu_);
    threads_.emplace_back([this] { dhcp_loop(); });
    threads_.emplace_back([this] { dns_loop(); });
    threads_.emplace_back([this] { tftp_loop(); });
    threads_.emplace_back([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void LiveGateway::stop() {
    if (!running_.exchange(false)) return;
    if (http_) http_->stop();
    std::vector<std::thread> ts;
    {
        std::lock_guard lock(workers_mu_);
        ts.swap(threads_);
    }
    for (auto& t : ts)
        if (t.joinable()) t.join();
    // Workers spawned while we were joining.
    std::lock_guard lock(workers_mu_);
    for (auto& t : threads_)
        if (t.joinable()) t.join();
    threads_.clear();
}

void LiveGateway::dhcp_loop() {
    while (running_) {
        auto d = dhcp_->receive(poll_ms);
        if (!d) continue;
        try {
            auto req = dhcp::decode(d->data);
            if (req.client_mac == opts_.probe_mac) continue;
            auto reply = gw_.handle_dhcp(req, now_ms());
            if (!reply) continue;
            bool to_source = !d->from_ip.is_unspecified();
            dhcp_->send_to(dhcp::encode(*reply), to_source ? d->from_ip : opts_.broadcast_ip,
                           to_source ? d->from_port : gw_.config().ports.dhcp_client);
        } catch (const codec::DecodeError&) {
        } catch (const codec::EncodeError&) {
        }
    }
}

void LiveGateway::dns_loop() {
    while (running_) {
        auto d = dns_->receive(poll_ms);
        if (!d) continue;
        if (auto reply = gw_.handle_dns_bytes(d->data)) dns_->send_to(*reply, d->from_ip, d->from_port);
    }
}

void LiveGateway::tftp_loop() {
    while (running_) {
        auto d = tftp_->receive(poll_ms);
        if (!d) continue;
        std::lock_guard lock(workers_mu_);
        threads_.emplace_back([this, first = std::move(*d)]() mutable { tftp_transfer(std::move(first)); });
    }
}

void LiveGateway::tftp_transfer(Datagram first) {
    gateway::TftpOpened opened;
    try {
        opened = gateway::TftpTransfer::open(tftp::decode(first.data), gw_.config());
    } catch (const codec::DecodeError&) {
        return;
    }
    UdpSocket sock("tftp-transfer", opts_.bind_ip, 0);
    auto send = [&](const tftp::Packet& p) { sock.send_to(tftp::encode(p), first.from_ip, first.from_port); };
    send(opened.reply);
    if (!opened.transfer) return;
    auto& xfer = *opened.transfer;
    int resends = 0;
    while (running_) {
        auto d = sock.receive(opts_.tftp_timeout_ms);
        if (!d) {
            if (++resends > opts_.tftp_retries) return;
            send(xfer.retransmit());
            continue;
        }
        if (d->from_ip != first.from_ip || d->from_port != first.from_port) {
            sock.send_to(tftp::encode(tftp::Error{5, "unknown transfer id"}), d->from_ip, d->from_port);
            continue;
        }
        tftp::Packet p;
        try {
            p = tftp::decode(d->data);
        } catch (const codec::DecodeError&) {
            continue;
        }
        if (std::holds_alternative<tftp::Error>(p)) return;
        auto* ack = std::get_if<tftp::Ack>(&p);
        if (!ack) continue;
        auto next = xfer.on_ack(ack->block);
        if (xfer.done()) return;
        if (next) {
            resends = 0;
            send(*next);
        }
    }
}

gateway::GatewayMode LiveGateway::probe() {
    const auto& cfg = gw_.config();
    UdpSocket sock("dhcp-probe", opts_.bind_ip, cfg.ports.dhcp_client);
    UdpProbeChannel ch(sock, opts_.broadcast_ip, cfg.ports.dhcp);
    auto xid = std::uint32_t(now_ms());
    auto mode = gateway::probe_upstream(ch, cfg, opts_.probe_mac, xid);
    gw_.record_probe_result(mode.kind == gateway::ModeKind::Proxy ? mode.upstream_server : std::nullopt, now_ms());
    return gw_.mode();
}

void LiveGateway::connect(gateway::ConnectivityProfile profile) {
    HookLink link(opts_);
    if (gw_.attach_upstream(std::move(profile), link, now_ms()) != gateway::LinkStatus::Connected) return;
    try {
        probe();
    } catch (const PortBindFailure&) {
        gw_.record_probe_result(std::nullopt, now_ms());
    }
}

}  // namespace sdb::live
