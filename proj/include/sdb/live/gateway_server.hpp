#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sdb/gateway/gateway.hpp"
#include "sdb/live/udp_socket.hpp"

namespace httplib {
class Server;
}

namespace sdb::live {

struct LiveGatewayOptions {
    Ipv4Address bind_ip;  // any
    /// Where DHCP replies go when the request came from 0.0.0.0.
    Ipv4Address broadcast_ip = Ipv4Address::broadcast();
    /// Brings the upstream link up for a portal submission. The default accepts wired
    /// profiles (the host interface is assumed up) and reports other kinds as unavailable.
    std::function<gateway::AttachResult(const gateway::ConnectivityProfile&)> attach_hook;
    /// Source MAC of upstream probes; our own DHCP listener ignores it.
    MacAddress probe_mac{{0x02, 0x5d, 0xb0, 0xff, 0xff, 0x01}};
    int tftp_timeout_ms = 1000;
    int tftp_retries = 5;
};

/// Serves one Gateway over real sockets: DHCP, TFTP, DNS and the portal over HTTP. Each
/// listener runs on its own thread; TFTP transfers get a thread and port each.
class LiveGateway {
public:
    LiveGateway(gateway::Gateway& gw, LiveGatewayOptions opts = {});
    ~LiveGateway();
    LiveGateway(const LiveGateway&) = delete;
    LiveGateway& operator=(const LiveGateway&) = delete;

    /// Binds every listener or none. Throws PortBindFailure naming the first port that failed.
    void start();
    void stop();
    bool running() const { return running_; }

    /// Bound ports, useful when the config asked for port 0.
    std::uint16_t dhcp_port() const;
    std::uint16_t tftp_port() const;
    std::uint16_t dns_port() const;
    std::uint16_t http_port() const { return http_port_; }

    /// Runs the upstream probe synchronously over UDP and records the result.
    gateway::GatewayMode probe();

private:
    void dhcp_loop();
    void dns_loop();
    void tftp_loop();
    void tftp_transfer(Datagram first);
    void connect(gateway::ConnectivityProfile profile);

    gateway::Gateway& gw_;
    LiveGatewayOptions opts_;
    std::unique_ptr<UdpSocket> dhcp_, dns_, tftp_;
    std::unique_ptr<httplib::Server> http_;
    std::uint16_t http_port_ = 0;
    std::atomic<bool> running_{false};
    std::mutex workers_mu_;
    std::vector<std::thread> threads_;
};

}  // namespace sdb::live
