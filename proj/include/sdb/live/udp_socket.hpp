#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdb/net_types.hpp"

namespace sdb::live {

/// A listener could not bind its port.
class PortBindFailure : public std::runtime_error {
public:
    PortBindFailure(std::string service, std::uint16_t port, const std::string& reason)
        : std::runtime_error(service + ": cannot bind port " + std::to_string(port) + ": " + reason),
          service_(std::move(service)),
          port_(port) {}
    const std::string& service() const { return service_; }
    std::uint16_t port() const { return port_; }

private:
    std::string service_;
    std::uint16_t port_;
};

struct Datagram {
    Bytes data;
    Ipv4Address from_ip;
    std::uint16_t from_port = 0;
};

/// Blocking IPv4 UDP socket with broadcast enabled.
class UdpSocket {
public:
    /// Port 0 picks an ephemeral port. Throws PortBindFailure.
    UdpSocket(const std::string& service, Ipv4Address bind_ip, std::uint16_t port);
    ~UdpSocket();
    UdpSocket(UdpSocket&& o) noexcept : fd_(o.fd_), port_(o.port_) { o.fd_ = -1; }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    UdpSocket& operator=(UdpSocket&&) = delete;

    std::uint16_t port() const { return port_; }
    /// Nullopt on timeout.
    std::optional<Datagram> receive(int timeout_ms);
    bool send_to(const Bytes& data, Ipv4Address ip, std::uint16_t port);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace sdb::live
