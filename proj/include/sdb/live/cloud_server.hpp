#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "sdb/cloud/service.hpp"

namespace httplib {
class Server;
}

namespace sdb::live {

/// The cloud service over HTTP. Port 0 binds an ephemeral port.
class LiveCloud {
public:
    LiveCloud(cloud::CloudService& svc, std::string host, std::uint16_t port);
    ~LiveCloud();
    LiveCloud(const LiveCloud&) = delete;
    LiveCloud& operator=(const LiveCloud&) = delete;

    /// Throws PortBindFailure.
    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    cloud::CloudService& svc_;
    std::string host_;
    std::uint16_t port_;
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
};

}  // namespace sdb::live
