#include "sdb/live/cloud_server.hpp"

#include <httplib.h>

#include "live/http_bridge.hpp"
#include "sdb/live/udp_socket.hpp"

namespace sdb::live {

LiveCloud::LiveCloud(cloud::CloudService& svc, std::string host, std::uint16_t port)
    : svc_(svc), host_(std::move(host)), port_(port) {}

LiveCloud::~LiveCloud() { stop(); }

void LiveCloud::start() {
    auto http = std::make_unique<httplib::Server>();
    http->set_payload_max_length(std::size_t(4) << 30);
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        to_httplib(svc_.handle(from_httplib(req), req.remote_addr), res);
    };
    http->Get(".*", handler);
    http->Post(".*", handler);
    http->Put(".*", handler);
    http->Patch(".*", handler);
    http->Delete(".*", handler);
    if (port_ == 0) {
        int p = http->bind_to_any_port(host_);
        if (p <= 0) throw PortBindFailure("http", 0, "no free port");
        port_ = std::uint16_t(p);
    } else if (!http->bind_to_port(host_, port_)) {
        throw PortBindFailure("http", port_, "address in use or not permitted");
    }
    http_ = std::move(http);
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void LiveCloud::stop() {
    if (!http_) return;
    http_->stop();
    if (thread_.joinable()) thread_.join();
    http_.reset();
}

}  // namespace sdb::live
