#include "sdb/gateway/gateway.hpp"

#include "sdb/codec/error.hpp"
#include "sdb/ipxe/script.hpp"
#include "sdb/url.hpp"

namespace sdb::gateway {

const char* to_string(ModeKind kind) {
    return kind == ModeKind::Proxy ? "Proxy" : "Standalone";
}

const char* to_string(LinkKind kind) {
    switch (kind) {
        case LinkKind::Wifi: return "wifi";
        case LinkKind::Cellular: return "cellular";
        case LinkKind::Wired: return "wired";
    }
    return "?";
}

const char* to_string(LinkStatus status) {
    switch (status) {
        case LinkStatus::Unconfigured: return "Unconfigured";
        case LinkStatus::Connecting: return "Connecting";
        case LinkStatus::Connected: return "Connected";
        case LinkStatus::Failed: return "Failed";
    }
    return "?";
}

const char* to_string(AttachResult r) {
    switch (r) {
        case AttachResult::Connected: return "Connected";
        case AttachResult::NoSuchNetwork: return "NoSuchNetwork";
        case AttachResult::AuthFailure: return "AuthFailure";
    }
    return "?";
}

ConnectivityProfile ConnectivityProfile::wifi(std::string ssid, std::string passphrase) {
    ConnectivityProfile p;
    p.kind = LinkKind::Wifi;
    p.ssid = std::move(ssid);
    p.passphrase = std::move(passphrase);
    return p;
}

ConnectivityProfile ConnectivityProfile::cellular(std::string apn, std::string username,
                                                  std::string password) {
    ConnectivityProfile p;
    p.kind = LinkKind::Cellular;
    p.apn = std::move(apn);
    p.username = std::move(username);
    p.password = std::move(password);
    return p;
}

ConnectivityProfile ConnectivityProfile::wired() { return ConnectivityProfile{}; }

Gateway::Gateway(GatewayConfig cfg)
    : cfg_(std::move(cfg)),
      upstream_connected_(cfg_.upstream_connected),
      leases_(cfg_.pool_first, cfg_.pool_last, cfg_.static_ip, std::int64_t(cfg_.lease_ttl_s) * 1000) {
    cfg_.ensure_bootloader();
    cfg_.validate();
}

GatewayState Gateway::state() const {
    std::lock_guard lock(mu_);
    return {mode_, upstream_connected_, profile_, leases_.bindings()};
}

GatewayMode Gateway::mode() const {
    std::lock_guard lock(mu_);
    return mode_;
}

std::vector<GatewayEvent> Gateway::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

void Gateway::log(std::int64_t now_ms, std::string kind, std::string detail) {
    events_.push_back({now_ms, std::move(kind), std::move(detail)});
}

dhcp::Message Gateway::base_reply(const dhcp::Message& req, dhcp::MessageType type) const {
    auto reply = dhcp::make_message(dhcp::Op::BootReply, type, req.transaction_id, req.client_mac);
    reply.flags = req.flags;
    reply.gateway_ip = req.gateway_ip;
    reply.server_ip = cfg_.static_ip;
    reply.boot_file = cfg_.boot_filename;
    reply.set(dhcp::opt::server_id, cfg_.static_ip);
    return reply;
}

std::optional<dhcp::Message> Gateway::handle_dhcp(const dhcp::Message& msg, std::int64_t now_ms) {
    if (mode().kind == ModeKind::Proxy) return handle_dhcp_proxy(msg, now_ms);
    return handle_dhcp_standalone(msg, now_ms);
}

std::optional<dhcp::Message> Gateway::handle_dhcp_standalone(const dhcp::Message& msg,
                                                             std::int64_t now_ms) {
    if (msg.op != dhcp::Op::BootRequest) return std::nullopt;
    auto type = msg.message_type();
    if (!type) return std::nullopt;

    std::lock_guard lock(mu_);
    auto finish = [&](dhcp::Message reply, const Lease& lease) {
        reply.your_ip = lease.address;
        reply.set(dhcp::opt::lease_time, [&] {
            Bytes b(4);
            std::uint32_t ttl = cfg_.lease_ttl_s;
            for (int i = 3; i >= 0; --i, ttl >>= 8) b[i] = std::uint8_t(ttl);
            return b;
        }());
        reply.set(dhcp::opt::subnet_mask, cfg_.subnet.netmask());
        reply.set(dhcp::opt::router, cfg_.static_ip);
        reply.set(dhcp::opt::dns_servers, cfg_.static_ip);
        reply.set(dhcp::opt::tftp_server_name, cfg_.static_ip.to_string());
        reply.set(dhcp::opt::bootfile_name, cfg_.boot_filename);
        if (msg.is_pxe_client()) reply.set(dhcp::opt::vendor_class, dhcp::pxe_vendor_prefix);
        return reply;
    };

    switch (*type) {
        case dhcp::MessageType::Discover: {
            auto lease = leases_.offer(msg.client_mac, now_ms);
            if (!lease) {
                log(now_ms, "PoolExhausted", "no address for " + msg.client_mac.to_string());
                return std::nullopt;
            }
            log(now_ms, "Offer", msg.client_mac.to_string() + " -> " + lease->address.to_string());
            return finish(base_reply(msg, dhcp::MessageType::Offer), *lease);
        }
        case dhcp::MessageType::Request: {
            auto server = msg.ip_option(dhcp::opt::server_id);
            if (server && *server != cfg_.static_ip) {
                // Client picked another server; drop our tentative binding.
                leases_.release(msg.client_mac);
                return std::nullopt;
            }
            auto requested = msg.ip_option(dhcp::opt::requested_ip).value_or(msg.client_ip);
            auto lease = leases_.confirm(msg.client_mac, requested, now_ms);
            if (!lease) {
                log(now_ms, "Nak", msg.client_mac.to_string() + " asked for " + requested.to_string());
                auto nak = dhcp::make_message(dhcp::Op::BootReply, dhcp::MessageType::Nak,
                                              msg.transaction_id, msg.client_mac);
                nak.flags = msg.flags;
                nak.set(dhcp::opt::server_id, cfg_.static_ip);
                return nak;
            }
            log(now_ms, "Ack", msg.client_mac.to_string() + " -> " + lease->address.to_string());
            return finish(base_reply(msg, dhcp::MessageType::Ack), *lease);
        }
        case dhcp::MessageType::Release:
            leases_.release(msg.client_mac);
            log(now_ms, "Release", msg.client_mac.to_string());
            return std::nullopt;
        default: return std::nullopt;
    }
}

std::optional<dhcp::Message> Gateway::handle_dhcp_proxy(const dhcp::Message& msg, std::int64_t now_ms) {
    if (msg.op != dhcp::Op::BootRequest || msg.message_type() != dhcp::MessageType::Discover)
        return std::nullopt;
    if (!msg.is_pxe_client()) return std::nullopt;  // NotPxeClient: leave it to the upstream server

    auto reply = base_reply(msg, dhcp::MessageType::Offer);
    reply.your_ip = Ipv4Address::any();
    reply.set(dhcp::opt::vendor_class, dhcp::pxe_vendor_prefix);
    reply.set(dhcp::opt::tftp_server_name, cfg_.static_ip.to_string());
    reply.set(dhcp::opt::bootfile_name, cfg_.boot_filename);
    std::lock_guard lock(mu_);
    log(now_ms, "ProxyOffer", msg.client_mac.to_string());
    return reply;
}

bool Gateway::sanitize_upstream_reply(dhcp::Message& msg) {
    bool changed = false;
    if (!msg.server_ip.is_unspecified()) {
        msg.server_ip = Ipv4Address::any();
        changed = true;
    }
    if (!msg.boot_file.empty() || !msg.server_name.empty()) {
        msg.boot_file.clear();
        msg.server_name.clear();
        changed = true;
    }
    for (std::uint8_t code : {dhcp::opt::tftp_server_name, dhcp::opt::bootfile_name, std::uint8_t(43)}) {
        if (msg.find(code)) {
            msg.remove(code);
            changed = true;
        }
    }
    if (msg.is_pxe_client()) {
        msg.remove(dhcp::opt::vendor_class);
        changed = true;
    }
    return changed;
}

dns::Answer Gateway::answer_dns(const dns::Query& q) const {
    dns::Answer a;
    a.id = q.id;
    a.recursion_desired = q.recursion_desired;
    a.authoritative = true;
    a.name = q.name;
    a.qtype = q.qtype;
    a.qclass = q.qclass;
    if (q.qtype != dns::type_a || q.qclass != dns::class_in) {
        a.rcode = dns::Rcode::NotImplemented;
        return a;
    }
    a.records.push_back({q.name, cfg_.dns_ttl_s, cfg_.static_ip});
    return a;
}

namespace {

using namespace sdb::ipxe;

std::string portal_base(const GatewayConfig& cfg) {
    std::string base = "http://" + cfg.static_ip.to_string();
    if (cfg.ports.http != 80) base += ":" + std::to_string(cfg.ports.http);
    return base + "/portal";
}

Script menu_script(const GatewayConfig& cfg) {
    return Script{{
        Echo{"/dev/SDB boot gateway: no upstream connectivity"},
        MenuStart{"Connect the boot gateway"},
        MenuItem{"wifi", "Wi-Fi network"},
        MenuItem{"cellular", "Cellular modem"},
        MenuItem{"wired", "Wired uplink"},
        Choose{"conn"},
        Prompt{"ssid", "Wi-Fi SSID (blank for other links):", false},
        Prompt{"passphrase", "Wi-Fi password:", true},
        Chain{portal_base(cfg) + "/connect?kind=${conn}&ssid=${ssid}&passphrase=${passphrase}"},
    }};
}

Script form_script(const GatewayConfig& cfg, const std::string& kind, const std::string& error) {
    Script s;
    if (!error.empty()) s.statements.push_back(Echo{"Error: " + error});
    auto base = portal_base(cfg) + "/connect?kind=" + kind;
    if (kind == "wifi") {
        s.statements.push_back(Echo{"Wi-Fi setup"});
        s.statements.push_back(Prompt{"ssid", "SSID:", false});
        s.statements.push_back(Prompt{"passphrase", "Password:", true});
        s.statements.push_back(Chain{base + "&ssid=${ssid}&passphrase=${passphrase}"});
    } else if (kind == "cellular") {
        s.statements.push_back(Echo{"Cellular setup"});
        s.statements.push_back(Prompt{"apn", "APN:", false});
        s.statements.push_back(Prompt{"cell_user", "Username (optional):", false});
        s.statements.push_back(Prompt{"cell_pass", "Password (optional):", true});
        s.statements.push_back(Chain{base + "&apn=${apn}&username=${cell_user}&password=${cell_pass}"});
    } else {
        s.statements.push_back(Chain{base});
    }
    return s;
}

std::string field(const std::map<std::string, std::string>& f, const char* key) {
    auto it = f.find(key);
    return it == f.end() ? std::string{} : it->second;
}

}  // namespace

PortalResult Gateway::portal_request(const std::string& path,
                                     const std::map<std::string, std::string>& fields,
                                     std::int64_t now_ms) {
    if (path == "/portal/form") {
        auto kind = field(fields, "kind");
        if (kind != "wifi" && kind != "cellular" && kind != "wired")
            return {render_script(menu_script(cfg_)), std::nullopt};
        return {render_script(form_script(cfg_, kind, {})), std::nullopt};
    }
    if (path == "/portal/connect") {
        auto kind = field(fields, "kind");
        ConnectivityProfile profile;
        if (kind == "wifi") {
            if (field(fields, "ssid").empty())
                return {render_script(form_script(cfg_, kind, "SSID is required")), std::nullopt};
            auto pass = fields.contains("passphrase") ? field(fields, "passphrase") : field(fields, "pass");
            profile = ConnectivityProfile::wifi(field(fields, "ssid"), pass);
        } else if (kind == "cellular") {
            // Arriving from the top-level menu there is no apn field yet.
            if (!fields.contains("apn")) return {render_script(form_script(cfg_, kind, {})), std::nullopt};
            if (field(fields, "apn").empty())
                return {render_script(form_script(cfg_, kind, "APN is required")), std::nullopt};
            profile = ConnectivityProfile::cellular(field(fields, "apn"), field(fields, "username"),
                                                    field(fields, "password"));
        } else if (kind == "wired") {
            profile = ConnectivityProfile::wired();
        } else {
            return {render_script(menu_script(cfg_)), std::nullopt};
        }
        profile.status = LinkStatus::Connecting;
        std::string target = kind == "wifi" ? "Wi-Fi network " + profile.ssid
                             : kind == "cellular" ? "cellular APN " + profile.apn
                                                  : "wired uplink";
        {
            std::lock_guard lock(mu_);
            profile_ = profile;
            log(now_ms, "PortalSubmit", target);
        }
        Script s{{Echo{"Connecting to " + target},
                  Echo{"Network boot restarts once the uplink is up"}}};
        return {render_script(s), profile};
    }
    return {render_script(menu_script(cfg_)), std::nullopt};
}

http::Response Gateway::handle_http(const http::Request& req, std::int64_t now_ms,
                                    std::optional<ConnectivityProfile>* attach_request) {
    if (req.method != "GET" && req.method != "POST")
        return http::Response::text(405, "method not allowed\n");
    auto result = portal_request(req.path(), req.fields(), now_ms);
    if (attach_request) *attach_request = result.attach_request;
    return http::Response::text(200, std::move(result.script), std::string(ipxe::media_type));
}

LinkStatus Gateway::attach_upstream(ConnectivityProfile profile, UpstreamLink& link,
                                    std::int64_t now_ms) {
    auto result = link.attach(profile);
    std::lock_guard lock(mu_);
    mode_ = GatewayMode{};
    if (result == AttachResult::Connected) {
        profile.status = LinkStatus::Connected;
        profile.failure.clear();
        upstream_connected_ = true;
    } else {
        profile.status = LinkStatus::Failed;
        profile.failure = to_string(result);
        upstream_connected_ = false;
    }
    log(now_ms, "Attach", std::string(to_string(profile.kind)) + ": " + to_string(result));
    profile_ = profile;
    return profile.status;
}

void Gateway::record_probe_result(std::optional<Ipv4Address> upstream_server, std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    if (upstream_server && upstream_connected_) {
        mode_ = GatewayMode{ModeKind::Proxy, upstream_server};
        log(now_ms, "Mode", "Proxy via " + upstream_server->to_string());
    } else {
        mode_ = GatewayMode{};
        log(now_ms, "Mode", "Standalone");
    }
}

std::optional<Bytes> Gateway::handle_dhcp_bytes(const Bytes& raw, std::int64_t now_ms) {
    try {
        auto reply = handle_dhcp(dhcp::decode(raw), now_ms);
        if (!reply) return std::nullopt;
        return dhcp::encode(*reply);
    } catch (const codec::DecodeError&) {
        return std::nullopt;
    }
}

std::optional<Bytes> Gateway::handle_dns_bytes(const Bytes& raw) const {
    try {
        return dns::encode_answer(answer_dns(dns::decode_query(raw)));
    } catch (const codec::DecodeError&) {
        return std::nullopt;
    } catch (const codec::EncodeError&) {
        return std::nullopt;
    }
}

}  // namespace sdb::gateway
