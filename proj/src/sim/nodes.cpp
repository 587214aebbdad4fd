#include "sdb/sim/nodes.hpp"

#include "sdb/codec/error.hpp"
#include "sdb/http/message.hpp"

namespace sdb::sim {

Packet make_packet(Proto proto, MacAddress dst_mac, Endpoint src, Endpoint dst, Bytes payload) {
    Packet p;
    p.proto = proto;
    p.dst_mac = dst_mac;
    p.src = src;
    p.dst = dst;
    p.payload = std::move(payload);
    return p;
}

namespace {

/// Broadcast unless the client asked for unicast and has an address to receive it on.
Packet dhcp_reply_packet(const dhcp::Message& reply, const Packet& req, Ipv4Address server_ip) {
    bool bcast = (reply.flags & dhcp::flag_broadcast) || reply.your_ip.is_unspecified();
    Endpoint dst{bcast ? Ipv4Address::broadcast() : reply.your_ip, dhcp::client_port};
    return make_packet(Proto::Udp, bcast ? broadcast_mac : req.src_mac, {server_ip, dhcp::server_port}, dst,
                       dhcp::encode(reply));
}

Bytes to_payload(const std::string& s) { return Bytes(s.begin(), s.end()); }

std::string_view as_text(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

Packet http_reply(const Packet& req, const http::Response& resp) {
    return make_packet(Proto::Stream, req.src_mac, req.dst, req.src, to_payload(http::serialize(resp)));
}

}  // namespace

// ---------------------------------------------------------------- TftpService

TftpService::TftpService(Network& net, Port& port, Ipv4Address ip, const gateway::GatewayConfig& cfg,
                         Micros timeout, int max_resends)
    : net_(net), port_(port), ip_(ip), cfg_(cfg), timeout_(timeout), max_resends_(max_resends) {}

void TftpService::send(std::uint16_t tid, const Session& s, const tftp::Packet& p) {
    net_.send(port_, make_packet(Proto::Udp, s.client_mac, {ip_, tid}, s.client, tftp::encode(p)));
}

void TftpService::arm(std::uint16_t tid) {
    auto& s = sessions_.at(tid);
    net_.clock().cancel(s.timer);
    s.timer = net_.clock().schedule_after(timeout_, [this, tid] {
        auto it = sessions_.find(tid);
        if (it == sessions_.end()) return;
        if (++it->second.resends > max_resends_) {
            sessions_.erase(it);
            return;
        }
        send(tid, it->second, it->second.transfer.retransmit());
        arm(tid);
    });
}

bool TftpService::handle(const Packet& pkt) {
    if (pkt.proto != Proto::Udp || pkt.dst.ip != ip_) return false;
    if (pkt.dst.port == cfg_.ports.tftp) {
        tftp::Packet first;
        try {
            first = tftp::decode(pkt.payload);
        } catch (const codec::DecodeError&) {
            return true;
        }
        auto opened = gateway::TftpTransfer::open(first, cfg_);
        std::uint16_t tid = next_tid_;
        next_tid_ = next_tid_ == 59999 ? 40000 : std::uint16_t(next_tid_ + 1);
        if (!opened.transfer) {
            net_.send(port_, make_packet(Proto::Udp, pkt.src_mac, {ip_, tid}, pkt.src, tftp::encode(opened.reply)));
            return true;
        }
        if (auto old = sessions_.find(tid); old != sessions_.end()) {
            net_.clock().cancel(old->second.timer);
            sessions_.erase(old);
        }
        auto it = sessions_.emplace(tid, Session{std::move(*opened.transfer), pkt.src, pkt.src_mac}).first;
        send(tid, it->second, opened.reply);
        arm(tid);
        return true;
    }
    auto it = sessions_.find(pkt.dst.port);
    if (it == sessions_.end()) return false;
    auto& s = it->second;
    if (pkt.src != s.client) return true;  // someone else on our transfer port
    tftp::Packet p;
    try {
        p = tftp::decode(pkt.payload);
    } catch (const codec::DecodeError&) {
        return true;
    }
    if (std::holds_alternative<tftp::Error>(p)) {
        net_.clock().cancel(s.timer);
        sessions_.erase(it);
        return true;
    }
    auto* ack = std::get_if<tftp::Ack>(&p);
    if (!ack) return true;
    std::uint16_t tid = it->first;
    auto next = s.transfer.on_ack(ack->block);
    if (s.transfer.done()) {
        net_.clock().cancel(s.timer);
        sessions_.erase(it);
        ++completed_;
        return true;
    }
    if (next) {
        s.resends = 0;
        send(tid, s, *next);
        arm(tid);
    }
    return true;
}

// ---------------------------------------------------------------- GatewayNode

class GatewayNode::Link : public gateway::UpstreamLink {
public:
    explicit Link(GatewayNode& node) : node_(node) {}

    gateway::AttachResult attach(const gateway::ConnectivityProfile& p) override {
        auto& net = node_.net();
        Port& up = node_.upstream();
        net.detach(up);
        Segment* target = nullptr;
        AttachCredentials creds;
        switch (p.kind) {
            case gateway::LinkKind::Wifi:
                for (auto* s : keyed)
                    if (s->kind() == SegmentKind::WifiKeyed && s->params().ssid == p.ssid) target = s;
                creds.ssid = p.ssid;
                creds.passphrase = p.passphrase;
                break;
            case gateway::LinkKind::Cellular:
                for (auto* s : keyed)
                    if (s->kind() == SegmentKind::CellularKeyed && s->params().apn == p.apn) target = s;
                creds.apn = p.apn;
                break;
            case gateway::LinkKind::Wired: target = wired; break;
        }
        if (!target) return gateway::AttachResult::NoSuchNetwork;
        return net.attach(up, *target, creds) == AttachStatus::Ok ? gateway::AttachResult::Connected
                                                                 : gateway::AttachResult::AuthFailure;
    }

    std::vector<Segment*> keyed;
    Segment* wired = nullptr;

private:
    GatewayNode& node_;
};

GatewayNode::GatewayNode(Network& net, std::string name, gateway::GatewayConfig cfg)
    : BridgeNode(net, std::move(name)),
      gw_(std::move(cfg)),
      tftp_(net, net.add_port(*this, this->name() + ".int", net.next_mac(), gw_.address()), gw_.address(),
            gw_.config()),
      link_(std::make_unique<Link>(*this)) {
    set_ports(&tftp_.port(), &net.add_port(*this, this->name() + ".up", net.next_mac()));
}

GatewayNode::~GatewayNode() = default;

void GatewayNode::set_upstream_candidates(std::vector<Segment*> keyed, Segment* wired) {
    link_->keyed = std::move(keyed);
    link_->wired = wired;
}

gateway::LinkStatus GatewayNode::connect(const gateway::ConnectivityProfile& profile) {
    auto st = gw_.attach_upstream(profile, *link_, now_ms());
    if (st == gateway::LinkStatus::Connected) start_probe();
    return st;
}

bool GatewayNode::forwarding() const {
    return b_->segment && gw_.mode().kind == gateway::ModeKind::Proxy;
}

void GatewayNode::start_probe() {
    if (!upstream().segment) return;
    net().clock().cancel(probe_timer_);
    auto xid = std::uint32_t(net().rng().next());
    probe_.emplace(gw_.config(), upstream().mac, xid);
    auto discover = probe_->start();
    net().send(upstream(), make_packet(Proto::Udp, broadcast_mac, {Ipv4Address::any(), dhcp::client_port},
                                       {Ipv4Address::broadcast(), dhcp::server_port}, std::move(discover)));
    probe_timer_ = net().clock().schedule_after(ms(gw_.config().probe_timeout_ms), [this] { probe_timeout(); });
}

void GatewayNode::probe_timeout() {
    if (!probe_) return;
    if (auto again = probe_->on_timeout()) {
        net().send(upstream(), make_packet(Proto::Udp, broadcast_mac, {Ipv4Address::any(), dhcp::client_port},
                                           {Ipv4Address::broadcast(), dhcp::server_port}, std::move(*again)));
        probe_timer_ = net().clock().schedule_after(ms(gw_.config().probe_timeout_ms), [this] { probe_timeout(); });
        return;
    }
    gw_.record_probe_result(std::nullopt, now_ms());
    probe_.reset();
}

bool GatewayNode::local(Port& in, const Packet& pkt) {
    if (&in == &internal()) {
        if (pkt.dst_mac == in.mac || (!pkt.is_broadcast() && pkt.dst.ip == gw_.address())) {
            serve(pkt);
            return true;
        }
        if (pkt.is_broadcast() && pkt.proto == Proto::Udp && pkt.dst.port == gw_.config().ports.dhcp) serve(pkt);
        return false;
    }
    // Upstream side: only the probe listens here.
    bool to_us = pkt.dst_mac == in.mac;
    if (probe_ && (to_us || pkt.is_broadcast()) && pkt.proto == Proto::Udp && pkt.dst.port == dhcp::client_port) {
        if (probe_->on_packet(pkt.payload)) {
            net().clock().cancel(probe_timer_);
            auto result = probe_->result();
            probe_.reset();
            gw_.record_probe_result(result.upstream_server, now_ms());
        }
    }
    return to_us;
}

bool GatewayNode::filter(Port& in, Packet& pkt) {
    if (&in != &upstream() || pkt.proto != Proto::Udp || pkt.src.port != dhcp::server_port) return true;
    if (!sanitize_) return true;
    dhcp::Message msg;
    try {
        msg = dhcp::decode(pkt.payload);
    } catch (const codec::DecodeError&) {
        return false;  // cannot vouch for it
    }
    if (gateway::Gateway::sanitize_upstream_reply(msg)) {
        ++sanitized_;
        pkt.payload = dhcp::encode(msg);
    }
    return true;
}

void GatewayNode::serve(const Packet& pkt) {
    const auto& ports = gw_.config().ports;
    Port& in = internal();
    if (pkt.proto == Proto::Stream) {
        if (pkt.dst.port != ports.http) return;
        auto req = http::parse_request(as_text(pkt.payload));
        http::Response resp = req ? http::Response{} : http::Response::text(400, "bad request\n");
        std::optional<gateway::ConnectivityProfile> attach;
        if (req) resp = gw_.handle_http(*req, now_ms(), &attach);
        net().send(in, http_reply(pkt, resp));
        if (attach) connect(*attach);
        return;
    }
    if (pkt.dst.port == ports.dhcp) {
        if (auto reply = gw_.handle_dhcp_bytes(pkt.payload, now_ms())) {
            auto msg = dhcp::decode(*reply);
            net().send(in, dhcp_reply_packet(msg, pkt, gw_.address()));
        }
        return;
    }
    if (pkt.dst.port == ports.dns) {
        if (gw_.mode().kind != gateway::ModeKind::Standalone) return;
        if (auto reply = gw_.handle_dns_bytes(pkt.payload))
            net().send(in, make_packet(Proto::Udp, pkt.src_mac, pkt.dst, pkt.src, std::move(*reply)));
        return;
    }
    tftp_.handle(pkt);
}

// ---------------------------------------------------------------- RouterNode

RouterNode::RouterNode(Network& net, std::string name, RouterConfig cfg)
    : Node(net, std::move(name)),
      cfg_(std::move(cfg)),
      lan_(&net.add_port(*this, this->name() + ".lan", net.next_mac(), cfg_.lan_ip)),
      wan_(&net.add_port(*this, this->name() + ".wan", net.next_mac(), cfg_.wan_ip)),
      nat_(cfg_.wan_ip, cfg_.nat_idle),
      leases_(cfg_.pool_first, cfg_.pool_last, cfg_.lan_ip, std::int64_t(cfg_.lease_ttl_s) * 1000) {}

void RouterNode::on_receive(Port& port, const Packet& pkt) {
    if (&port == lan_) {
        if (pkt.proto == Proto::Udp && pkt.dst.port == dhcp::server_port) {
            if (cfg_.dhcp_enabled) serve_dhcp(pkt);
            return;
        }
        if (pkt.is_broadcast() || pkt.dst_mac != lan_->mac) return;
        if (pkt.dst.ip == cfg_.lan_ip) {
            if (pkt.proto == Proto::Udp && pkt.dst.port == dns::server_port) serve_dns(pkt);
            return;
        }
        if (cfg_.lan_subnet.contains(pkt.dst.ip)) return;
        auto out = nat_.outbound(pkt, net().now());
        if (!out) return;
        auto mac = net().resolve(*wan_, out->dst.ip);
        if (!mac) return;
        out->src_mac = wan_->mac;
        out->dst_mac = *mac;
        net().send(*wan_, std::move(*out));
        return;
    }
    if (&port == wan_ && pkt.dst_mac == wan_->mac) {
        auto in = nat_.inbound(pkt, net().now());
        if (!in) return;
        auto mac = net().resolve(*lan_, in->dst.ip);
        if (!mac) return;
        in->src_mac = lan_->mac;
        in->dst_mac = *mac;
        net().send(*lan_, std::move(*in));
    }
}

void RouterNode::serve_dhcp(const Packet& pkt) {
    dhcp::Message req;
    try {
        req = dhcp::decode(pkt.payload);
    } catch (const codec::DecodeError&) {
        return;
    }
    auto type = req.message_type();
    if (req.op != dhcp::Op::BootRequest || !type) return;
    std::int64_t now = net().now() / 1000;
    auto reply_with = [&](dhcp::MessageType t, Ipv4Address addr) {
        auto r = dhcp::make_message(dhcp::Op::BootReply, t, req.transaction_id, req.client_mac);
        r.flags = req.flags;
        r.your_ip = addr;
        r.set(dhcp::opt::server_id, cfg_.lan_ip);
        if (t != dhcp::MessageType::Nak) {
            Bytes lease(4);
            for (int i = 0; i < 4; ++i) lease[i] = std::uint8_t(cfg_.lease_ttl_s >> (24 - 8 * i));
            r.set(dhcp::opt::lease_time, lease);
            r.set(dhcp::opt::subnet_mask, cfg_.lan_subnet.netmask());
            r.set(dhcp::opt::router, cfg_.lan_ip);
            r.set(dhcp::opt::dns_servers, cfg_.lan_ip);
        }
        net().send(*lan_, dhcp_reply_packet(r, pkt, cfg_.lan_ip));
    };
    switch (*type) {
        case dhcp::MessageType::Discover:
            if (auto l = leases_.offer(req.client_mac, now)) reply_with(dhcp::MessageType::Offer, l->address);
            break;
        case dhcp::MessageType::Request: {
            auto sid = req.ip_option(dhcp::opt::server_id);
            if (sid && *sid != cfg_.lan_ip) {
                leases_.release(req.client_mac);
                break;
            }
            auto want = req.ip_option(dhcp::opt::requested_ip).value_or(req.client_ip);
            if (auto l = leases_.confirm(req.client_mac, want, now))
                reply_with(dhcp::MessageType::Ack, l->address);
            else
                reply_with(dhcp::MessageType::Nak, Ipv4Address::any());
            break;
        }
        case dhcp::MessageType::Release: leases_.release(req.client_mac); break;
        default: break;
    }
}

void RouterNode::serve_dns(const Packet& pkt) {
    dns::Query q;
    try {
        q = dns::decode_query(pkt.payload);
    } catch (const codec::DecodeError&) {
        return;
    }
    dns::Answer a;
    a.id = q.id;
    a.recursion_desired = q.recursion_desired;
    a.name = q.name;
    a.qtype = q.qtype;
    a.qclass = q.qclass;
    auto it = cfg_.zone.find(q.name);
    if (q.qclass != dns::class_in) {
        a.rcode = dns::Rcode::NotImplemented;
    } else if (it == cfg_.zone.end()) {
        a.rcode = dns::Rcode::NameError;
    } else if (q.qtype == dns::type_a) {
        a.records.push_back({q.name, 300, it->second});
    }
    net().send(*lan_, make_packet(Proto::Udp, pkt.src_mac, pkt.dst, pkt.src, dns::encode_answer(a)));
}

// ---------------------------------------------------------------- CloudNode

CloudNode::CloudNode(Network& net, std::string name, Ipv4Address ip, cloud::ControlPlaneConfig cfg,
                     std::string admin_token)
    : Node(net, std::move(name)),
      port_(&net.add_port(*this, this->name() + ".eth0", net.next_mac(), ip)),
      cfg_(std::move(cfg)),
      token_(std::move(admin_token)) {
    start();
}

void CloudNode::stop() {
    svc_.reset();
    cp_.reset();
}

void CloudNode::start() {
    stop();
    cp_ = std::make_unique<cloud::ControlPlane>(cfg_);
    svc_ = std::make_unique<cloud::CloudService>(*cp_, token_);
}

void CloudNode::on_receive(Port& port, const Packet& pkt) {
    if (!svc_ || pkt.proto != Proto::Stream || pkt.dst.ip != ip() || pkt.dst.port != 80) return;
    ++requests_;
    auto req = http::parse_request(as_text(pkt.payload));
    auto resp = req ? svc_->handle(*req, pkt.src.ip.to_string()) : http::Response::text(400, "bad request\n");
    net().send(port, http_reply(pkt, resp));
}

// ---------------------------------------------------------------- RogueDhcpNode

namespace {
gateway::GatewayConfig rogue_config(Ipv4Address ip, Bytes payload) {
    gateway::GatewayConfig c;
    c.static_ip = ip;
    c.boot_filename = "evil.efi";
    c.bootloader_blob = std::move(payload);
    return c;
}
}  // namespace

RogueDhcpNode::RogueDhcpNode(Network& net, std::string name, Ipv4Address ip, Bytes payload, bool offer_address)
    : Node(net, std::move(name)),
      port_(&net.add_port(*this, this->name() + ".eth0", net.next_mac(), ip)),
      cfg_(rogue_config(ip, std::move(payload))),
      tftp_(net, *port_, ip, cfg_),
      offer_address_(offer_address) {}

void RogueDhcpNode::on_receive(Port& port, const Packet& pkt) {
    if (pkt.proto != Proto::Udp) return;
    if (pkt.dst.port == dhcp::server_port) {
        dhcp::Message req;
        try {
            req = dhcp::decode(pkt.payload);
        } catch (const codec::DecodeError&) {
            return;
        }
        if (req.message_type() != dhcp::MessageType::Discover) return;
        auto r = dhcp::make_message(dhcp::Op::BootReply, dhcp::MessageType::Offer, req.transaction_id,
                                    req.client_mac);
        r.flags = req.flags;
        auto ip = *port.ip;
        if (offer_address_) {
            r.your_ip = Ipv4Address((ip.value() & 0xFFFFFF00u) | next_host_);
            next_host_ = next_host_ >= 250 ? 240 : next_host_ + 1;
            r.set(dhcp::opt::subnet_mask, Ipv4Address(255, 255, 255, 0));
            r.set(dhcp::opt::router, ip);
            r.set(dhcp::opt::dns_servers, ip);
        }
        r.server_ip = ip;
        r.boot_file = cfg_.boot_filename;
        r.set(dhcp::opt::server_id, ip);
        r.set(dhcp::opt::vendor_class, std::string(dhcp::pxe_vendor_prefix));
        r.set(dhcp::opt::tftp_server_name, ip.to_string());
        r.set(dhcp::opt::bootfile_name, cfg_.boot_filename);
        ++offers_;
        net().send(port, dhcp_reply_packet(r, pkt, ip));
        return;
    }
    tftp_.handle(pkt);
}

}  // namespace sdb::sim
