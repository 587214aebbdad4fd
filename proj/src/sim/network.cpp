#include "sdb/sim/network.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include <nlohmann/json.hpp>

#include "sdb/codec/dhcp.hpp"
#include "sdb/codec/dns.hpp"
#include "sdb/codec/error.hpp"
#include "sdb/codec/tftp.hpp"

namespace sdb::sim {

const char* to_string(Proto p) { return p == Proto::Udp ? "udp" : "stream"; }

const char* to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::Broadcast: return "broadcast";
        case SegmentKind::PointToPoint: return "point-to-point";
        case SegmentKind::WifiKeyed: return "wifi";
        case SegmentKind::CellularKeyed: return "cellular";
    }
    return "?";
}

const char* to_string(AttachStatus s) {
    switch (s) {
        case AttachStatus::Ok: return "Ok";
        case AttachStatus::AuthFailure: return "AuthFailure";
        case AttachStatus::SegmentFull: return "SegmentFull";
        case AttachStatus::AlreadyAttached: return "AlreadyAttached";
    }
    return "?";
}

std::string Endpoint::to_string() const { return ip.to_string() + ":" + std::to_string(port); }

std::string summarize(const Packet& pkt) {
    std::string head = pkt.src.to_string() + " > " + pkt.dst.to_string() + " ";
    if (pkt.proto == Proto::Stream) {
        std::string_view body(reinterpret_cast<const char*>(pkt.payload.data()), pkt.payload.size());
        auto eol = body.find("\r\n");
        return head + "stream " + std::string(body.substr(0, std::min(eol, body.size()))) + " (" +
               std::to_string(pkt.payload.size()) + " bytes)";
    }
    try {
        auto sp = pkt.src.port, dp = pkt.dst.port;
        if (sp == dhcp::server_port || dp == dhcp::server_port || sp == dhcp::client_port ||
            dp == dhcp::client_port) {
            auto m = dhcp::decode(pkt.payload);
            auto t = m.message_type();
            char xid[16];
            std::snprintf(xid, sizeof xid, "%08x", m.transaction_id);
            std::string s = head + "dhcp " + (t ? dhcp::to_string(*t) : "BOOTP") + " xid=" + xid;
            if (!m.your_ip.is_unspecified()) s += " yiaddr=" + m.your_ip.to_string();
            if (!m.boot_file.empty()) s += " file=" + m.boot_file;
            return s;
        }
        if (dp == dns::server_port) return head + "dns query " + dns::decode_query(pkt.payload).name;
        if (sp == dns::server_port) {
            auto a = dns::decode_answer(pkt.payload);
            std::string s = head + "dns answer " + a.name;
            for (const auto& r : a.records) s += " " + r.address.to_string();
            return s;
        }
        if (dp == tftp::server_port || pkt.payload.size() >= 4) {
            if (dp == tftp::server_port || (pkt.payload[0] == 0 && pkt.payload[1] >= 1 && pkt.payload[1] <= 6))
                return head + "tftp " + tftp::summarize(tftp::decode(pkt.payload));
        }
    } catch (const codec::DecodeError&) {
    }
    return head + "udp " + std::to_string(pkt.payload.size()) + " bytes";
}

AttachStatus Segment::admit(const AttachCredentials& creds) const {
    switch (kind_) {
        case SegmentKind::WifiKeyed:
            if (creds.ssid != params_.ssid || creds.passphrase != params_.passphrase)
                return AttachStatus::AuthFailure;
            break;
        case SegmentKind::CellularKeyed:
            if (creds.apn != params_.apn) return AttachStatus::AuthFailure;
            break;
        case SegmentKind::PointToPoint:
            if (ports_.size() >= 2) return AttachStatus::SegmentFull;
            break;
        case SegmentKind::Broadcast: break;
    }
    return AttachStatus::Ok;
}

Segment& Network::add_segment(const std::string& name, SegmentKind kind, SegmentParams params) {
    if (find_segment(name)) throw std::invalid_argument("duplicate segment " + name);
    segments_.push_back(std::make_unique<Segment>(name, kind, std::move(params)));
    return *segments_.back();
}

Segment* Network::find_segment(const std::string& name) {
    for (auto& s : segments_)
        if (s->name() == name) return s.get();
    return nullptr;
}

Port& Network::add_port(Node& node, const std::string& name, MacAddress mac, std::optional<Ipv4Address> ip) {
    auto p = std::make_unique<Port>();
    p->name = name;
    p->node = &node;
    p->mac = mac;
    p->ip = ip;
    ports_.push_back(std::move(p));
    return *ports_.back();
}

MacAddress Network::next_mac() {
    std::uint32_t n = ++mac_counter_;
    return MacAddress({0x02, 0x5d, 0xb0, std::uint8_t(n >> 16), std::uint8_t(n >> 8), std::uint8_t(n)});
}

AttachStatus Network::attach(Port& port, Segment& seg, const AttachCredentials& creds) {
    if (port.segment) return AttachStatus::AlreadyAttached;
    auto st = seg.admit(creds);
    if (st != AttachStatus::Ok) return st;
    seg.ports_.push_back(&port);
    port.segment = &seg;
    return st;
}

void Network::detach(Port& port) {
    if (!port.segment) return;
    auto& v = port.segment->ports_;
    v.erase(std::remove(v.begin(), v.end(), &port), v.end());
    port.segment = nullptr;
}

Port* Network::find_port_for(const Segment& seg, const MacAddress& mac, const Port* exclude) const {
    for (Port* p : seg.ports())
        if (p != exclude && p->mac == mac) return p;
    for (Port* p : seg.ports()) {
        if (p == exclude) continue;
        Port* peer = p->node->bridge_peer(*p);
        if (peer && peer->segment && reaches(*peer->segment, mac, peer)) return p;
    }
    return nullptr;
}

bool Network::reaches(const Segment& start, const MacAddress& mac, const Port* exclude) const {
    std::set<const Segment*> seen{&start};
    std::deque<std::pair<const Segment*, const Port*>> todo{{&start, exclude}};
    while (!todo.empty()) {
        auto [seg, ex] = todo.front();
        todo.pop_front();
        for (Port* p : seg->ports()) {
            if (p == ex) continue;
            if (p->mac == mac) return true;
            Port* peer = p->node->bridge_peer(*p);
            if (peer && peer->segment && seen.insert(peer->segment).second) todo.emplace_back(peer->segment, peer);
        }
    }
    return false;
}

std::optional<MacAddress> Network::resolve(const Port& from, Ipv4Address ip) const {
    if (!from.segment) return std::nullopt;
    std::set<const Segment*> seen{from.segment};
    std::deque<std::pair<const Segment*, const Port*>> todo{{from.segment, &from}};
    while (!todo.empty()) {
        auto [seg, ex] = todo.front();
        todo.pop_front();
        for (Port* p : seg->ports())
            if (p != ex && p->ip == ip) return p->mac;
        for (Port* p : seg->ports()) {
            if (p == ex) continue;
            Port* peer = p->node->bridge_peer(*p);
            if (peer && peer->segment && seen.insert(peer->segment).second) todo.emplace_back(peer->segment, peer);
        }
    }
    return std::nullopt;
}

SendStatus Network::send(Port& from, Packet pkt) {
    if (!from.segment) return SendStatus::Detached;
    if (pkt.src_mac == MacAddress{}) pkt.src_mac = from.mac;
    Segment& seg = *from.segment;
    const auto& prm = seg.params();

    Micros start = std::max(clock_.now(), from.busy_until);
    Micros serialization = Micros((pkt.payload.size() + 42) * 8 * 1'000'000 / prm.bandwidth_bps);
    from.busy_until = start + serialization;
    Micros base = start + serialization + prm.latency;

    std::vector<Port*> targets;
    if (pkt.is_broadcast()) {
        for (Port* p : seg.ports())
            if (p != &from) targets.push_back(p);
    } else if (Port* p = find_port_for(seg, pkt.dst_mac, &from)) {
        targets.push_back(p);
    } else {
        ++dropped_;
        if (capture_on_)
            capture_.push_back(CaptureRecord{clock_.now(), clock_.now(), seg.name(), from.name, "", true, pkt.proto,
                                             pkt.payload.size(), summarize(pkt)});
        return SendStatus::Ok;
    }

    auto shared = std::make_shared<const Packet>(std::move(pkt));
    for (Port* to : targets) {
        bool drop = shared->proto == Proto::Udp && rng_.chance(prm.loss);
        Micros at = base;
        if (prm.jitter > 0 && shared->proto == Proto::Udp) at += Micros(rng_.below(std::uint64_t(prm.jitter) + 1));
        if (capture_on_) {
            capture_.push_back(CaptureRecord{clock_.now(), drop ? clock_.now() : at, seg.name(), from.name,
                                             to->name, drop, shared->proto, shared->payload.size(),
                                             summarize(*shared)});
        }
        if (drop) {
            ++dropped_;
            continue;
        }
        Segment* via = &seg;
        clock_.schedule_at(at, [this, to, via, shared] {
            // A port that left the segment while the frame was in flight never sees it.
            if (to->segment != via) {
                ++dropped_;
                return;
            }
            ++delivered_;
            to->node->on_receive(*to, *shared);
        });
    }
    return SendStatus::Ok;
}

std::string Network::capture_jsonl() const {
    std::string out;
    for (const auto& r : capture_) {
        nlohmann::json j{{"sent_us", r.sent_at},  {"delivered_us", r.delivered_at}, {"segment", r.segment},
                         {"from", r.from},        {"to", r.to},                     {"dropped", r.dropped},
                         {"proto", to_string(r.proto)}, {"size", r.size},           {"summary", r.summary}};
        out += j.dump() + "\n";
    }
    return out;
}

void BridgeNode::on_receive(Port& port, const Packet& pkt) {
    if (local(port, pkt)) return;
    if (!forwarding()) return;
    Port* out = bridge_peer(port);
    if (!out || !out->segment) return;
    if (!pkt.is_broadcast() && !net().reaches(*out->segment, pkt.dst_mac, out)) return;
    Packet copy = pkt;
    if (!filter(port, copy)) return;
    net().send(*out, std::move(copy));
}

Port* BridgeNode::bridge_peer(const Port& p) const {
    if (!forwarding()) return nullptr;
    if (&p == a_) return b_;
    if (&p == b_) return a_;
    return nullptr;
}

}  // namespace sdb::sim
