#include "sdb/sim/nat.hpp"

#include <stdexcept>

namespace sdb::sim {

NatTable::NatTable(Ipv4Address external_ip, Micros idle_timeout, std::uint16_t first_port,
                   std::uint16_t last_port)
    : external_ip_(external_ip), idle_(idle_timeout), first_(first_port), last_(last_port), next_(first_port) {
    if (first_port > last_port) throw std::invalid_argument("empty NAT port range");
}

void NatTable::expire(Micros now) {
    for (auto it = by_flow_.begin(); it != by_flow_.end();) {
        if (now - it->second.last_used >= idle_) {
            by_external_.erase({it->second.proto, it->second.external_port});
            it = by_flow_.erase(it);
        } else {
            ++it;
        }
    }
}

std::optional<Packet> NatTable::outbound(const Packet& pkt, Micros now) {
    expire(now);
    FlowKey key{pkt.proto, pkt.src, pkt.dst};
    auto it = by_flow_.find(key);
    if (it == by_flow_.end()) {
        std::uint32_t span = std::uint32_t(last_) - first_ + 1;
        std::optional<std::uint16_t> port;
        for (std::uint32_t i = 0; i < span; ++i) {
            std::uint16_t candidate = std::uint16_t(first_ + (std::uint32_t(next_ - first_) + i) % span);
            if (!by_external_.count({pkt.proto, candidate})) {
                port = candidate;
                break;
            }
        }
        if (!port) return std::nullopt;
        next_ = std::uint16_t(first_ + (std::uint32_t(*port - first_) + 1) % span);
        it = by_flow_.emplace(key, Mapping{pkt.proto, pkt.src, pkt.dst, *port, now}).first;
        by_external_[{pkt.proto, *port}] = key;
    }
    it->second.last_used = now;
    Packet out = pkt;
    out.src = Endpoint{external_ip_, it->second.external_port};
    return out;
}

std::optional<Packet> NatTable::inbound(const Packet& pkt, Micros now) {
    expire(now);
    if (pkt.dst.ip != external_ip_) return std::nullopt;
    auto ext = by_external_.find({pkt.proto, pkt.dst.port});
    if (ext == by_external_.end()) return std::nullopt;
    auto& m = by_flow_.at(ext->second);
    if (m.remote != pkt.src) return std::nullopt;
    m.last_used = now;
    Packet in = pkt;
    in.dst = m.inside;
    return in;
}

const NatTable::Mapping* NatTable::find_external(Proto proto, std::uint16_t port) const {
    auto ext = by_external_.find({proto, port});
    return ext == by_external_.end() ? nullptr : &by_flow_.at(ext->second);
}

}  // namespace sdb::sim
