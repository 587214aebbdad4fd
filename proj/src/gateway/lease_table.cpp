#include "sdb/gateway/lease_table.hpp"

namespace sdb::gateway {

LeaseTable::LeaseTable(Ipv4Address first, Ipv4Address last, Ipv4Address reserved, std::int64_t ttl_ms)
    : first_(first), last_(last), reserved_(reserved), ttl_ms_(ttl_ms) {}

bool LeaseTable::taken_by_other(Ipv4Address a, MacAddress mac, std::int64_t now_ms) const {
    for (const auto& [m, lease] : by_mac_)
        if (m != mac && lease.address == a && lease.expires_ms > now_ms) return true;
    return false;
}

std::optional<Lease> LeaseTable::offer(MacAddress mac, std::int64_t now_ms) {
    auto it = by_mac_.find(mac);
    if (it != by_mac_.end() && it->second.expires_ms > now_ms &&
        !taken_by_other(it->second.address, mac, now_ms)) {
        it->second.expires_ms = now_ms + ttl_ms_;
        return it->second;
    }
    for (std::uint64_t v = first_.value(); v <= last_.value(); ++v) {
        Ipv4Address a{std::uint32_t(v)};
        if (a == reserved_ || taken_by_other(a, mac, now_ms)) continue;
        Lease lease{a, now_ms + ttl_ms_};
        by_mac_[mac] = lease;
        return lease;
    }
    return std::nullopt;
}

std::optional<Lease> LeaseTable::confirm(MacAddress mac, Ipv4Address requested, std::int64_t now_ms) {
    if (!in_pool(requested) || taken_by_other(requested, mac, now_ms)) return std::nullopt;
    Lease lease{requested, now_ms + ttl_ms_};
    by_mac_[mac] = lease;
    return lease;
}

void LeaseTable::release(MacAddress mac) { by_mac_.erase(mac); }

std::optional<Lease> LeaseTable::find(MacAddress mac) const {
    auto it = by_mac_.find(mac);
    if (it == by_mac_.end()) return std::nullopt;
    return it->second;
}

}  // namespace sdb::gateway
