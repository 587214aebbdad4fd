#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "sdb/net_types.hpp"

namespace sdb::gateway {

struct Lease {
    Ipv4Address address;
    std::int64_t expires_ms = 0;

    bool operator==(const Lease&) const = default;
};

/// MAC -> address bindings over a contiguous pool. Not synchronized; the gateway owns the
/// lock.
class LeaseTable {
public:
    LeaseTable(Ipv4Address first, Ipv4Address last, Ipv4Address reserved, std::int64_t ttl_ms);

    /// Prior unexpired binding for `mac`, else the lowest free address. nullopt when the
    /// pool is exhausted. The returned lease is recorded.
    std::optional<Lease> offer(MacAddress mac, std::int64_t now_ms);

    /// Confirms `requested` for `mac`: succeeds when it is the client's own binding or a free
    /// pool address. Refreshes the expiry.
    std::optional<Lease> confirm(MacAddress mac, Ipv4Address requested, std::int64_t now_ms);

    void release(MacAddress mac);

    std::optional<Lease> find(MacAddress mac) const;
    const std::map<MacAddress, Lease>& bindings() const { return by_mac_; }
    bool in_pool(Ipv4Address a) const {
        return a.value() >= first_.value() && a.value() <= last_.value() && a != reserved_;
    }

private:
    bool taken_by_other(Ipv4Address a, MacAddress mac, std::int64_t now_ms) const;

    Ipv4Address first_;
    Ipv4Address last_;
    Ipv4Address reserved_;
    std::int64_t ttl_ms_;
    std::map<MacAddress, Lease> by_mac_;
};

}  // namespace sdb::gateway
