#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdb/net_types.hpp"
#include "sdb/sim/clock.hpp"
#include "sdb/sim/rng.hpp"

namespace sdb::sim {

/// Udp datagrams are subject to loss. Stream messages model one reliable, in-order transfer of
/// a whole message (an HTTP request or response) and are never dropped.
enum class Proto { Udp, Stream };

const char* to_string(Proto p);

inline const MacAddress broadcast_mac{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};

struct Endpoint {
    Ipv4Address ip;
    std::uint16_t port = 0;

    std::string to_string() const;
    auto operator<=>(const Endpoint&) const = default;
};

struct Packet {
    Proto proto = Proto::Udp;
    MacAddress src_mac;
    MacAddress dst_mac;
    Endpoint src;
    Endpoint dst;
    Bytes payload;

    bool is_broadcast() const { return dst_mac == broadcast_mac; }
};

/// One-line description; decodes DHCP, DNS and TFTP (well-known ports) and HTTP start lines.
std::string summarize(const Packet& pkt);

enum class SegmentKind { Broadcast, PointToPoint, WifiKeyed, CellularKeyed };

const char* to_string(SegmentKind k);

struct SegmentParams {
    Micros latency = ms(1);
    Micros jitter = 0;              // uniform extra delay in [0, jitter]
    double loss = 0.0;              // per delivery, Udp only
    std::uint64_t bandwidth_bps = 1'000'000'000;
    // Keyed segments
    std::string ssid;
    std::string passphrase;
    std::string apn;
};

/// Credentials offered when attaching to a keyed segment.
struct AttachCredentials {
    std::string ssid;
    std::string passphrase;
    std::string apn;
};

enum class AttachStatus { Ok, AuthFailure, SegmentFull, AlreadyAttached };

const char* to_string(AttachStatus s);

class Node;
class Segment;

/// A node's interface. The optional address is what neighbours resolve; a port without one
/// still receives frames for its MAC and broadcasts.
struct Port {
    std::string name;
    Node* node = nullptr;
    MacAddress mac;
    std::optional<Ipv4Address> ip;
    Segment* segment = nullptr;
    Micros busy_until = 0;  // transmitter busy serializing earlier frames
};

class Segment {
public:
    Segment(std::string name, SegmentKind kind, SegmentParams params)
        : name_(std::move(name)), kind_(kind), params_(std::move(params)) {}

    const std::string& name() const { return name_; }
    SegmentKind kind() const { return kind_; }
    const SegmentParams& params() const { return params_; }
    SegmentParams& params() { return params_; }
    const std::vector<Port*>& ports() const { return ports_; }

    /// Credentials are checked for keyed kinds only.
    AttachStatus admit(const AttachCredentials& creds) const;

private:
    friend class Network;
    std::string name_;
    SegmentKind kind_;
    SegmentParams params_;
    std::vector<Port*> ports_;  // in attach order
};

enum class SendStatus { Ok, Detached };

struct CaptureRecord {
    Micros sent_at = 0;
    Micros delivered_at = 0;  // equal to sent_at for drops
    std::string segment;
    std::string from;
    std::string to;
    bool dropped = false;
    Proto proto = Proto::Udp;
    std::size_t size = 0;
    std::string summary;
};

class Network;

class Node {
public:
    Node(Network& net, std::string name) : net_(net), name_(std::move(name)) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const std::string& name() const { return name_; }
    Network& net() const { return net_; }

    virtual void on_receive(Port& port, const Packet& pkt) = 0;
    /// For bridging nodes: the port frames arriving on `p` may be forwarded to, when
    /// forwarding is currently active.
    virtual Port* bridge_peer(const Port& /*p*/) const { return nullptr; }

private:
    Network& net_;
    std::string name_;
};

/// Owns segments, ports and the event clock. Delivery on a segment: broadcasts go to every
/// other attached port; a unicast frame goes to the port owning the destination MAC, or to
/// the bridge port behind which that MAC sits. Frames for unknown MACs are dropped.
class Network {
public:
    explicit Network(std::uint64_t seed) : rng_(seed) {}

    Clock& clock() { return clock_; }
    Micros now() const { return clock_.now(); }
    Rng& rng() { return rng_; }

    Segment& add_segment(const std::string& name, SegmentKind kind, SegmentParams params = {});
    Segment* find_segment(const std::string& name);
    const std::vector<std::unique_ptr<Segment>>& segments() const { return segments_; }

    Port& add_port(Node& node, const std::string& name, MacAddress mac,
                   std::optional<Ipv4Address> ip = std::nullopt);
    /// Deterministic locally administered MAC unique within this network.
    MacAddress next_mac();

    AttachStatus attach(Port& port, Segment& seg, const AttachCredentials& creds = {});
    void detach(Port& port);

    /// Sends from a port. src_mac is filled in when unset.
    SendStatus send(Port& from, Packet pkt);

    /// The MAC of the port owning `ip` nearest to `from` in its layer-2 domain.
    std::optional<MacAddress> resolve(const Port& from, Ipv4Address ip) const;
    /// Whether `mac` is reachable from segment `seg` without passing back through `exclude`.
    bool reaches(const Segment& seg, const MacAddress& mac, const Port* exclude) const;

    void set_capture(bool on) { capture_on_ = on; }
    const std::vector<CaptureRecord>& capture() const { return capture_; }
    void clear_capture() { capture_.clear(); }
    /// JSON Lines, one record per delivery or drop.
    std::string capture_jsonl() const;

    std::uint64_t delivered() const { return delivered_; }
    std::uint64_t dropped() const { return dropped_; }

private:
    Port* find_port_for(const Segment& seg, const MacAddress& mac, const Port* exclude) const;

    Clock clock_;
    Rng rng_;
    std::vector<std::unique_ptr<Segment>> segments_;
    std::vector<std::unique_ptr<Port>> ports_;
    std::uint32_t mac_counter_ = 0;
    bool capture_on_ = true;
    std::vector<CaptureRecord> capture_;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
};

/// Two-port learning-free bridge. Frames are forwarded to the peer port when forwarding is
/// enabled and the peer side can reach the destination. Subclasses claim frames for local
/// handling and may rewrite or drop forwarded frames.
class BridgeNode : public Node {
public:
    BridgeNode(Network& net, std::string name) : Node(net, std::move(name)) {}

    void on_receive(Port& port, const Packet& pkt) override;
    Port* bridge_peer(const Port& p) const override;

protected:
    void set_ports(Port* a, Port* b) { a_ = a; b_ = b; }
    virtual bool forwarding() const { return true; }
    /// Delivers the frame to local services. Return true to stop it being forwarded.
    virtual bool local(Port& in, const Packet& pkt) = 0;
    /// Called before forwarding; return false to drop.
    virtual bool filter(Port& /*in*/, Packet& /*pkt*/) { return true; }

    Port* a_ = nullptr;
    Port* b_ = nullptr;
};

}  // namespace sdb::sim
