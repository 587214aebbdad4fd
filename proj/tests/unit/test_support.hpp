#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sdb/codec/dhcp.hpp"
#include "sdb/codec/dns.hpp"
#include "sdb/codec/tftp.hpp"
#include "sdb/net_types.hpp"

namespace sdb::test {

inline Bytes load_fixture(const std::string& name) {
    std::ifstream in(std::string(SDB_FIXTURE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::stringstream ss;
    ss << in.rdbuf();
    auto bytes = from_hex(ss.str());
    if (!bytes) throw std::runtime_error("bad hex in " + name);
    return *bytes;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::uint64_t u64() { return rng_(); }
    std::uint32_t u32() { return std::uint32_t(rng_()); }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : std::size_t(rng_() % n); }
    bool coin() { return rng_() & 1; }

    Bytes bytes(std::size_t n) {
        Bytes b(n);
        for (auto& x : b) x = std::uint8_t(rng_());
        return b;
    }
    std::string text(std::size_t max_len, std::string_view alphabet =
                                              "abcdefghijklmnopqrstuvwxyz0123456789-_.") {
        std::string s(below(max_len + 1), ' ');
        for (auto& c : s) c = alphabet[below(alphabet.size())];
        return s;
    }
    MacAddress mac() {
        std::array<std::uint8_t, 6> b{};
        for (auto& x : b) x = std::uint8_t(rng_());
        return MacAddress{b};
    }
    Ipv4Address ip() { return Ipv4Address{u32()}; }

    dhcp::Message dhcp_message() {
        dhcp::Message m;
        m.op = coin() ? dhcp::Op::BootRequest : dhcp::Op::BootReply;
        m.transaction_id = u32();
        m.secs = std::uint16_t(u32());
        m.flags = std::uint16_t(u32());
        m.client_mac = mac();
        m.client_ip = ip();
        m.your_ip = ip();
        m.server_ip = ip();
        m.gateway_ip = ip();
        m.server_name = text(64);
        m.boot_file = text(128);
        m.set(dhcp::opt::message_type, Bytes{std::uint8_t(1 + below(8))});
        std::size_t n = below(12);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint8_t code = std::uint8_t(1 + below(254));
            if (m.find(code)) continue;
            m.options.push_back({code, bytes(below(256))});
        }
        return m;
    }

    tftp::OptionList tftp_options() {
        tftp::OptionList o;
        std::size_t n = below(4);
        for (std::size_t i = 0; i < n; ++i) o.emplace_back(text(10), text(10));
        return o;
    }

    tftp::Packet tftp_packet() {
        switch (below(5)) {
            case 0: return tftp::ReadRequest{text(40), coin() ? "octet" : "netascii", tftp_options()};
            case 1: return tftp::Data{std::uint16_t(u32()), bytes(below(1429))};
            case 2: return tftp::Ack{std::uint16_t(u32())};
            case 3: return tftp::Error{std::uint16_t(below(9)), text(40, "abcdef ghijkl")};
            default: return tftp::OptionAck{tftp_options()};
        }
    }

    std::string dns_name() {
        std::string name;
        std::size_t labels = 1 + below(5);
        for (std::size_t i = 0; i < labels; ++i) {
            if (i) name.push_back('.');
            std::string label = text(20, "abcdefghijklmnopqrstuvwxyz0123456789-");
            if (label.empty()) label = "x";
            name += label;
        }
        return name;
    }

    dns::Query dns_query() {
        return {std::uint16_t(u32()), coin(), dns_name(), std::uint16_t(u32()), std::uint16_t(u32())};
    }

    dns::Answer dns_answer() {
        dns::Answer a;
        a.id = std::uint16_t(u32());
        a.recursion_desired = coin();
        a.authoritative = coin();
        a.rcode = dns::Rcode(below(6));
        a.name = dns_name();
        a.qtype = std::uint16_t(u32());
        a.qclass = std::uint16_t(u32());
        std::size_t n = below(3);
        for (std::size_t i = 0; i < n; ++i) a.records.push_back({dns_name(), u32(), ip()});
        return a;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace sdb::test
