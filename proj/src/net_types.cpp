#include "sdb/net_types.hpp"

#include <charconv>
#include <cstdio>

namespace sdb {

namespace {

std::optional<unsigned> parse_uint(std::string_view s, unsigned max) {
    if (s.empty() || s.size() > 3) return std::nullopt;
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v > max) return std::nullopt;
    return v;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
        auto dot = text.find('.');
        if ((i < 3) == (dot == std::string_view::npos)) return std::nullopt;
        auto part = parse_uint(text.substr(0, dot), 255);
        if (!part) return std::nullopt;
        value = (value << 8) | *part;
        text = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    }
    return Ipv4Address{value};
}

std::array<std::uint8_t, 4> Ipv4Address::octets() const {
    return {std::uint8_t(value_ >> 24), std::uint8_t(value_ >> 16), std::uint8_t(value_ >> 8),
            std::uint8_t(value_)};
}

std::string Ipv4Address::to_string() const {
    auto o = octets();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", o[0], o[1], o[2], o[3]);
    return buf;
}

std::optional<Ipv4Subnet> Ipv4Subnet::parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto addr = Ipv4Address::parse(text.substr(0, slash));
    auto len = parse_uint(text.substr(slash + 1), 32);
    if (!addr || !len) return std::nullopt;
    Ipv4Subnet s{*addr, int(*len)};
    s.network = Ipv4Address{addr->value() & s.mask()};
    return s;
}

std::string Ipv4Subnet::to_string() const {
    return network.to_string() + "/" + std::to_string(prefix_len);
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
    if (text.size() != 17) return std::nullopt;
    std::array<std::uint8_t, 6> b{};
    for (int i = 0; i < 6; ++i) {
        int hi = hex_digit(text[i * 3]);
        int lo = hex_digit(text[i * 3 + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        if (i < 5 && text[i * 3 + 2] != ':' && text[i * 3 + 2] != '-') return std::nullopt;
        b[i] = std::uint8_t(hi * 16 + lo);
    }
    return MacAddress{b};
}

std::string MacAddress::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes_[0], bytes_[1], bytes_[2],
                  bytes_[3], bytes_[4], bytes_[5]);
    return buf;
}

std::string to_hex(const std::uint8_t* data, std::size_t len) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

std::optional<Bytes> from_hex(std::string_view text) {
    Bytes out;
    int pending = -1;
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
        int d = hex_digit(c);
        if (d < 0) return std::nullopt;
        if (pending < 0) {
            pending = d;
        } else {
            out.push_back(std::uint8_t(pending * 16 + d));
            pending = -1;
        }
    }
    if (pending >= 0) return std::nullopt;
    return out;
}

}  // namespace sdb
