#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdb {

using Bytes = std::vector<std::uint8_t>;

/// IPv4 address held in host byte order.
class Ipv4Address {
public:
    constexpr Ipv4Address() = default;
    constexpr explicit Ipv4Address(std::uint32_t value) : value_(value) {}
    constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) | (std::uint32_t(c) << 8) | d) {}

    static std::optional<Ipv4Address> parse(std::string_view text);
    static constexpr Ipv4Address any() { return Ipv4Address{}; }
    static constexpr Ipv4Address broadcast() { return Ipv4Address{0xFFFFFFFFu}; }

    constexpr std::uint32_t value() const { return value_; }
    constexpr bool is_unspecified() const { return value_ == 0; }
    std::array<std::uint8_t, 4> octets() const;
    std::string to_string() const;

    constexpr auto operator<=>(const Ipv4Address&) const = default;

private:
    std::uint32_t value_ = 0;
};

/// Address/prefix pair, e.g. 192.168.77.0/24.
struct Ipv4Subnet {
    Ipv4Address network;
    int prefix_len = 24;

    static std::optional<Ipv4Subnet> parse(std::string_view text);
    std::uint32_t mask() const { return prefix_len == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix_len); }
    bool contains(Ipv4Address a) const { return (a.value() & mask()) == (network.value() & mask()); }
    Ipv4Address netmask() const { return Ipv4Address{mask()}; }
    std::string to_string() const;

    bool operator==(const Ipv4Subnet&) const = default;
};

class MacAddress {
public:
    constexpr MacAddress() = default;
    constexpr explicit MacAddress(std::array<std::uint8_t, 6> b) : bytes_(b) {}

    /// Accepts "52:54:00:12:34:56" or "52-54-00-12-34-56", any case.
    static std::optional<MacAddress> parse(std::string_view text);

    const std::array<std::uint8_t, 6>& bytes() const { return bytes_; }
    /// Lower-case, colon separated.
    std::string to_string() const;

    constexpr auto operator<=>(const MacAddress&) const = default;

private:
    std::array<std::uint8_t, 6> bytes_{};
};

std::string to_hex(const std::uint8_t* data, std::size_t len);
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }
std::optional<Bytes> from_hex(std::string_view text);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace sdb
