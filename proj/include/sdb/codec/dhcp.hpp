#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdb/net_types.hpp"

namespace sdb::dhcp {

inline constexpr std::uint16_t server_port = 67;
inline constexpr std::uint16_t client_port = 68;

inline constexpr std::size_t header_size = 236;
inline constexpr std::size_t cookie_offset = 236;
inline constexpr std::size_t options_offset = 240;
inline constexpr std::size_t min_encoded_size = 300;
inline constexpr std::uint8_t magic_cookie[4] = {99, 130, 83, 99};

inline constexpr std::size_t server_name_capacity = 64;
inline constexpr std::size_t boot_file_capacity = 128;

/// BOOTP broadcast flag (RFC 2131 "flags" field, high bit).
inline constexpr std::uint16_t flag_broadcast = 0x8000;

enum class Op : std::uint8_t { BootRequest = 1, BootReply = 2 };

enum class MessageType : std::uint8_t {
    Discover = 1,
    Offer = 2,
    Request = 3,
    Decline = 4,
    Ack = 5,
    Nak = 6,
    Release = 7,
    Inform = 8,
};

const char* to_string(MessageType t);

namespace opt {
inline constexpr std::uint8_t pad = 0;
inline constexpr std::uint8_t subnet_mask = 1;
inline constexpr std::uint8_t router = 3;
inline constexpr std::uint8_t dns_servers = 6;
inline constexpr std::uint8_t requested_ip = 50;
inline constexpr std::uint8_t lease_time = 51;
inline constexpr std::uint8_t message_type = 53;
inline constexpr std::uint8_t server_id = 54;
inline constexpr std::uint8_t parameter_request = 55;
inline constexpr std::uint8_t vendor_class = 60;
inline constexpr std::uint8_t tftp_server_name = 66;
inline constexpr std::uint8_t bootfile_name = 67;
inline constexpr std::uint8_t client_arch = 93;
inline constexpr std::uint8_t end = 255;
}  // namespace opt

inline constexpr std::string_view pxe_vendor_prefix = "PXEClient";

struct Option {
    std::uint8_t code = 0;
    Bytes payload;

    bool operator==(const Option&) const = default;
};

struct Message {
    Op op = Op::BootRequest;
    std::uint32_t transaction_id = 0;
    std::uint16_t secs = 0;
    std::uint16_t flags = 0;
    MacAddress client_mac;
    Ipv4Address client_ip;
    Ipv4Address your_ip;
    Ipv4Address server_ip;  // siaddr, the next-server
    Ipv4Address gateway_ip;
    std::string server_name;
    std::string boot_file;
    std::vector<Option> options;

    bool operator==(const Message&) const = default;

    const Option* find(std::uint8_t code) const;
    /// Replaces an existing option with the same code, otherwise appends.
    void set(std::uint8_t code, Bytes payload);
    void set(std::uint8_t code, Ipv4Address a);
    void set(std::uint8_t code, std::string_view text);
    void remove(std::uint8_t code);

    std::optional<MessageType> message_type() const;
    std::optional<Ipv4Address> ip_option(std::uint8_t code) const;
    std::optional<std::string> string_option(std::uint8_t code) const;
    /// Option 60 begins with "PXEClient".
    bool is_pxe_client() const;
};

/// Builds an empty message of the given type; option 53 is set.
Message make_message(Op op, MessageType type, std::uint32_t xid, MacAddress mac);

/// Encodes header, cookie, options in list order, end option, and zero padding up to
/// min_encoded_size. Throws codec::EncodeError.
Bytes encode(const Message& msg);

/// Throws codec::DecodeError (TooShort, BadMagicCookie, MalformedOption). A repeated option
/// code keeps its first instance; each dropped duplicate appends a line to `warnings`.
Message decode(std::span<const std::uint8_t> raw, std::vector<std::string>* warnings = nullptr);

}  // namespace sdb::dhcp
