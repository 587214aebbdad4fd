#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdb/net_types.hpp"

namespace sdb::dns {

inline constexpr std::uint16_t server_port = 53;
inline constexpr std::uint16_t type_a = 1;
inline constexpr std::uint16_t type_aaaa = 28;
inline constexpr std::uint16_t class_in = 1;

enum class Rcode : std::uint8_t {
    NoError = 0,
    FormatError = 1,
    ServerFailure = 2,
    NameError = 3,
    NotImplemented = 4,
    Refused = 5,
};

struct Query {
    std::uint16_t id = 0;
    bool recursion_desired = true;
    std::string name;  // dotted, no trailing dot
    std::uint16_t qtype = type_a;
    std::uint16_t qclass = class_in;

    bool operator==(const Query&) const = default;
};

struct ARecord {
    std::string name;
    std::uint32_t ttl = 0;
    Ipv4Address address;

    bool operator==(const ARecord&) const = default;
};

struct Answer {
    std::uint16_t id = 0;
    bool recursion_desired = true;
    bool authoritative = true;
    Rcode rcode = Rcode::NoError;
    // Echoed question.
    std::string name;
    std::uint16_t qtype = type_a;
    std::uint16_t qclass = class_in;
    std::vector<ARecord> records;

    bool operator==(const Answer&) const = default;
};

/// Server side. Throws codec::DecodeError: TooShort, MultipleQuestions (question count other
/// than one), TruncatedLabel, Unsupported (compression pointers, responses, non-standard
/// opcodes).
Query decode_query(std::span<const std::uint8_t> raw);

/// Uncompressed names throughout. Throws codec::EncodeError(InvalidName) for labels over 63
/// bytes or names over 253 characters.
Bytes encode_answer(const Answer& ans);

/// Client side of the same exchange.
Bytes encode_query(const Query& q);
Answer decode_answer(std::span<const std::uint8_t> raw);

}  // namespace sdb::dns
