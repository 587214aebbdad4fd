#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdb/net_types.hpp"

namespace sdb::tftp {

inline constexpr std::uint16_t server_port = 69;
inline constexpr std::size_t default_block_size = 512;
inline constexpr std::size_t min_block_size = 8;
inline constexpr std::size_t max_block_size = 1428;

enum class Opcode : std::uint16_t { Rrq = 1, Wrq = 2, Data = 3, Ack = 4, Error = 5, Oack = 6 };

enum class ErrorCode : std::uint16_t {
    NotDefined = 0,
    FileNotFound = 1,
    AccessViolation = 2,
    DiskFull = 3,
    IllegalOperation = 4,
    UnknownTransferId = 5,
    FileExists = 6,
    NoSuchUser = 7,
    OptionRefused = 8,
};

using OptionList = std::vector<std::pair<std::string, std::string>>;

struct ReadRequest {
    std::string filename;
    std::string mode = "octet";
    OptionList options;
    bool operator==(const ReadRequest&) const = default;
};

struct Data {
    std::uint16_t block = 1;
    Bytes payload;
    bool operator==(const Data&) const = default;
};

struct Ack {
    std::uint16_t block = 0;
    bool operator==(const Ack&) const = default;
};

struct Error {
    std::uint16_t code = 0;
    std::string message;
    bool operator==(const Error&) const = default;
};

struct OptionAck {
    OptionList options;
    bool operator==(const OptionAck&) const = default;
};

using Packet = std::variant<ReadRequest, Data, Ack, Error, OptionAck>;

/// Throws codec::EncodeError if a string field contains NUL.
Bytes encode(const Packet& pkt);

/// Throws codec::DecodeError (TooShort, UnknownOpcode, UnterminatedString, MalformedOption).
Packet decode(std::span<const std::uint8_t> raw);

/// Case-insensitive option lookup.
std::optional<std::string> find_option(const OptionList& options, std::string_view name);

/// Requested blksize clamped into [min_block_size, max_block_size]; nullopt when absent or
/// not a number.
std::optional<std::size_t> requested_block_size(const ReadRequest& rrq);

/// A DATA payload shorter than the block size ends the transfer.
inline bool is_final_block(const Data& d, std::size_t block_size) {
    return d.payload.size() < block_size;
}

/// Number of DATA packets needed for an n-byte file: the final packet is always short,
/// possibly empty.
inline std::size_t data_packet_count(std::size_t file_size, std::size_t block_size) {
    return file_size / block_size + 1;
}

std::string summarize(const Packet& pkt);

}  // namespace sdb::tftp
