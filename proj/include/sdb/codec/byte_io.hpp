#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "sdb/codec/error.hpp"
#include "sdb/net_types.hpp"

namespace sdb::codec {

/// Big-endian appender over a byte vector.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(std::uint8_t(v >> 8));
        out_.push_back(std::uint8_t(v));
    }
    void u32(std::uint32_t v) {
        u16(std::uint16_t(v >> 16));
        u16(std::uint16_t(v));
    }
    void ipv4(Ipv4Address a) { u32(a.value()); }
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }
    std::size_t size() const { return out_.size(); }

private:
    Bytes& out_;
};

/// Bounds-checked big-endian cursor; every overrun throws DecodeError(TooShort) unless
/// the caller supplies a more specific kind.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool empty() const { return remaining() == 0; }

    std::uint8_t u8(DecodeErrorKind on_short = DecodeErrorKind::TooShort) {
        need(1, on_short);
        return in_[pos_++];
    }
    std::uint16_t u16(DecodeErrorKind on_short = DecodeErrorKind::TooShort) {
        need(2, on_short);
        std::uint16_t v = std::uint16_t((in_[pos_] << 8) | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(DecodeErrorKind on_short = DecodeErrorKind::TooShort) {
        std::uint32_t hi = u16(on_short);
        return (hi << 16) | u16(on_short);
    }
    Ipv4Address ipv4() { return Ipv4Address{u32()}; }
    std::span<const std::uint8_t> take(std::size_t n,
                                       DecodeErrorKind on_short = DecodeErrorKind::TooShort) {
        need(n, on_short);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::span<const std::uint8_t> rest() { return take(remaining()); }

private:
    void need(std::size_t n, DecodeErrorKind kind) const {
        if (remaining() < n)
            throw DecodeError(kind, "need " + std::to_string(n) + " bytes at offset " +
                                        std::to_string(pos_) + ", have " +
                                        std::to_string(remaining()));
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace sdb::codec
