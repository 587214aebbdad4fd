#include "sdb/codec/tftp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "sdb/codec/byte_io.hpp"

namespace sdb::tftp {

using codec::ByteReader;
using codec::ByteWriter;
using codec::DecodeError;
using codec::DecodeErrorKind;
using codec::EncodeError;
using codec::EncodeErrorKind;

namespace {

void write_string(ByteWriter& w, const std::string& s) {
    if (s.find('\0') != std::string::npos)
        throw EncodeError(EncodeErrorKind::InvalidName, "string contains NUL");
    w.raw(s);
    w.u8(0);
}

std::string read_string(ByteReader& r) {
    std::string s;
    for (;;) {
        if (r.empty()) throw DecodeError(DecodeErrorKind::UnterminatedString, "missing NUL");
        std::uint8_t c = r.u8();
        if (c == 0) return s;
        s.push_back(char(c));
    }
}

void write_options(ByteWriter& w, const OptionList& options) {
    for (const auto& [name, value] : options) {
        write_string(w, name);
        write_string(w, value);
    }
}

OptionList read_options(ByteReader& r) {
    OptionList options;
    while (!r.empty()) {
        std::string name = read_string(r);
        if (r.empty())
            throw DecodeError(DecodeErrorKind::MalformedOption, "option '" + name + "' has no value");
        options.emplace_back(std::move(name), read_string(r));
    }
    return options;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

struct Encoder {
    ByteWriter& w;
    void operator()(const ReadRequest& p) {
        w.u16(std::uint16_t(Opcode::Rrq));
        write_string(w, p.filename);
        write_string(w, p.mode);
        write_options(w, p.options);
    }
    void operator()(const Data& p) {
        w.u16(std::uint16_t(Opcode::Data));
        w.u16(p.block);
        w.raw(p.payload);
    }
    void operator()(const Ack& p) {
        w.u16(std::uint16_t(Opcode::Ack));
        w.u16(p.block);
    }
    void operator()(const Error& p) {
        w.u16(std::uint16_t(Opcode::Error));
        w.u16(p.code);
        write_string(w, p.message);
    }
    void operator()(const OptionAck& p) {
        w.u16(std::uint16_t(Opcode::Oack));
        write_options(w, p.options);
    }
};

}  // namespace

Bytes encode(const Packet& pkt) {
    Bytes out;
    ByteWriter w(out);
    std::visit(Encoder{w}, pkt);
    return out;
}

Packet decode(std::span<const std::uint8_t> raw) {
    ByteReader r(raw);
    std::uint16_t opcode = r.u16();
    switch (Opcode(opcode)) {
        case Opcode::Rrq: {
            ReadRequest p;
            p.filename = read_string(r);
            p.mode = read_string(r);
            p.options = read_options(r);
            return p;
        }
        case Opcode::Data: {
            Data p;
            p.block = r.u16();
            auto rest = r.rest();
            p.payload.assign(rest.begin(), rest.end());
            return p;
        }
        case Opcode::Ack: {
            Ack p{r.u16()};
            return p;
        }
        case Opcode::Error: {
            Error p;
            p.code = r.u16();
            p.message = read_string(r);
            return p;
        }
        case Opcode::Oack: return OptionAck{read_options(r)};
        case Opcode::Wrq: break;
    }
    throw DecodeError(DecodeErrorKind::UnknownOpcode, std::to_string(opcode));
}

std::optional<std::string> find_option(const OptionList& options, std::string_view name) {
    for (const auto& [k, v] : options)
        if (iequals(k, name)) return v;
    return std::nullopt;
}

std::optional<std::size_t> requested_block_size(const ReadRequest& rrq) {
    auto v = find_option(rrq.options, "blksize");
    if (!v) return std::nullopt;
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
    if (ec != std::errc{} || p != v->data() + v->size()) return std::nullopt;
    return std::clamp(n, min_block_size, max_block_size);
}

std::string summarize(const Packet& pkt) {
    struct Visitor {
        std::string operator()(const ReadRequest& p) const {
            std::string s = "RRQ " + p.filename + " " + p.mode;
            for (const auto& [k, v] : p.options) s += " " + k + "=" + v;
            return s;
        }
        std::string operator()(const Data& p) const {
            return "DATA #" + std::to_string(p.block) + " (" + std::to_string(p.payload.size()) +
                   " bytes)";
        }
        std::string operator()(const Ack& p) const { return "ACK #" + std::to_string(p.block); }
        std::string operator()(const Error& p) const {
            return "ERROR " + std::to_string(p.code) + " " + p.message;
        }
        std::string operator()(const OptionAck& p) const {
            std::string s = "OACK";
            for (const auto& [k, v] : p.options) s += " " + k + "=" + v;
            return s;
        }
    };
    return std::visit(Visitor{}, pkt);
}

}  // namespace sdb::tftp
