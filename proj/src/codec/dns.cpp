#include "sdb/codec/dns.hpp"

#include <algorithm>

#include "sdb/codec/byte_io.hpp"

namespace sdb::dns {

using codec::ByteReader;
using codec::ByteWriter;
using codec::DecodeError;
using codec::DecodeErrorKind;
using codec::EncodeError;
using codec::EncodeErrorKind;

namespace {

constexpr std::uint16_t flag_qr = 0x8000;
constexpr std::uint16_t flag_aa = 0x0400;
constexpr std::uint16_t flag_tc = 0x0200;
constexpr std::uint16_t flag_rd = 0x0100;
constexpr std::size_t max_name_length = 253;

void write_name(ByteWriter& w, std::string_view name) {
    if (name.size() > max_name_length) throw EncodeError(EncodeErrorKind::InvalidName, "name too long");
    while (!name.empty()) {
        auto dot = name.find('.');
        auto label = name.substr(0, dot);
        if (label.empty() || label.size() > 63)
            throw EncodeError(EncodeErrorKind::InvalidName, "bad label in '" + std::string(name) + "'");
        w.u8(std::uint8_t(label.size()));
        w.raw(label);
        name = dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
        if (dot != std::string_view::npos && name.empty())
            throw EncodeError(EncodeErrorKind::InvalidName, "trailing dot");
    }
    w.u8(0);
}

std::string read_name(ByteReader& r) {
    std::string name;
    for (;;) {
        std::uint8_t len = r.u8(DecodeErrorKind::TruncatedLabel);
        if (len == 0) return name;
        if ((len & 0xC0) == 0xC0)
            throw DecodeError(DecodeErrorKind::Unsupported, "compressed name");
        if (len > 63) throw DecodeError(DecodeErrorKind::Unsupported, "extended label type");
        auto label = r.take(len, DecodeErrorKind::TruncatedLabel);
        if (std::find(label.begin(), label.end(), std::uint8_t('.')) != label.end())
            throw DecodeError(DecodeErrorKind::Unsupported, "dot inside label");
        if (!name.empty()) name.push_back('.');
        name.append(label.begin(), label.end());
        if (name.size() > max_name_length)
            throw DecodeError(DecodeErrorKind::TruncatedLabel, "name exceeds 253 characters");
    }
}

struct Header {
    std::uint16_t id, flags, qdcount, ancount, nscount, arcount;
};

Header read_header(ByteReader& r) {
    Header h{};
    h.id = r.u16();
    h.flags = r.u16();
    h.qdcount = r.u16();
    h.ancount = r.u16();
    h.nscount = r.u16();
    h.arcount = r.u16();
    return h;
}

}  // namespace

Query decode_query(std::span<const std::uint8_t> raw) {
    ByteReader r(raw);
    Header h = read_header(r);
    if (h.flags & flag_qr) throw DecodeError(DecodeErrorKind::Unsupported, "not a query");
    if (((h.flags >> 11) & 0xF) != 0)
        throw DecodeError(DecodeErrorKind::Unsupported, "opcode other than QUERY");
    if (h.qdcount != 1)
        throw DecodeError(DecodeErrorKind::MultipleQuestions,
                          std::to_string(h.qdcount) + " questions");
    Query q;
    q.id = h.id;
    q.recursion_desired = (h.flags & flag_rd) != 0;
    q.name = read_name(r);
    q.qtype = r.u16();
    q.qclass = r.u16();
    return q;
}

Bytes encode_answer(const Answer& ans) {
    Bytes out;
    ByteWriter w(out);
    std::uint16_t flags = flag_qr | std::uint16_t(ans.rcode);
    if (ans.authoritative) flags |= flag_aa;
    if (ans.recursion_desired) flags |= flag_rd;
    w.u16(ans.id);
    w.u16(flags);
    w.u16(1);
    w.u16(std::uint16_t(ans.records.size()));
    w.u16(0);
    w.u16(0);
    write_name(w, ans.name);
    w.u16(ans.qtype);
    w.u16(ans.qclass);
    for (const auto& rec : ans.records) {
        write_name(w, rec.name);
        w.u16(type_a);
        w.u16(class_in);
        w.u32(rec.ttl);
        w.u16(4);
        w.ipv4(rec.address);
    }
    return out;
}

Bytes encode_query(const Query& q) {
    Bytes out;
    ByteWriter w(out);
    w.u16(q.id);
    w.u16(q.recursion_desired ? flag_rd : 0);
    w.u16(1);
    w.u16(0);
    w.u16(0);
    w.u16(0);
    write_name(w, q.name);
    w.u16(q.qtype);
    w.u16(q.qclass);
    return out;
}

Answer decode_answer(std::span<const std::uint8_t> raw) {
    ByteReader r(raw);
    Header h = read_header(r);
    if (!(h.flags & flag_qr)) throw DecodeError(DecodeErrorKind::Unsupported, "not a response");
    if (h.flags & flag_tc) throw DecodeError(DecodeErrorKind::Unsupported, "truncated response");
    if (h.qdcount != 1)
        throw DecodeError(DecodeErrorKind::MultipleQuestions,
                          std::to_string(h.qdcount) + " questions");
    Answer a;
    a.id = h.id;
    a.rcode = Rcode(h.flags & 0xF);
    a.authoritative = (h.flags & flag_aa) != 0;
    a.recursion_desired = (h.flags & flag_rd) != 0;
    a.name = read_name(r);
    a.qtype = r.u16();
    a.qclass = r.u16();
    for (std::uint16_t i = 0; i < h.ancount; ++i) {
        ARecord rec;
        rec.name = read_name(r);
        std::uint16_t type = r.u16();
        std::uint16_t cls = r.u16();
        rec.ttl = r.u32();
        std::uint16_t rdlen = r.u16();
        auto rdata = r.take(rdlen);
        if (type != type_a || cls != class_in || rdlen != 4)
            throw DecodeError(DecodeErrorKind::Unsupported, "non-A record in answer");
        rec.address = Ipv4Address{rdata[0], rdata[1], rdata[2], rdata[3]};
        a.records.push_back(std::move(rec));
    }
    return a;
}

}  // namespace sdb::dns
