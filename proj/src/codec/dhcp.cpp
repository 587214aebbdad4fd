#include "sdb/codec/dhcp.hpp"

#include <algorithm>
#include <cstring>

#include "sdb/codec/byte_io.hpp"

namespace sdb::dhcp {

using codec::ByteReader;
using codec::ByteWriter;
using codec::DecodeError;
using codec::DecodeErrorKind;
using codec::EncodeError;
using codec::EncodeErrorKind;

const char* to_string(MessageType t) {
    switch (t) {
        case MessageType::Discover: return "DISCOVER";
        case MessageType::Offer: return "OFFER";
        case MessageType::Request: return "REQUEST";
        case MessageType::Decline: return "DECLINE";
        case MessageType::Ack: return "ACK";
        case MessageType::Nak: return "NAK";
        case MessageType::Release: return "RELEASE";
        case MessageType::Inform: return "INFORM";
    }
    return "UNKNOWN";
}

const Option* Message::find(std::uint8_t code) const {
    auto it = std::find_if(options.begin(), options.end(),
                           [code](const Option& o) { return o.code == code; });
    return it == options.end() ? nullptr : &*it;
}

void Message::set(std::uint8_t code, Bytes payload) {
    for (auto& o : options) {
        if (o.code == code) {
            o.payload = std::move(payload);
            return;
        }
    }
    options.push_back({code, std::move(payload)});
}

void Message::set(std::uint8_t code, Ipv4Address a) {
    auto o = a.octets();
    set(code, Bytes(o.begin(), o.end()));
}

void Message::set(std::uint8_t code, std::string_view text) { set(code, to_bytes(text)); }

void Message::remove(std::uint8_t code) {
    std::erase_if(options, [code](const Option& o) { return o.code == code; });
}

std::optional<MessageType> Message::message_type() const {
    const Option* o = find(opt::message_type);
    if (!o || o->payload.size() != 1 || o->payload[0] < 1 || o->payload[0] > 8) return std::nullopt;
    return MessageType(o->payload[0]);
}

std::optional<Ipv4Address> Message::ip_option(std::uint8_t code) const {
    const Option* o = find(code);
    if (!o || o->payload.size() < 4) return std::nullopt;
    const auto& p = o->payload;
    return Ipv4Address{p[0], p[1], p[2], p[3]};
}

std::optional<std::string> Message::string_option(std::uint8_t code) const {
    const Option* o = find(code);
    if (!o) return std::nullopt;
    return sdb::to_string(o->payload);
}

bool Message::is_pxe_client() const {
    auto v = string_option(opt::vendor_class);
    return v && v->starts_with(pxe_vendor_prefix);
}

Message make_message(Op op, MessageType type, std::uint32_t xid, MacAddress mac) {
    Message m;
    m.op = op;
    m.transaction_id = xid;
    m.client_mac = mac;
    m.set(opt::message_type, Bytes{std::uint8_t(type)});
    return m;
}

namespace {

void write_fixed_string(ByteWriter& w, const std::string& s, std::size_t capacity,
                        const char* field) {
    if (s.size() > capacity) throw EncodeError(EncodeErrorKind::FieldTooLong, field);
    if (s.find('\0') != std::string::npos)
        throw EncodeError(EncodeErrorKind::FieldTooLong, std::string(field) + " contains NUL");
    w.raw(s);
    w.zeros(capacity - s.size());
}

std::string read_fixed_string(std::span<const std::uint8_t> field) {
    auto nul = std::find(field.begin(), field.end(), std::uint8_t{0});
    return std::string(field.begin(), nul);
}

}  // namespace

Bytes encode(const Message& msg) {
    if (!msg.find(opt::message_type))
        throw EncodeError(EncodeErrorKind::MissingMessageType, "option 53 absent");

    Bytes out;
    out.reserve(min_encoded_size);
    ByteWriter w(out);
    w.u8(std::uint8_t(msg.op));
    w.u8(1);  // htype: Ethernet
    w.u8(6);  // hlen
    w.u8(0);  // hops
    w.u32(msg.transaction_id);
    w.u16(msg.secs);
    w.u16(msg.flags);
    w.ipv4(msg.client_ip);
    w.ipv4(msg.your_ip);
    w.ipv4(msg.server_ip);
    w.ipv4(msg.gateway_ip);
    w.raw(msg.client_mac.bytes());
    w.zeros(10);
    write_fixed_string(w, msg.server_name, server_name_capacity, "server_name");
    write_fixed_string(w, msg.boot_file, boot_file_capacity, "boot_file");
    w.raw(magic_cookie);

    for (std::size_t i = 0; i < msg.options.size(); ++i) {
        const Option& o = msg.options[i];
        if (o.code == opt::pad || o.code == opt::end)
            throw EncodeError(EncodeErrorKind::DuplicateOption,
                              "pad/end are implicit, not list entries");
        if (o.payload.size() > 255)
            throw EncodeError(EncodeErrorKind::OversizeOption,
                              "option " + std::to_string(o.code) + " payload " +
                                  std::to_string(o.payload.size()) + " bytes");
        for (std::size_t j = 0; j < i; ++j)
            if (msg.options[j].code == o.code)
                throw EncodeError(EncodeErrorKind::DuplicateOption,
                                  "option " + std::to_string(o.code));
        w.u8(o.code);
        w.u8(std::uint8_t(o.payload.size()));
        w.raw(o.payload);
    }
    w.u8(opt::end);
    if (out.size() < min_encoded_size) w.zeros(min_encoded_size - out.size());
    return out;
}

Message decode(std::span<const std::uint8_t> raw, std::vector<std::string>* warnings) {
    if (raw.size() < options_offset)
        throw DecodeError(DecodeErrorKind::TooShort,
                          std::to_string(raw.size()) + " bytes, need at least 240");
    if (!std::equal(raw.begin() + cookie_offset, raw.begin() + options_offset, magic_cookie))
        throw DecodeError(DecodeErrorKind::BadMagicCookie, "bytes 236..240");

    ByteReader r(raw);
    Message m;
    std::uint8_t op = r.u8();
    if (op != 1 && op != 2)
        throw DecodeError(DecodeErrorKind::Unsupported, "op " + std::to_string(op));
    m.op = Op(op);
    r.u8();  // htype
    r.u8();  // hlen
    r.u8();  // hops
    m.transaction_id = r.u32();
    m.secs = r.u16();
    m.flags = r.u16();
    m.client_ip = r.ipv4();
    m.your_ip = r.ipv4();
    m.server_ip = r.ipv4();
    m.gateway_ip = r.ipv4();
    auto chaddr = r.take(16);
    std::array<std::uint8_t, 6> mac{};
    std::copy_n(chaddr.begin(), 6, mac.begin());
    m.client_mac = MacAddress{mac};
    m.server_name = read_fixed_string(r.take(server_name_capacity));
    m.boot_file = read_fixed_string(r.take(boot_file_capacity));
    r.take(4);  // cookie, already checked

    bool ended = false;
    while (!r.empty()) {
        std::uint8_t code = r.u8();
        if (code == opt::pad) continue;
        if (code == opt::end) {
            ended = true;
            break;
        }
        std::uint8_t len = r.u8(DecodeErrorKind::MalformedOption);
        auto payload = r.take(len, DecodeErrorKind::MalformedOption);
        if (m.find(code)) {
            if (warnings)
                warnings->push_back("duplicate option " + std::to_string(code) + " ignored");
            continue;
        }
        m.options.push_back({code, Bytes(payload.begin(), payload.end())});
    }
    if (!ended) throw DecodeError(DecodeErrorKind::MalformedOption, "missing end option");
    return m;
}

}  // namespace sdb::dhcp
