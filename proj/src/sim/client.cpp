#include "sdb/sim/client.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "sdb/cloud/crypto.hpp"
#include "sdb/cloud/service.hpp"
#include "sdb/codec/dns.hpp"
#include "sdb/codec/error.hpp"
#include "sdb/codec/tftp.hpp"
#include "sdb/url.hpp"

namespace sdb::sim {

const char* to_string(BootState s) {
    switch (s) {
        case BootState::PowerOn: return "PowerOn";
        case BootState::Discovering: return "Discovering";
        case BootState::OfferSelected: return "OfferSelected";
        case BootState::FetchingBootloader: return "FetchingBootloader";
        case BootState::ExecutingScript: return "ExecutingScript";
        case BootState::AwaitingCredentials: return "AwaitingCredentials";
        case BootState::Authenticating: return "Authenticating";
        case BootState::FetchingArtifacts: return "FetchingArtifacts";
        case BootState::Booted: return "Booted";
        case BootState::Failed: return "Failed";
    }
    return "?";
}

const char* to_string(BootFailure f) {
    switch (f) {
        case BootFailure::NoOffer: return "NoOffer";
        case BootFailure::NoUsableOffer: return "NoUsableOffer";
        case BootFailure::TftpError: return "TftpError";
        case BootFailure::ScriptError: return "ScriptError";
        case BootFailure::DnsError: return "DnsError";
        case BootFailure::HttpError: return "HttpError";
        case BootFailure::AuthRejected: return "AuthRejected";
        case BootFailure::DigestMismatch: return "DigestMismatch";
        case BootFailure::NoCredentials: return "NoCredentials";
        case BootFailure::NoBoot: return "NoBoot";
    }
    return "?";
}

std::string trace_jsonl(const std::vector<TraceEvent>& trace) {
    std::string out;
    for (const auto& e : trace) {
        nlohmann::json j{{"time_us", e.time}, {"direction", e.direction}, {"protocol", e.protocol},
                         {"summary", e.summary}};
        out += j.dump() + "\n";
    }
    return out;
}

std::string offer_boot_file(const dhcp::Message& m) {
    if (!m.boot_file.empty()) return m.boot_file;
    return m.string_option(dhcp::opt::bootfile_name).value_or("");
}

std::optional<Ipv4Address> offer_next_server(const dhcp::Message& m) {
    if (!m.server_ip.is_unspecified()) return m.server_ip;
    if (auto name = m.string_option(dhcp::opt::tftp_server_name)) return Ipv4Address::parse(*name);
    return std::nullopt;
}

std::variant<OfferSelection, NoUsableOffer> select_offer(const std::vector<dhcp::Message>& offers) {
    const dhcp::Message* boot = nullptr;
    for (const auto& o : offers) {
        if (!offer_boot_file(o).empty() && offer_next_server(o)) {
            boot = &o;
            break;
        }
    }
    if (!boot) return NoUsableOffer{};
    const dhcp::Message* addr = boot->your_ip.is_unspecified() ? nullptr : boot;
    for (const auto& o : offers) {
        if (addr) break;
        if (!o.your_ip.is_unspecified()) addr = &o;
    }
    if (!addr) return NoUsableOffer{};
    return OfferSelection{*addr, *boot, addr->your_ip, *offer_next_server(*boot), offer_boot_file(*boot)};
}

std::string describe_dhcp(const dhcp::Message& m) {
    auto t = m.message_type();
    char xid[16];
    std::snprintf(xid, sizeof xid, "%08x", m.transaction_id);
    std::string s = std::string(t ? dhcp::to_string(*t) : "BOOTP") + " xid=" + xid + " chaddr=" +
                    m.client_mac.to_string() + " yiaddr=" + m.your_ip.to_string() +
                    " siaddr=" + m.server_ip.to_string();
    if (!m.boot_file.empty()) s += " file=" + m.boot_file;
    if (auto sid = m.ip_option(dhcp::opt::server_id)) s += " server=" + sid->to_string();
    s += " options=";
    for (std::size_t i = 0; i < m.options.size(); ++i) s += (i ? "," : "") + std::to_string(m.options[i].code);
    return s;
}

namespace {

std::string_view as_text(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

bool is_dhcp_port(std::uint16_t p) { return p == dhcp::server_port || p == dhcp::client_port; }

std::optional<dhcp::Message> decode_reply(const Packet& pkt, std::uint32_t xid, MacAddress mac) {
    if (pkt.proto != Proto::Udp || pkt.dst.port != dhcp::client_port) return std::nullopt;
    try {
        auto m = dhcp::decode(pkt.payload);
        if (m.op != dhcp::Op::BootReply || m.transaction_id != xid || m.client_mac != mac) return std::nullopt;
        return m;
    } catch (const codec::DecodeError&) {
        return std::nullopt;
    }
}

/// "/files/<os_id>/<name>" -> os_id
std::string os_of(const std::string& url_text) {
    auto u = url::parse(url_text);
    if (!u || u->path.rfind("/files/", 0) != 0) return "";
    auto rest = u->path.substr(7);
    return rest.substr(0, rest.find('/'));
}

}  // namespace

// ---------------------------------------------------------------- awaitables

struct ClientNode::Sleep {
    ClientNode& c;
    Micros d;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) {
        c.sleep_timer_ = c.net().clock().schedule_after(d, [h] { h.resume(); });
    }
    void await_resume() const noexcept {}
};

struct ClientNode::Receive {
    ClientNode& c;
    Pred pred;
    Micros timeout;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) {
        c.waiter_ = h;
        c.waiter_pred_ = std::move(pred);
        c.waiter_result_.reset();
        ClientNode* cp = &c;
        c.waiter_timer_ = c.net().clock().schedule_after(timeout, [cp] {
            auto w = std::exchange(cp->waiter_, {});
            cp->waiter_pred_ = nullptr;
            if (w) w.resume();
        });
    }
    std::optional<Packet> await_resume() { return std::exchange(c.waiter_result_, std::nullopt); }
};

ClientNode::Sleep ClientNode::sleep(Micros d) { return Sleep{*this, d}; }
ClientNode::Receive ClientNode::receive(Pred pred, Micros timeout) { return Receive{*this, std::move(pred), timeout}; }

// ---------------------------------------------------------------- node plumbing

ClientNode::ClientNode(Network& net, std::string name, MacAddress mac, ClientConfig cfg)
    : Node(net, std::move(name)), cfg_(std::move(cfg)), port_(&net.add_port(*this, this->name() + ".eth0", mac)) {}

ClientNode::~ClientNode() { power_off(); }

void ClientNode::power_off() {
    net().clock().cancel(waiter_timer_);
    net().clock().cancel(sleep_timer_);
    waiter_ = {};
    waiter_pred_ = nullptr;
    waiter_result_.reset();
    session_.reset();
    ip_.reset();
    port_->ip.reset();
    subnet_.reset();
    router_.reset();
    dns_.reset();
    embedded_.clear();
    env_.clear();
}

void ClientNode::power_on(CredentialSource creds) {
    power_off();
    creds_ = std::move(creds);
    next_login_ = 0;
    next_answer_.clear();
    outcome_ = BootOutcome{};
    trace_.clear();
    states_.clear();
    xid_seed_ = std::uint32_t(net().rng().next());
    next_port_ = 0;
    session_.emplace(session());
    session_->start();
}

void ClientNode::on_receive(Port&, const Packet& in) {
    if (!session_ || session_->done()) return;
    Packet pkt = in;
    if (receive_filter && !receive_filter(pkt)) return;
    trace_packet("rx", pkt);
    if (waiter_ && waiter_pred_ && waiter_pred_(pkt)) {
        net().clock().cancel(waiter_timer_);
        waiter_result_ = std::move(pkt);
        auto w = std::exchange(waiter_, {});
        waiter_pred_ = nullptr;
        w.resume();
    }
}

void ClientNode::trace(std::string dir, std::string proto, std::string summary) {
    trace_.push_back(TraceEvent{net().now(), std::move(dir), std::move(proto), std::move(summary)});
}

void ClientNode::trace_packet(const char* dir, const Packet& pkt) {
    if (pkt.proto == Proto::Stream) {
        trace(dir, "http", summarize(pkt));
        return;
    }
    if (is_dhcp_port(pkt.src.port) || is_dhcp_port(pkt.dst.port)) {
        try {
            trace(dir, "dhcp", pkt.src.to_string() + " > " + pkt.dst.to_string() + " " +
                                   describe_dhcp(dhcp::decode(pkt.payload)));
            return;
        } catch (const codec::DecodeError&) {
        }
    }
    if (pkt.src.port == dns::server_port || pkt.dst.port == dns::server_port) {
        trace(dir, "dns", summarize(pkt));
        return;
    }
    std::string s = summarize(pkt);
    const char* proto = s.find(" tftp ") != std::string::npos ? "tftp" : "udp";
    trace(dir, proto, std::move(s));
}

void ClientNode::set_state(BootState s) {
    if (!states_.empty() && states_.back() == s) return;
    outcome_.state = s;
    states_.push_back(s);
    trace("state", "session", to_string(s));
}

void ClientNode::fail(BootState stage, BootFailure reason, std::string detail) {
    outcome_.failed_stage = stage;
    outcome_.failure = reason;
    outcome_.failure_detail = detail;
    outcome_.finished_at = net().now();
    set_state(BootState::Failed);
    trace_.back().summary += std::string(" ") + to_string(stage) + " " + to_string(reason) +
                             (detail.empty() ? "" : ": " + detail);
}

std::uint16_t ClientNode::ephemeral() {
    std::uint16_t p = std::uint16_t(49152 + (next_port_++ % 16000));
    return p;
}

std::optional<MacAddress> ClientNode::next_hop(Ipv4Address dst) const {
    if (dst == Ipv4Address::broadcast()) return broadcast_mac;
    if (!subnet_ || subnet_->contains(dst) || !router_) return net().resolve(*port_, dst);
    return net().resolve(*port_, *router_);
}

bool ClientNode::send_udp(std::uint16_t src_port, Endpoint dst, Bytes payload) {
    auto mac = next_hop(dst.ip);
    Packet p;
    p.proto = Proto::Udp;
    p.src = Endpoint{ip_.value_or(Ipv4Address::any()), src_port};
    p.dst = dst;
    p.payload = std::move(payload);
    if (!mac) {
        trace("note", "udp", "no route to " + dst.ip.to_string());
        return false;
    }
    p.dst_mac = *mac;
    p.src_mac = port_->mac;
    trace_packet("tx", p);
    return net().send(*port_, std::move(p)) == SendStatus::Ok;
}

bool ClientNode::send_stream(std::uint16_t src_port, Endpoint dst, Bytes payload) {
    auto mac = next_hop(dst.ip);
    if (!mac) {
        trace("note", "http", "no route to " + dst.ip.to_string());
        return false;
    }
    Packet p;
    p.proto = Proto::Stream;
    p.src = Endpoint{ip_.value_or(Ipv4Address::any()), src_port};
    p.dst = dst;
    p.payload = std::move(payload);
    p.dst_mac = *mac;
    p.src_mac = port_->mac;
    trace_packet("tx", p);
    return net().send(*port_, std::move(p)) == SendStatus::Ok;
}

// ---------------------------------------------------------------- session

Task<> ClientNode::session() {
    outcome_.powered_on_at = net().now();
    set_state(BootState::PowerOn);
    bool from_pxe = true;
    for (int cycle = 0; cycle < cfg_.max_boot_cycles; ++cycle) {
        outcome_.boot_cycles = cycle + 1;
        bool again = co_await boot_cycle(from_pxe);
        if (!again || outcome_.terminal()) co_return;
        trace("note", "session", "script ended without boot; retrying");
        co_await sleep(cfg_.retry_delay);
        if (cfg_.retry == RetryMode::PowerCycle) {
            ip_.reset();
            port_->ip.reset();
            subnet_.reset();
            router_.reset();
            dns_.reset();
            embedded_.clear();
            from_pxe = true;
        } else {
            from_pxe = false;
        }
    }
    fail(BootState::ExecutingScript, BootFailure::NoBoot, "no boot after " + std::to_string(cfg_.max_boot_cycles) + " cycles");
}

Task<bool> ClientNode::boot_cycle(bool from_pxe) {
    set_state(BootState::Discovering);
    auto sel = co_await run_dhcp(from_pxe);
    if (!sel) co_return false;
    set_state(BootState::OfferSelected);
    if (from_pxe) {
        set_state(BootState::FetchingBootloader);
        auto blob = co_await tftp_fetch(sel->next_server, sel->boot_file);
        if (!blob) co_return false;
        outcome_.bootloader_sha256 = cloud::sha256_hex(*blob);
        auto nul = std::find(blob->begin(), blob->end(), std::uint8_t(0));
        embedded_.assign(blob->begin(), nul);
        trace("note", "session", "bootloader sha256=" + outcome_.bootloader_sha256);
    }
    set_state(BootState::ExecutingScript);
    env_.clear();
    env_[std::string(ipxe::var::mac)] = port_->mac.to_string();
    ipxe::Script script;
    try {
        script = ipxe::parse_script(embedded_);
    } catch (const ipxe::ScriptError& e) {
        fail(BootState::ExecutingScript, BootFailure::ScriptError, e.what());
        co_return false;
    }
    auto end = co_await run_script(std::move(script));
    co_return end == ScriptEnd::Ended;
}

Task<std::optional<OfferSelection>> ClientNode::run_dhcp(bool need_boot_info) {
    std::uint32_t xid = xid_seed_++;
    MacAddress mac = port_->mac;
    bool any_offer = false;
    for (Micros wait : cfg_.discover_backoff) {
        auto d = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Discover, xid, mac);
        d.flags = dhcp::flag_broadcast;
        d.set(dhcp::opt::parameter_request, Bytes{1, 3, 6, 60, 66, 67});
        d.set(dhcp::opt::vendor_class, std::string_view("PXEClient:Arch:00000:UNDI:002001"));
        d.set(dhcp::opt::client_arch, Bytes{0, 0});
        send_udp(dhcp::client_port, {Ipv4Address::broadcast(), dhcp::server_port}, dhcp::encode(d));

        std::vector<dhcp::Message> offers;
        Micros deadline = net().now() + wait;
        std::optional<Micros> window_end;
        for (;;) {
            Micros until = window_end ? std::min(*window_end, deadline) : deadline;
            if (until <= net().now()) break;
            auto pkt = co_await receive(
                [xid, mac](const Packet& p) {
                    auto m = decode_reply(p, xid, mac);
                    return m && m->message_type() == dhcp::MessageType::Offer;
                },
                until - net().now());
            if (!pkt) break;
            offers.push_back(*decode_reply(*pkt, xid, mac));
            any_offer = true;
            if (!window_end) window_end = net().now() + cfg_.offer_window;
        }
        if (offers.empty()) continue;

        std::optional<OfferSelection> sel;
        if (need_boot_info) {
            auto r = select_offer(offers);
            if (auto* s = std::get_if<OfferSelection>(&r)) sel = *s;
        } else {
            for (const auto& o : offers)
                if (!o.your_ip.is_unspecified()) {
                    sel = OfferSelection{o, o, o.your_ip, offer_next_server(o).value_or(Ipv4Address{}),
                                         offer_boot_file(o)};
                    break;
                }
        }
        if (!sel) {
            trace("note", "dhcp", "no usable offer among " + std::to_string(offers.size()));
            continue;
        }
        trace("note", "dhcp",
              "selected address " + sel->address.to_string() + " from " +
                  sel->address_offer.ip_option(dhcp::opt::server_id).value_or(Ipv4Address{}).to_string() +
                  (need_boot_info ? ", boot " + sel->boot_file + " from " + sel->next_server.to_string() : ""));

        auto server = sel->address_offer.ip_option(dhcp::opt::server_id);
        auto req = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Request, xid, mac);
        req.flags = dhcp::flag_broadcast;
        req.set(dhcp::opt::requested_ip, sel->address);
        if (server) req.set(dhcp::opt::server_id, *server);
        req.set(dhcp::opt::parameter_request, Bytes{1, 3, 6, 60, 66, 67});
        req.set(dhcp::opt::vendor_class, std::string_view("PXEClient:Arch:00000:UNDI:002001"));
        std::optional<dhcp::Message> ack;
        for (int attempt = 0; attempt < 2 && !ack; ++attempt) {
            send_udp(dhcp::client_port, {Ipv4Address::broadcast(), dhcp::server_port}, dhcp::encode(req));
            auto pkt = co_await receive(
                [xid, mac](const Packet& p) {
                    auto m = decode_reply(p, xid, mac);
                    auto t = m ? m->message_type() : std::nullopt;
                    return t == dhcp::MessageType::Ack || t == dhcp::MessageType::Nak;
                },
                seconds(2));
            if (pkt) ack = decode_reply(*pkt, xid, mac);
        }
        if (!ack || ack->message_type() == dhcp::MessageType::Nak) {
            trace("note", "dhcp", ack ? "request refused" : "no answer to request");
            continue;
        }
        ip_ = ack->your_ip.is_unspecified() ? sel->address : ack->your_ip;
        port_->ip = ip_;
        auto mask = ack->ip_option(dhcp::opt::subnet_mask);
        if (!mask) mask = sel->address_offer.ip_option(dhcp::opt::subnet_mask);
        int prefix = mask ? std::popcount(mask->value()) : 24;
        subnet_ = Ipv4Subnet{Ipv4Address{ip_->value() & (prefix ? ~0u << (32 - prefix) : 0u)}, prefix};
        router_ = ack->ip_option(dhcp::opt::router);
        if (!router_) router_ = sel->address_offer.ip_option(dhcp::opt::router);
        dns_ = ack->ip_option(dhcp::opt::dns_servers);
        if (!dns_) dns_ = sel->address_offer.ip_option(dhcp::opt::dns_servers);
        co_return sel;
    }
    fail(BootState::Discovering, any_offer ? BootFailure::NoUsableOffer : BootFailure::NoOffer,
         any_offer ? "offers lacked a boot file or an address" : "no DHCP offer received");
    co_return std::nullopt;
}

Task<std::optional<Bytes>> ClientNode::tftp_fetch(Ipv4Address server, std::string file) {
    std::uint16_t local = ephemeral();
    tftp::ReadRequest rrq;
    rrq.filename = file;
    rrq.mode = "octet";
    rrq.options = {{"blksize", std::to_string(cfg_.tftp_block_size)}, {"tsize", "0"}};
    Bytes last = tftp::encode(tftp::Packet{rrq});
    Endpoint peer{server, tftp::server_port};
    bool have_tid = false;
    std::size_t block_size = 512;
    std::uint64_t blocks = 0;  // received so far
    Bytes data;
    int timeouts = 0;
    if (!send_udp(local, peer, last)) {
        fail(BootState::FetchingBootloader, BootFailure::TftpError, "no route to " + server.to_string());
        co_return std::nullopt;
    }
    for (;;) {
        auto pkt = co_await receive(
            [&](const Packet& p) {
                return p.proto == Proto::Udp && p.dst.port == local && p.src.ip == server &&
                       (!have_tid || p.src.port == peer.port);
            },
            cfg_.tftp_timeout);
        if (!pkt) {
            if (++timeouts > cfg_.tftp_retries) {
                fail(BootState::FetchingBootloader, BootFailure::TftpError, "timeout");
                co_return std::nullopt;
            }
            send_udp(local, peer, last);
            continue;
        }
        tftp::Packet p;
        try {
            p = tftp::decode(pkt->payload);
        } catch (const codec::DecodeError&) {
            continue;
        }
        if (!have_tid) {
            have_tid = true;
            peer.port = pkt->src.port;
        }
        timeouts = 0;
        if (auto* err = std::get_if<tftp::Error>(&p)) {
            fail(BootState::FetchingBootloader, BootFailure::TftpError,
                 "error " + std::to_string(int(err->code)) + " " + err->message);
            co_return std::nullopt;
        }
        if (auto* oack = std::get_if<tftp::OptionAck>(&p)) {
            if (blocks != 0) continue;
            if (auto bs = tftp::find_option(oack->options, "blksize")) block_size = std::stoul(*bs);
            last = tftp::encode(tftp::Packet{tftp::Ack{0}});
            send_udp(local, peer, last);
            continue;
        }
        auto* d = std::get_if<tftp::Data>(&p);
        if (!d) continue;
        auto expected = std::uint16_t((blocks + 1) & 0xFFFF);
        if (d->block == expected) {
            data.insert(data.end(), d->payload.begin(), d->payload.end());
            ++blocks;
            last = tftp::encode(tftp::Packet{tftp::Ack{d->block}});
            send_udp(local, peer, last);
            if (d->payload.size() < block_size) co_return data;
        } else {
            send_udp(local, peer, last);  // duplicate: repeat our last ACK
        }
    }
}

Task<std::optional<Ipv4Address>> ClientNode::resolve(std::string host) {
    if (auto literal = Ipv4Address::parse(host)) co_return literal;
    if (!dns_) {
        fail(outcome_.state, BootFailure::DnsError, "no DNS server for " + host);
        co_return std::nullopt;
    }
    std::uint16_t local = ephemeral();
    dns::Query q;
    q.id = std::uint16_t(net().rng().next());
    q.name = host;
    Endpoint server{*dns_, dns::server_port};
    for (int attempt = 0; attempt < cfg_.dns_retries; ++attempt) {
        if (!send_udp(local, server, dns::encode_query(q))) break;
        auto id = q.id;
        auto pkt = co_await receive(
            [&, id](const Packet& p) {
                if (p.proto != Proto::Udp || p.dst.port != local || p.src != server) return false;
                try {
                    return dns::decode_answer(p.payload).id == id;
                } catch (const codec::DecodeError&) {
                    return false;
                }
            },
            cfg_.dns_timeout);
        if (!pkt) continue;
        auto a = dns::decode_answer(pkt->payload);
        if (a.rcode != dns::Rcode::NoError || a.records.empty()) {
            fail(outcome_.state, BootFailure::DnsError, host + ": rcode " + std::to_string(int(a.rcode)));
            co_return std::nullopt;
        }
        co_return a.records.front().address;
    }
    fail(outcome_.state, BootFailure::DnsError, host + ": no answer");
    co_return std::nullopt;
}

Task<std::optional<http::Response>> ClientNode::http_get(std::string url_text) {
    auto u = url::parse(url_text);
    if (!u || u->scheme != "http") {
        fail(outcome_.state, BootFailure::HttpError, "unsupported URL " + url_text);
        co_return std::nullopt;
    }
    auto ip = co_await resolve(u->host);
    if (!ip) co_return std::nullopt;
    Endpoint server{*ip, u->port ? u->port : std::uint16_t(80)};
    std::uint16_t local = ephemeral();
    http::Request req;
    req.method = "GET";
    req.target = u->target();
    req.headers["Host"] = u->host;
    req.headers["User-Agent"] = "iPXE/sim";
    auto wire = http::serialize(req);
    if (!send_stream(local, server, Bytes(wire.begin(), wire.end()))) {
        fail(outcome_.state, BootFailure::HttpError, "no route to " + server.to_string());
        co_return std::nullopt;
    }
    auto pkt = co_await receive(
        [&](const Packet& p) { return p.proto == Proto::Stream && p.dst.port == local && p.src == server; },
        cfg_.http_timeout);
    if (!pkt) {
        fail(outcome_.state, BootFailure::HttpError, "timeout fetching " + url_text);
        co_return std::nullopt;
    }
    auto resp = http::parse_response(as_text(pkt->payload));
    if (!resp) {
        fail(outcome_.state, BootFailure::HttpError, "malformed response from " + url_text);
        co_return std::nullopt;
    }
    co_return resp;
}

std::optional<std::string> ClientNode::next_answer(const std::string& var) {
    auto it = creds_.answers.find(var);
    if (it == creds_.answers.end()) return std::nullopt;
    auto& i = next_answer_[var];
    if (i >= it->second.size()) return std::nullopt;
    return it->second[i++];
}

Task<ClientNode::ScriptEnd> ClientNode::run_script(ipxe::Script script) {
    int depth = 0;
    bool login_pending = false;
    bool kernel_seen = false;
    std::vector<std::string> menu;
    std::size_t pc = 0;
    auto stopped = [this] { return outcome_.state == BootState::Failed || outcome_.suspended; };

    while (pc < script.statements.size()) {
        ipxe::Statement st;
        try {
            st = ipxe::substitute(script.statements[pc++], env_);
        } catch (const ipxe::ScriptError& e) {
            fail(outcome_.state, BootFailure::ScriptError, e.what());
            co_return ScriptEnd::Stopped;
        }
        if (auto* echo = std::get_if<ipxe::Echo>(&st)) {
            trace("note", "session", "echo " + echo->text);
        } else if (auto* set = std::get_if<ipxe::Set>(&st)) {
            env_[set->var] = set->value;
        } else if (auto* prompt = std::get_if<ipxe::Prompt>(&st)) {
            set_state(BootState::AwaitingCredentials);
            auto answer = next_answer(prompt->var);
            if (!answer) {
                if (creds_.on_exhausted == CredentialSource::OnExhausted::Suspend) {
                    outcome_.suspended = true;
                    outcome_.finished_at = net().now();
                    trace("note", "session", "waiting for input: " + prompt->var);
                } else {
                    fail(BootState::AwaitingCredentials, BootFailure::NoCredentials, "no answer for " + prompt->var);
                }
                co_return ScriptEnd::Stopped;
            }
            env_[prompt->var] = *answer;
            trace("note", "session", "prompt " + prompt->var + (prompt->masked ? " = ****" : " = " + *answer));
            set_state(BootState::ExecutingScript);
        } else if (std::holds_alternative<ipxe::MenuStart>(st)) {
            menu.clear();
        } else if (auto* item = std::get_if<ipxe::MenuItem>(&st)) {
            menu.push_back(item->key);
        } else if (auto* choose = std::get_if<ipxe::Choose>(&st)) {
            auto answer = next_answer(choose->var);
            if (!answer) {
                if (menu.empty()) {
                    fail(outcome_.state, BootFailure::ScriptError, "choose without menu items");
                    co_return ScriptEnd::Stopped;
                }
                answer = menu.front();
            }
            env_[choose->var] = *answer;
            trace("note", "session", "choose " + choose->var + " = " + *answer);
        } else if (std::holds_alternative<ipxe::Login>(st)) {
            set_state(BootState::AwaitingCredentials);
            std::optional<CredentialSource::Login> login;
            if (next_login_ < creds_.logins.size()) {
                login = creds_.logins[next_login_++];
            } else if (creds_.interactive_login) {
                login = creds_.interactive_login(outcome_.auth_attempts);
            }
            if (!login) {
                if (outcome_.auth_rejections > 0) {
                    fail(BootState::Authenticating, BootFailure::AuthRejected, "credentials exhausted");
                } else if (creds_.on_exhausted == CredentialSource::OnExhausted::Suspend) {
                    outcome_.suspended = true;
                    outcome_.finished_at = net().now();
                    trace("note", "session", "waiting for login");
                } else {
                    fail(BootState::AwaitingCredentials, BootFailure::NoCredentials, "no credentials");
                }
                co_return ScriptEnd::Stopped;
            }
            env_[std::string(ipxe::var::username)] = login->username;
            env_[std::string(ipxe::var::password)] = login->password;
            ++outcome_.auth_attempts;
            login_pending = true;
            trace("note", "session", "login " + login->username);
        } else if (auto* chain = std::get_if<ipxe::Chain>(&st)) {
            if (++depth > cfg_.max_chain_depth) {
                fail(outcome_.state, BootFailure::ScriptError, "chain depth exceeded");
                co_return ScriptEnd::Stopped;
            }
            if (login_pending) set_state(BootState::Authenticating);
            auto resp = co_await http_get(chain->url);
            if (!resp) co_return ScriptEnd::Stopped;
            if (resp->status != 200) {
                fail(outcome_.state, BootFailure::HttpError, std::to_string(resp->status) + " from " + chain->url);
                co_return ScriptEnd::Stopped;
            }
            try {
                script = ipxe::parse_script(resp->body);
            } catch (const ipxe::ScriptError& e) {
                fail(outcome_.state, BootFailure::ScriptError, e.what());
                co_return ScriptEnd::Stopped;
            }
            pc = 0;
            menu.clear();
            bool issues_kernel = false;
            for (const auto& s : script.statements) issues_kernel |= std::holds_alternative<ipxe::Kernel>(s);
            if (login_pending) {
                login_pending = false;
                if (!issues_kernel) {
                    ++outcome_.auth_rejections;
                    trace("note", "session", "authentication rejected (" + std::to_string(outcome_.auth_rejections) + ")");
                    if (outcome_.auth_rejections >= cfg_.max_auth_attempts) {
                        fail(BootState::Authenticating, BootFailure::AuthRejected,
                             std::to_string(outcome_.auth_rejections) + " rejected attempts");
                        co_return ScriptEnd::Stopped;
                    }
                }
            }
            if (!issues_kernel) set_state(BootState::ExecutingScript);
        } else if (auto* k = std::get_if<ipxe::Kernel>(&st); k || std::holds_alternative<ipxe::Initrd>(st)) {
            std::string url_text = k ? k->url : std::get<ipxe::Initrd>(st).url;
            set_state(BootState::FetchingArtifacts);
            auto resp = co_await http_get(url_text);
            if (!resp) co_return ScriptEnd::Stopped;
            if (resp->status != 200) {
                fail(BootState::FetchingArtifacts, BootFailure::HttpError,
                     std::to_string(resp->status) + " from " + url_text);
                co_return ScriptEnd::Stopped;
            }
            auto digest = cloud::sha256_hex(std::string_view(resp->body));
            auto claimed = resp->header(cloud::digest_header);
            if (!claimed || *claimed != digest) {
                fail(BootState::FetchingArtifacts, BootFailure::DigestMismatch,
                     url_text + " sha256=" + digest + " expected=" + claimed.value_or("(none)"));
                co_return ScriptEnd::Stopped;
            }
            outcome_.artifact_digests[url_text] = digest;
            trace("note", "session", "verified " + url_text + " sha256=" + digest);
            if (k) {
                kernel_seen = true;
                outcome_.os_id = os_of(url_text);
            }
        } else if (std::holds_alternative<ipxe::Boot>(st)) {
            if (!kernel_seen) {
                fail(outcome_.state, BootFailure::ScriptError, "boot without kernel");
                co_return ScriptEnd::Stopped;
            }
            outcome_.finished_at = net().now();
            set_state(BootState::Booted);
            trace_.back().summary += " os=" + outcome_.os_id;
            co_return ScriptEnd::Booted;
        }
        if (stopped()) co_return ScriptEnd::Stopped;
    }
    co_return ScriptEnd::Ended;
}

}  // namespace sdb::sim
