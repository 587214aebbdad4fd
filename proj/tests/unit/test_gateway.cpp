#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "chunk_oracle.hpp"
#include "sdb/gateway/gateway.hpp"
#include "sdb/gateway/probe.hpp"
#include "sdb/gateway/tftp_server.hpp"
#include "sdb/ipxe/script.hpp"

using namespace sdb;
using namespace sdb::gateway;

namespace {

MacAddress mac(std::uint8_t last) { return MacAddress{{0x52, 0x54, 0x00, 0x12, 0x34, last}}; }

dhcp::Message discover(MacAddress m, bool pxe = true, std::uint32_t xid = 0x1234) {
    auto msg = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Discover, xid, m);
    if (pxe) msg.set(dhcp::opt::vendor_class, std::string_view("PXEClient:Arch:00000:UNDI:002001"));
    return msg;
}

dhcp::Message request(MacAddress m, Ipv4Address want, Ipv4Address server) {
    auto msg = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Request, 0x1234, m);
    msg.set(dhcp::opt::requested_ip, want);
    msg.set(dhcp::opt::server_id, server);
    return msg;
}

GatewayConfig small_blob_config(std::size_t blob_size) {
    GatewayConfig cfg;
    cfg.bootloader_blob.resize(blob_size);
    for (std::size_t i = 0; i < blob_size; ++i) cfg.bootloader_blob[i] = std::uint8_t(i * 7 + 1);
    return cfg;
}

class FakeLink : public UpstreamLink {
public:
    AttachResult attach(const ConnectivityProfile& p) override {
        if (p.kind == LinkKind::Wired) return AttachResult::Connected;
        if (p.ssid != "lab") return AttachResult::NoSuchNetwork;
        return p.passphrase == "secret" ? AttachResult::Connected : AttachResult::AuthFailure;
    }
};

}  // namespace

TEST(GatewayConfig, DefaultsValidate) {
    GatewayConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.pool_size(), 101u);
}

TEST(GatewayConfig, RejectsPoolContainingGateway) {
    GatewayConfig cfg;
    cfg.pool_first = Ipv4Address{192, 168, 77, 1};
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GatewayConfig, RejectsEmptyBootFilename) {
    GatewayConfig cfg;
    cfg.boot_filename.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GatewayConfig, JsonRoundTripAndUnknownKey) {
    GatewayConfig cfg;
    cfg.probe_retries = 5;
    cfg.ports.dhcp = 10067;
    auto back = gateway_config_from_json(to_json(cfg));
    EXPECT_EQ(back.probe_retries, 5);
    EXPECT_EQ(back.ports.dhcp, 10067);
    EXPECT_EQ(back.pool_last, cfg.pool_last);
    auto j = to_json(cfg);
    j["lease_ttl"] = 5;
    EXPECT_THROW(gateway_config_from_json(j), ConfigError);
}

TEST(GatewayConfig, BootloaderEmbedsChainScript) {
    auto blob = make_bootloader_blob("boot.cloud.example");
    EXPECT_EQ(blob.size(), 65536u);
    auto script = ipxe::parse_script(embedded_script(blob));
    ASSERT_EQ(script.statements.size(), 1u);
    EXPECT_EQ(std::get<ipxe::Chain>(script.statements[0]).url, "http://boot.cloud.example/boot");
}

TEST(Standalone, DiscoverGetsFullOffer) {
    Gateway gw{GatewayConfig{}};
    auto offer = gw.handle_dhcp(discover(mac(1)), 0);
    ASSERT_TRUE(offer);
    EXPECT_EQ(offer->message_type(), dhcp::MessageType::Offer);
    EXPECT_TRUE(gw.config().in_pool(offer->your_ip));
    EXPECT_EQ(offer->ip_option(dhcp::opt::dns_servers), gw.address());
    EXPECT_EQ(offer->ip_option(dhcp::opt::server_id), gw.address());
    EXPECT_EQ(offer->server_ip, gw.address());
    EXPECT_EQ(offer->boot_file, "boot.ipxe");
    EXPECT_EQ(offer->string_option(dhcp::opt::bootfile_name), "boot.ipxe");
    EXPECT_EQ(offer->string_option(dhcp::opt::tftp_server_name), "192.168.77.1");
    // The reply must survive the wire.
    EXPECT_EQ(dhcp::decode(dhcp::encode(*offer)), *offer);
}

TEST(Standalone, RepeatDiscoverKeepsAddress) {
    Gateway gw{GatewayConfig{}};
    auto a = gw.handle_dhcp(discover(mac(1)), 0);
    auto b = gw.handle_dhcp(discover(mac(1)), 10'000);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->your_ip, b->your_ip);
    auto c = gw.handle_dhcp(discover(mac(2)), 10'000);
    ASSERT_TRUE(c);
    EXPECT_NE(c->your_ip, a->your_ip);
}

TEST(Standalone, PoolOfOneExhausts) {
    GatewayConfig cfg;
    cfg.pool_last = cfg.pool_first;
    Gateway gw{cfg};
    EXPECT_TRUE(gw.handle_dhcp(discover(mac(1)), 0));
    EXPECT_FALSE(gw.handle_dhcp(discover(mac(2)), 0));
    auto events = gw.events();
    EXPECT_TRUE(std::any_of(events.begin(), events.end(),
                            [](const GatewayEvent& e) { return e.kind == "PoolExhausted"; }));
}

TEST(Standalone, ExpiredLeaseIsReused) {
    GatewayConfig cfg;
    cfg.pool_last = cfg.pool_first;
    cfg.lease_ttl_s = 10;
    Gateway gw{cfg};
    EXPECT_TRUE(gw.handle_dhcp(discover(mac(1)), 0));
    EXPECT_TRUE(gw.handle_dhcp(discover(mac(2)), 10'001));
}

TEST(Standalone, RequestAckAndNak) {
    Gateway gw{GatewayConfig{}};
    auto offer = gw.handle_dhcp(discover(mac(1)), 0);
    ASSERT_TRUE(offer);
    auto ack = gw.handle_dhcp(request(mac(1), offer->your_ip, gw.address()), 5);
    ASSERT_TRUE(ack);
    EXPECT_EQ(ack->message_type(), dhcp::MessageType::Ack);
    EXPECT_EQ(ack->your_ip, offer->your_ip);

    auto nak = gw.handle_dhcp(request(mac(2), offer->your_ip, gw.address()), 5);
    ASSERT_TRUE(nak);
    EXPECT_EQ(nak->message_type(), dhcp::MessageType::Nak);

    auto outside = gw.handle_dhcp(request(mac(3), Ipv4Address{10, 0, 0, 9}, gw.address()), 5);
    ASSERT_TRUE(outside);
    EXPECT_EQ(outside->message_type(), dhcp::MessageType::Nak);
}

TEST(Standalone, RequestForOtherServerIsSilentAndFreesOffer) {
    GatewayConfig cfg;
    cfg.pool_last = cfg.pool_first;
    Gateway gw{cfg};
    auto offer = gw.handle_dhcp(discover(mac(1)), 0);
    ASSERT_TRUE(offer);
    EXPECT_FALSE(gw.handle_dhcp(request(mac(1), Ipv4Address{10, 0, 0, 5}, Ipv4Address{10, 0, 0, 1}), 1));
    EXPECT_TRUE(gw.handle_dhcp(discover(mac(2)), 2));
}

TEST(Standalone, ReleaseFreesAddress) {
    GatewayConfig cfg;
    cfg.pool_last = cfg.pool_first;
    Gateway gw{cfg};
    ASSERT_TRUE(gw.handle_dhcp(discover(mac(1)), 0));
    auto rel = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Release, 1, mac(1));
    EXPECT_FALSE(gw.handle_dhcp(rel, 1));
    EXPECT_TRUE(gw.handle_dhcp(discover(mac(2)), 2));
}

TEST(Standalone, RepliesIgnoredAsInput) {
    Gateway gw{GatewayConfig{}};
    auto m = discover(mac(1));
    m.op = dhcp::Op::BootReply;
    EXPECT_FALSE(gw.handle_dhcp(m, 0));
}

// Any interleaving of DISCOVER/REQUEST from at most pool-size MACs yields unique in-pool
// bindings.
TEST(Standalone, LeaseConsistencyProperty) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        std::mt19937_64 rng(seed);
        GatewayConfig cfg;
        cfg.pool_last = Ipv4Address{cfg.pool_first.value() + std::uint32_t(rng() % 8)};
        Gateway gw{cfg};
        std::size_t macs = 1 + rng() % cfg.pool_size();
        std::int64_t now = 0;
        for (int step = 0; step < 60; ++step) {
            auto m = mac(std::uint8_t(rng() % macs));
            now += std::int64_t(rng() % 50);
            if (rng() % 2) {
                gw.handle_dhcp(discover(m, rng() % 2), now);
            } else {
                Ipv4Address want{cfg.pool_first.value() + std::uint32_t(rng() % cfg.pool_size())};
                gw.handle_dhcp(request(m, want, gw.address()), now);
            }
        }
        std::set<Ipv4Address> seen;
        for (const auto& [m, lease] : gw.state().leases) {
            EXPECT_TRUE(cfg.in_pool(lease.address)) << "seed " << seed;
            EXPECT_TRUE(seen.insert(lease.address).second) << "seed " << seed;
        }
    }
}

TEST(Standalone, ConcurrentDiscoversGetDistinctAddresses) {
    Gateway gw{GatewayConfig{}};
    std::vector<std::thread> threads;
    std::vector<std::optional<dhcp::Message>> offers(64);
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (int i = t; i < 64; i += 4) offers[i] = gw.handle_dhcp(discover(mac(std::uint8_t(i))), 0);
        });
    for (auto& th : threads) th.join();
    std::set<Ipv4Address> seen;
    for (const auto& o : offers) {
        ASSERT_TRUE(o);
        EXPECT_TRUE(seen.insert(o->your_ip).second);
    }
}

TEST(Proxy, PxeDiscoverGetsAddresslessOffer) {
    Gateway gw{GatewayConfig{}};
    auto offer = gw.handle_dhcp_proxy(discover(mac(1)), 0);
    ASSERT_TRUE(offer);
    EXPECT_EQ(offer->message_type(), dhcp::MessageType::Offer);
    EXPECT_TRUE(offer->your_ip.is_unspecified());
    EXPECT_EQ(offer->server_ip, gw.address());
    EXPECT_EQ(offer->boot_file, "boot.ipxe");
    EXPECT_EQ(offer->string_option(dhcp::opt::bootfile_name), "boot.ipxe");
    EXPECT_EQ(offer->string_option(dhcp::opt::vendor_class), "PXEClient");
    EXPECT_FALSE(offer->find(dhcp::opt::dns_servers));
    EXPECT_FALSE(offer->find(dhcp::opt::router));
    EXPECT_TRUE(gw.state().leases.empty());
}

TEST(Proxy, NonPxeDiscoverIgnored) {
    Gateway gw{GatewayConfig{}};
    EXPECT_FALSE(gw.handle_dhcp_proxy(discover(mac(1), false), 0));
}

TEST(Proxy, RequestsIgnored) {
    Gateway gw{GatewayConfig{}};
    auto r = request(mac(1), Ipv4Address{10, 0, 0, 5}, Ipv4Address{10, 0, 0, 1});
    r.set(dhcp::opt::vendor_class, std::string_view("PXEClient"));
    EXPECT_FALSE(gw.handle_dhcp_proxy(r, 0));
}

// Whichever mode, every OFFER steers to the gateway and its boot file; proxy OFFERs never
// carry an address.
TEST(Gateway, OfferSteeringProperty) {
    FakeLink link;
    Gateway gw{GatewayConfig{}};
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        if (i == 250) {
            gw.attach_upstream(ConnectivityProfile::wired(), link, i);
            gw.record_probe_result(Ipv4Address{10, 0, 0, 1}, i);
        }
        auto reply = gw.handle_dhcp(discover(mac(std::uint8_t(rng() % 50)), rng() % 2), i);
        if (!reply || reply->message_type() != dhcp::MessageType::Offer) continue;
        EXPECT_EQ(reply->server_ip, gw.address());
        EXPECT_EQ(reply->boot_file, gw.config().boot_filename);
        if (gw.mode().kind == ModeKind::Proxy) {
            EXPECT_TRUE(reply->your_ip.is_unspecified());
            EXPECT_FALSE(reply->find(dhcp::opt::dns_servers));
        }
    }
    EXPECT_EQ(gw.mode().kind, ModeKind::Proxy);
}

TEST(Dns, EveryNameResolvesToGateway) {
    Gateway gw{GatewayConfig{}};
    for (const char* name : {"boot.cloud.example", "anything.at.all", "x"}) {
        dns::Query q{.id = 77, .recursion_desired = true, .name = name};
        auto a = gw.answer_dns(q);
        EXPECT_EQ(a.id, 77);
        EXPECT_EQ(a.rcode, dns::Rcode::NoError);
        ASSERT_EQ(a.records.size(), 1u);
        EXPECT_EQ(a.records[0].name, name);
        EXPECT_EQ(a.records[0].address, gw.address());
        EXPECT_EQ(a.records[0].ttl, 60u);
    }
}

TEST(Dns, AaaaIsNotImplemented) {
    Gateway gw{GatewayConfig{}};
    dns::Query q{.id = 9, .name = "boot.cloud.example", .qtype = dns::type_aaaa};
    auto a = gw.answer_dns(q);
    EXPECT_EQ(a.rcode, dns::Rcode::NotImplemented);
    EXPECT_TRUE(a.records.empty());
}

TEST(Dns, BytesEntryPoint) {
    Gateway gw{GatewayConfig{}};
    dns::Query q{.id = 0xBEEF, .name = "boot.cloud.example"};
    auto raw = gw.handle_dns_bytes(dns::encode_query(q));
    ASSERT_TRUE(raw);
    auto a = dns::decode_answer(*raw);
    ASSERT_EQ(a.records.size(), 1u);
    EXPECT_EQ(a.records[0].address, gw.address());
    EXPECT_FALSE(gw.handle_dns_bytes(Bytes{1, 2, 3}));
}

TEST(Tftp, DefaultBlockSizeMatchesChunker) {
    for (std::size_t n : {0, 511, 512, 513, 1024}) {
        auto cfg = small_blob_config(n);
        auto stream = serve_tftp(tftp::ReadRequest{"boot.ipxe", "octet", {}}, cfg);
        auto expected = test::brute_force_chunks(cfg.bootloader_blob, 512);
        ASSERT_EQ(stream.size(), expected.size()) << n;
        for (std::size_t i = 0; i < stream.size(); ++i) {
            const auto& d = std::get<tftp::Data>(stream[i]);
            EXPECT_EQ(d.block, i + 1);
            EXPECT_EQ(d.payload, expected[i]);
        }
    }
}

TEST(Tftp, ThousandTwentyFourAt512) {
    auto cfg = small_blob_config(1024);
    auto stream = serve_tftp(tftp::ReadRequest{"boot.ipxe", "octet", {}}, cfg);
    ASSERT_EQ(stream.size(), 3u);
    EXPECT_EQ(std::get<tftp::Data>(stream[0]).payload.size(), 512u);
    EXPECT_EQ(std::get<tftp::Data>(stream[1]).payload.size(), 512u);
    EXPECT_EQ(std::get<tftp::Data>(stream[2]).payload.size(), 0u);
}

TEST(Tftp, BlksizeNegotiation) {
    auto cfg = small_blob_config(1024);
    auto stream = serve_tftp(tftp::ReadRequest{"boot.ipxe", "octet", {{"blksize", "1024"}}}, cfg);
    auto expected = test::brute_force_chunks(cfg.bootloader_blob, 1024);
    ASSERT_EQ(stream.size(), 1 + expected.size());
    const auto& oack = std::get<tftp::OptionAck>(stream[0]);
    EXPECT_EQ(tftp::find_option(oack.options, "blksize"), "1024");
    EXPECT_EQ(std::get<tftp::Data>(stream[1]).payload, expected[0]);
    EXPECT_EQ(std::get<tftp::Data>(stream[2]).payload.size(), 0u);
}

TEST(Tftp, TsizeReported) {
    auto cfg = small_blob_config(3000);
    auto stream = serve_tftp(tftp::ReadRequest{"boot.ipxe", "octet", {{"tsize", "0"}}}, cfg);
    const auto& oack = std::get<tftp::OptionAck>(stream[0]);
    EXPECT_EQ(tftp::find_option(oack.options, "tsize"), "3000");
    EXPECT_FALSE(tftp::find_option(oack.options, "blksize"));
    EXPECT_EQ(stream.size(), 1 + tftp::data_packet_count(3000, 512));
}

TEST(Tftp, OtherFileNotFound) {
    GatewayConfig cfg;
    cfg.ensure_bootloader();
    auto stream = serve_tftp(tftp::ReadRequest{"other.bin", "octet", {}}, cfg);
    ASSERT_EQ(stream.size(), 1u);
    EXPECT_EQ(std::get<tftp::Error>(stream[0]).code, 1);
}

TEST(Tftp, NonRrqIsIllegal) {
    GatewayConfig cfg;
    cfg.ensure_bootloader();
    auto opened = TftpTransfer::open(tftp::Ack{0}, cfg);
    EXPECT_FALSE(opened.transfer);
    EXPECT_EQ(std::get<tftp::Error>(opened.reply).code, 4);
}

TEST(Tftp, DuplicateAckAndRetransmit) {
    auto cfg = small_blob_config(1500);
    auto opened = TftpTransfer::open(tftp::ReadRequest{"boot.ipxe", "octet", {}}, cfg);
    ASSERT_TRUE(opened.transfer);
    auto& t = *opened.transfer;
    EXPECT_EQ(t.retransmit(), opened.reply);
    auto d2 = t.on_ack(1);
    ASSERT_TRUE(d2);
    EXPECT_FALSE(t.on_ack(1));  // duplicate
    EXPECT_EQ(t.retransmit(), *d2);
    auto last = t.on_ack(2);
    ASSERT_TRUE(last);
    EXPECT_EQ(std::get<tftp::Data>(*last).payload.size(), 1500u - 2 * 512);
    EXPECT_FALSE(t.done());
    EXPECT_FALSE(t.on_ack(3));
    EXPECT_TRUE(t.done());
    EXPECT_EQ(t.total_blocks(), 3u);
}

TEST(Tftp, BlockNumbersWrap) {
    auto cfg = small_blob_config(70'000 * 8);
    auto stream = serve_tftp(tftp::ReadRequest{"boot.ipxe", "octet", {{"blksize", "8"}}}, cfg);
    ASSERT_EQ(stream.size(), 1 + 70'001u);
    EXPECT_EQ(std::get<tftp::Data>(stream[65535]).block, 65535);
    EXPECT_EQ(std::get<tftp::Data>(stream[65536]).block, 0);
    EXPECT_EQ(std::get<tftp::Data>(stream[65537]).block, 1);
    Bytes joined;
    for (std::size_t i = 1; i < stream.size(); ++i) {
        const auto& p = std::get<tftp::Data>(stream[i]).payload;
        joined.insert(joined.end(), p.begin(), p.end());
    }
    EXPECT_EQ(joined, cfg.bootloader_blob);
}

TEST(Portal, RootOffersMenuAndWifiForm) {
    Gateway gw{GatewayConfig{}};
    auto res = gw.portal_request("/", {}, 0);
    EXPECT_FALSE(res.attach_request);
    auto script = ipxe::parse_script(res.script);
    bool menu = false, ssid = false, masked_pass = false;
    std::set<std::string> items;
    for (const auto& st : script.statements) {
        if (std::holds_alternative<ipxe::MenuStart>(st)) menu = true;
        if (auto* it = std::get_if<ipxe::MenuItem>(&st)) items.insert(it->key);
        if (auto* p = std::get_if<ipxe::Prompt>(&st)) {
            if (p->var == "ssid") ssid = true;
            if (p->var == "passphrase" && p->masked) masked_pass = true;
        }
    }
    EXPECT_TRUE(menu);
    EXPECT_EQ(items, (std::set<std::string>{"wifi", "cellular", "wired"}));
    EXPECT_TRUE(ssid);
    EXPECT_TRUE(masked_pass);
}

TEST(Portal, WifiSubmitStoresProfile) {
    Gateway gw{GatewayConfig{}};
    auto res = gw.portal_request("/portal/connect", {{"kind", "wifi"}, {"ssid", "lab"}, {"pass", "secret"}}, 5);
    ASSERT_TRUE(res.attach_request);
    EXPECT_EQ(res.attach_request->ssid, "lab");
    EXPECT_EQ(res.attach_request->passphrase, "secret");
    auto st = gw.state();
    ASSERT_TRUE(st.profile);
    EXPECT_EQ(st.profile->status, LinkStatus::Connecting);
    auto script = ipxe::parse_script(res.script);
    for (const auto& s : script.statements) EXPECT_TRUE(std::holds_alternative<ipxe::Echo>(s));
}

TEST(Portal, EmptySsidRePrompts) {
    Gateway gw{GatewayConfig{}};
    auto res = gw.portal_request("/portal/connect", {{"kind", "wifi"}, {"ssid", ""}}, 0);
    EXPECT_FALSE(res.attach_request);
    EXPECT_FALSE(gw.state().profile);
    auto script = ipxe::parse_script(res.script);
    ASSERT_FALSE(script.statements.empty());
    EXPECT_NE(std::get<ipxe::Echo>(script.statements[0]).text.find("Error"), std::string::npos);
    EXPECT_TRUE(std::any_of(script.statements.begin(), script.statements.end(), [](const auto& s) {
        auto* p = std::get_if<ipxe::Prompt>(&s);
        return p && p->var == "ssid";
    }));
}

TEST(Portal, CellularFromMenuShowsCellularForm) {
    Gateway gw{GatewayConfig{}};
    auto res = gw.portal_request("/portal/connect", {{"kind", "cellular"}, {"ssid", ""}}, 0);
    EXPECT_FALSE(res.attach_request);
    EXPECT_NE(res.script.find("prompt apn"), std::string::npos);
    auto done = gw.portal_request("/portal/connect", {{"kind", "cellular"}, {"apn", "internet"}}, 0);
    ASSERT_TRUE(done.attach_request);
    EXPECT_EQ(done.attach_request->kind, LinkKind::Cellular);
    EXPECT_EQ(done.attach_request->apn, "internet");
}

// Every portal path, with arbitrary field values, returns a script the interpreter accepts.
TEST(Portal, ScriptsAlwaysParse) {
    Gateway gw{GatewayConfig{}};
    std::mt19937_64 rng(3);
    const std::vector<std::string> paths = {"/", "/boot", "/portal/form", "/portal/connect", "/x/y"};
    const std::vector<std::string> kinds = {"wifi", "cellular", "wired", "", "bogus"};
    const std::string alphabet = "ab ${}%&=?#\t\\\"'";
    for (int i = 0; i < 2000; ++i) {
        std::map<std::string, std::string> fields;
        fields["kind"] = kinds[rng() % kinds.size()];
        for (const char* k : {"ssid", "passphrase", "apn", "username", "password"}) {
            if (rng() % 2) continue;
            std::string v;
            for (std::size_t n = rng() % 6; n > 0; --n) v += alphabet[rng() % alphabet.size()];
            fields[k] = v;
        }
        auto res = gw.portal_request(paths[rng() % paths.size()], fields, i);
        EXPECT_NO_THROW(ipxe::parse_script(res.script)) << res.script;
    }
}

TEST(Portal, HttpAdapter) {
    Gateway gw{GatewayConfig{}};
    http::Request req;
    req.target = "/portal/connect?kind=wifi&ssid=lab&passphrase=secret";
    std::optional<ConnectivityProfile> attach;
    auto resp = gw.handle_http(req, 0, &attach);
    EXPECT_EQ(resp.status, 200);
    EXPECT_EQ(resp.header("Content-Type"), "text/plain");
    ASSERT_TRUE(attach);
    EXPECT_EQ(attach->ssid, "lab");
}

TEST(Attach, CorrectCredentialsConnect) {
    FakeLink link;
    Gateway gw{GatewayConfig{}};
    EXPECT_EQ(gw.attach_upstream(ConnectivityProfile::wifi("lab", "secret"), link, 0), LinkStatus::Connected);
    auto st = gw.state();
    EXPECT_TRUE(st.upstream_connected);
    EXPECT_EQ(st.profile->status, LinkStatus::Connected);
    EXPECT_EQ(st.mode.kind, ModeKind::Standalone);  // until the probe succeeds
    gw.record_probe_result(Ipv4Address{10, 0, 0, 1}, 1);
    EXPECT_EQ(gw.mode(), (GatewayMode{ModeKind::Proxy, Ipv4Address{10, 0, 0, 1}}));
}

TEST(Attach, WrongPassphraseFails) {
    FakeLink link;
    Gateway gw{GatewayConfig{}};
    EXPECT_EQ(gw.attach_upstream(ConnectivityProfile::wifi("lab", "nope"), link, 0), LinkStatus::Failed);
    EXPECT_EQ(gw.state().profile->failure, "AuthFailure");
    EXPECT_EQ(gw.attach_upstream(ConnectivityProfile::wifi("other", "secret"), link, 0), LinkStatus::Failed);
    EXPECT_EQ(gw.state().profile->failure, "NoSuchNetwork");
    gw.record_probe_result(Ipv4Address{10, 0, 0, 1}, 1);
    EXPECT_EQ(gw.mode().kind, ModeKind::Standalone);
}

TEST(Attach, WiredConnects) {
    FakeLink link;
    Gateway gw{GatewayConfig{}};
    EXPECT_EQ(gw.attach_upstream(ConnectivityProfile::wired(), link, 0), LinkStatus::Connected);
}

TEST(Attach, ReattachDropsProxyUntilReprobe) {
    FakeLink link;
    Gateway gw{GatewayConfig{}};
    gw.attach_upstream(ConnectivityProfile::wired(), link, 0);
    gw.record_probe_result(Ipv4Address{10, 0, 0, 1}, 1);
    ASSERT_EQ(gw.mode().kind, ModeKind::Proxy);
    gw.attach_upstream(ConnectivityProfile::wired(), link, 2);
    EXPECT_EQ(gw.mode().kind, ModeKind::Standalone);
    gw.record_probe_result(std::nullopt, 3);
    EXPECT_EQ(gw.mode().kind, ModeKind::Standalone);
}

TEST(Sanitize, StripsBootSteering) {
    auto m = dhcp::make_message(dhcp::Op::BootReply, dhcp::MessageType::Offer, 1, mac(1));
    m.your_ip = Ipv4Address{10, 0, 0, 50};
    m.server_ip = Ipv4Address{10, 0, 0, 66};
    m.boot_file = "evil.efi";
    m.server_name = "evil";
    m.set(dhcp::opt::bootfile_name, std::string_view("evil.efi"));
    m.set(dhcp::opt::tftp_server_name, std::string_view("10.0.0.66"));
    m.set(dhcp::opt::vendor_class, std::string_view("PXEClient"));
    m.set(dhcp::opt::dns_servers, Ipv4Address{10, 0, 0, 1});
    EXPECT_TRUE(Gateway::sanitize_upstream_reply(m));
    EXPECT_TRUE(m.server_ip.is_unspecified());
    EXPECT_TRUE(m.boot_file.empty());
    EXPECT_TRUE(m.server_name.empty());
    EXPECT_FALSE(m.find(dhcp::opt::bootfile_name));
    EXPECT_FALSE(m.find(dhcp::opt::tftp_server_name));
    EXPECT_FALSE(m.is_pxe_client());
    EXPECT_EQ(m.your_ip, (Ipv4Address{10, 0, 0, 50}));
    EXPECT_EQ(m.ip_option(dhcp::opt::dns_servers), (Ipv4Address{10, 0, 0, 1}));
    EXPECT_FALSE(Gateway::sanitize_upstream_reply(m));
}

TEST(Probe, OfferSwitchesToProxy) {
    GatewayConfig cfg;
    UpstreamProbe probe(cfg, mac(9), 42);
    auto d = dhcp::decode(probe.start());
    EXPECT_EQ(d.message_type(), dhcp::MessageType::Discover);
    auto offer = dhcp::make_message(dhcp::Op::BootReply, dhcp::MessageType::Offer, 42, mac(9));
    offer.set(dhcp::opt::server_id, Ipv4Address{10, 0, 0, 1});
    auto wrong_xid = offer;
    wrong_xid.transaction_id = 43;
    EXPECT_FALSE(probe.on_packet(dhcp::encode(wrong_xid)));
    EXPECT_FALSE(probe.on_packet(Bytes{0, 1}));
    EXPECT_TRUE(probe.on_packet(dhcp::encode(offer)));
    EXPECT_EQ(probe.result(), (GatewayMode{ModeKind::Proxy, Ipv4Address{10, 0, 0, 1}}));
}

TEST(Probe, SilenceMeansStandaloneAfterRetries) {
    GatewayConfig cfg;
    cfg.probe_retries = 3;
    UpstreamProbe probe(cfg, mac(9), 42);
    probe.start();
    EXPECT_TRUE(probe.on_timeout());
    EXPECT_TRUE(probe.on_timeout());
    EXPECT_FALSE(probe.on_timeout());
    EXPECT_TRUE(probe.finished());
    EXPECT_EQ(probe.attempts(), 3);
    EXPECT_EQ(probe.result().kind, ModeKind::Standalone);
}

namespace {

class ScriptedChannel : public ProbeChannel {
public:
    explicit ScriptedChannel(std::function<std::optional<Bytes>(const Bytes&)> server)
        : server_(std::move(server)) {}
    void broadcast(const Bytes& d) override {
        ++sent;
        pending_ = server_(d);
    }
    std::optional<Bytes> receive(std::uint32_t) override {
        auto p = std::move(pending_);
        pending_.reset();
        if (!p) std::this_thread::sleep_for(std::chrono::milliseconds(2));
        return p;
    }
    int sent = 0;

private:
    std::function<std::optional<Bytes>(const Bytes&)> server_;
    std::optional<Bytes> pending_;
};

}  // namespace

TEST(Probe, SynchronousProbe) {
    GatewayConfig cfg;
    cfg.probe_timeout_ms = 20;
    ScriptedChannel live([](const Bytes& raw) -> std::optional<Bytes> {
        auto d = dhcp::decode(raw);
        auto offer = dhcp::make_message(dhcp::Op::BootReply, dhcp::MessageType::Offer, d.transaction_id,
                                        d.client_mac);
        offer.set(dhcp::opt::server_id, Ipv4Address{10, 0, 0, 1});
        return dhcp::encode(offer);
    });
    EXPECT_EQ(probe_upstream(live, cfg, mac(1), 5).kind, ModeKind::Proxy);
    EXPECT_EQ(live.sent, 1);

    ScriptedChannel dead([](const Bytes&) { return std::nullopt; });
    EXPECT_EQ(probe_upstream(dead, cfg, mac(1), 5).kind, ModeKind::Standalone);
    EXPECT_EQ(dead.sent, 3);
}
