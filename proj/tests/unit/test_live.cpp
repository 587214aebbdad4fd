#include <gtest/gtest.h>

#include <httplib.h>

#include "sdb/cloud/control_plane.hpp"
#include "sdb/cloud/crypto.hpp"
#include "sdb/cloud/service.hpp"
#include "sdb/cloud/templates.hpp"
#include "sdb/codec/dhcp.hpp"
#include "sdb/codec/dns.hpp"
#include "sdb/codec/tftp.hpp"
#include "sdb/gateway/gateway.hpp"
#include "sdb/live/admin_client.hpp"
#include "sdb/live/cloud_server.hpp"
#include "sdb/live/gateway_server.hpp"
#include "temp_dir.hpp"

using namespace sdb;
using namespace sdb::live;

namespace {

const Ipv4Address loopback(127, 0, 0, 1);

gateway::GatewayConfig ephemeral_config() {
    gateway::GatewayConfig c;
    c.ports.dhcp = c.ports.dhcp_client = c.ports.tftp = c.ports.dns = c.ports.http = 0;
    c.ensure_bootloader();
    return c;
}

struct LiveGatewayFixture : ::testing::Test {
    gateway::Gateway gw{ephemeral_config()};
    LiveGateway server{gw, [] {
                           LiveGatewayOptions o;
                           o.bind_ip = loopback;
                           return o;
                       }()};
    UdpSocket client{"client", loopback, 0};

    void SetUp() override { server.start(); }
};

TEST_F(LiveGatewayFixture, DnsAnswersWithGatewayAddress) {
    dns::Query q;
    q.id = 0x4242;
    q.name = "boot.cloud.example";
    ASSERT_TRUE(client.send_to(dns::encode_query(q), loopback, server.dns_port()));
    auto d = client.receive(2000);
    ASSERT_TRUE(d);
    auto a = dns::decode_answer(d->data);
    EXPECT_EQ(a.id, 0x4242);
    ASSERT_EQ(a.records.size(), 1u);
    EXPECT_EQ(a.records[0].address, gw.address());
}

TEST_F(LiveGatewayFixture, DhcpDiscoverGetsOffer) {
    auto m = dhcp::make_message(dhcp::Op::BootRequest, dhcp::MessageType::Discover, 0x77,
                                MacAddress{{0x52, 0x54, 0, 0x12, 0x34, 0x56}});
    m.set(dhcp::opt::vendor_class, std::string("PXEClient:Arch:00000"));
    ASSERT_TRUE(client.send_to(dhcp::encode(m), loopback, server.dhcp_port()));
    auto d = client.receive(2000);
    ASSERT_TRUE(d);
    auto r = dhcp::decode(d->data);
    EXPECT_EQ(r.message_type(), dhcp::MessageType::Offer);
    EXPECT_EQ(r.transaction_id, 0x77u);
    EXPECT_EQ(r.boot_file, "boot.ipxe");
    EXPECT_TRUE(gw.config().in_pool(r.your_ip));
}

TEST_F(LiveGatewayFixture, TftpTransfersTheWholeBlob) {
    tftp::ReadRequest rrq;
    rrq.filename = "boot.ipxe";
    rrq.mode = "octet";
    rrq.options = {{"blksize", "1428"}};
    ASSERT_TRUE(client.send_to(tftp::encode(rrq), loopback, server.tftp_port()));
    Bytes got;
    std::uint16_t tid = 0;
    for (int guard = 0; guard < 200; ++guard) {
        auto d = client.receive(2000);
        ASSERT_TRUE(d);
        tid = d->from_port;
        auto p = tftp::decode(d->data);
        if (std::holds_alternative<tftp::OptionAck>(p)) {
            client.send_to(tftp::encode(tftp::Ack{0}), loopback, tid);
            continue;
        }
        auto& data = std::get<tftp::Data>(p);
        got.insert(got.end(), data.payload.begin(), data.payload.end());
        client.send_to(tftp::encode(tftp::Ack{data.block}), loopback, tid);
        if (data.payload.size() < 1428) break;
    }
    EXPECT_NE(tid, server.tftp_port());
    EXPECT_EQ(got, gw.config().bootloader_blob);
}

TEST_F(LiveGatewayFixture, TftpUnknownFileIsAnError) {
    tftp::ReadRequest rrq;
    rrq.filename = "nope.bin";
    rrq.mode = "octet";
    client.send_to(tftp::encode(rrq), loopback, server.tftp_port());
    auto d = client.receive(2000);
    ASSERT_TRUE(d);
    EXPECT_TRUE(std::holds_alternative<tftp::Error>(tftp::decode(d->data)));
}

TEST_F(LiveGatewayFixture, PortalServedOverHttp) {
    httplib::Client c("127.0.0.1", server.http_port());
    auto r = c.Get("/boot");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->body.rfind("#!ipxe", 0), 0u);
}

TEST_F(LiveGatewayFixture, BusyPortIsReportedByName) {
    auto cfg = ephemeral_config();
    cfg.ports.dns = server.dns_port();
    gateway::Gateway other(cfg);
    LiveGatewayOptions o;
    o.bind_ip = loopback;
    LiveGateway second(other, o);
    try {
        second.start();
        FAIL() << "expected PortBindFailure";
    } catch (const PortBindFailure& e) {
        EXPECT_EQ(e.service(), "dns");
        EXPECT_EQ(e.port(), server.dns_port());
        EXPECT_NE(std::string(e.what()).find(std::to_string(server.dns_port())), std::string::npos);
    }
    EXPECT_FALSE(second.running());
}

// ---------------------------------------------------------------- cloud + admin client

struct LiveCloudFixture : ::testing::Test {
    test::TempDir dir;
    std::unique_ptr<cloud::ControlPlane> cp;
    std::unique_ptr<cloud::CloudService> svc;
    std::unique_ptr<LiveCloud> server;
    std::string url;

    void SetUp() override {
        cloud::ControlPlaneConfig cc;
        cc.store_dir = dir.path() / "store";
        cc.password_cost = cloud::PasswordCost::minimal();
        cp = std::make_unique<cloud::ControlPlane>(cc);
        svc = std::make_unique<cloud::CloudService>(*cp, "tok-123");
        server = std::make_unique<LiveCloud>(*svc, "127.0.0.1", 0);
        server->start();
        url = "http://127.0.0.1:" + std::to_string(server->port());
    }
};

TEST_F(LiveCloudFixture, AdminRoundTrip) {
    AdminClient admin(url, "tok-123");
    auto os = admin.create_os("Tiny Core Linux", cloud::default_template("vmlinuz", "core.gz"), "quiet");
    std::string id = os.at("os_id");
    Bytes kernel(70000, 0x11), initrd(3000, 0x22);
    auto f = admin.upload_file(id, "vmlinuz", kernel);
    EXPECT_EQ(f.at("sha256"), cloud::sha256_hex(kernel));
    admin.upload_file(id, "core.gz", initrd);
    EXPECT_EQ(admin.resolve_os("tinycore"), id);
    EXPECT_EQ(admin.resolve_os("tiny core linux"), id);
    auto u = admin.create_user("alice", "pw", id);
    EXPECT_EQ(u.at("assigned_os"), id);
    EXPECT_FALSE(u.contains("password"));
    EXPECT_EQ(admin.list_users().size(), 1u);
    try {
        admin.create_user("alice", "pw", id);
        FAIL();
    } catch (const AdminError& e) {
        EXPECT_EQ(e.kind(), "DuplicateUser");
    }

    httplib::Client boot("127.0.0.1", server->port());
    boot.Get("/auth?username=alice&password=wrong&mac=52:54:00:00:00:01");
    auto ok = boot.Get("/auth?username=alice&password=pw&mac=52:54:00:00:00:01");
    ASSERT_TRUE(ok);
    EXPECT_NE(ok->body.find("/files/" + id + "/vmlinuz quiet"), std::string::npos);
    auto file = boot.Get("/files/" + id + "/vmlinuz");
    ASSERT_TRUE(file);
    EXPECT_EQ(file->body.size(), kernel.size());
    EXPECT_EQ(file->get_header_value(cloud::digest_header), cloud::sha256_hex(kernel));

    LogQuery q;
    q.success = false;
    auto failed = admin.logs(q);
    ASSERT_EQ(failed.at("entries").size(), 1u);
    EXPECT_EQ(failed.at("entries")[0].at("failure_reason"), "BadPassword");
    EXPECT_EQ(failed.at("entries")[0].at("mac"), "52:54:00:00:00:01");
    EXPECT_EQ(admin.logs({}).at("total"), 2);

    admin.deactivate_user("alice");
    EXPECT_FALSE(admin.list_users()[0].at("active").get<bool>());
    admin.delete_user("alice");
    admin.delete_file(id, "core.gz");
    admin.delete_os(id);
    EXPECT_TRUE(admin.list_os().empty());
}

TEST_F(LiveCloudFixture, MissingOrWrongTokenIsUnauthorized) {
    for (const char* token : {"", "nope"}) {
        AdminClient admin(url, token);
        try {
            admin.list_users();
            FAIL();
        } catch (const AdminError& e) {
            EXPECT_EQ(e.status(), 401);
            EXPECT_EQ(e.kind(), "Unauthorized");
        }
    }
}

TEST_F(LiveCloudFixture, AdminPageIsServed) {
    httplib::Client c("127.0.0.1", server->port());
    auto r = c.Get("/admin/");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_NE(r->get_header_value("Content-Type").find("text/html"), std::string::npos);
}

TEST(AdminClientOffline, UnreachableServer) {
    AdminClient admin("http://127.0.0.1:1", "t");
    try {
        admin.list_os();
        FAIL();
    } catch (const AdminError& e) {
        EXPECT_EQ(e.status(), 0);
    }
}

}  // namespace
