#include <gtest/gtest.h>

#include "fuzz_support.hpp"

using namespace sdb;

TEST(CodecFuzz, DhcpDecoderIsTotal) {
    std::vector<Bytes> seeds = {test::load_fixture("dhcp_discover_pxe.hex"),
                                test::load_fixture("dhcp_offer_minimal.hex")};
    auto s = test::fuzz_decoder(1, 20000, seeds, [](const Bytes& b) { dhcp::decode(b); });
    EXPECT_EQ(s.other_exceptions, 0u);
    EXPECT_GT(s.accepted, 0u);
}

TEST(CodecFuzz, TftpDecoderIsTotal) {
    std::vector<Bytes> seeds = {test::load_fixture("tftp_rrq_boot_ipxe.hex"),
                                tftp::encode(tftp::Data{3, Bytes(100, 1)}),
                                tftp::encode(tftp::OptionAck{{{"blksize", "1024"}}})};
    auto s = test::fuzz_decoder(2, 20000, seeds, [](const Bytes& b) { tftp::decode(b); });
    EXPECT_EQ(s.other_exceptions, 0u);
    EXPECT_GT(s.accepted, 0u);
}

TEST(CodecFuzz, DnsDecodersAreTotal) {
    std::vector<Bytes> seeds = {test::load_fixture("dns_query_a.hex"),
                                test::load_fixture("dns_answer_captive.hex")};
    auto s = test::fuzz_decoder(3, 20000, seeds, [](const Bytes& b) {
        try {
            dns::decode_query(b);
        } catch (const codec::DecodeError&) {
        }
        dns::decode_answer(b);
    });
    EXPECT_EQ(s.other_exceptions, 0u);
    EXPECT_GT(s.accepted, 0u);
}
