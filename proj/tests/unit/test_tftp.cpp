#include <gtest/gtest.h>

#include "sdb/codec/error.hpp"
#include "sdb/codec/tftp.hpp"
#include "test_support.hpp"
#include "chunk_oracle.hpp"

using namespace sdb;
using sdb::codec::DecodeError;
using sdb::codec::DecodeErrorKind;

TEST(TftpEncode, ReadRequestMatchesReferenceClient) {
    tftp::ReadRequest rrq{"boot.ipxe", "octet", {}};
    auto raw = tftp::encode(rrq);
    EXPECT_EQ(raw, test::load_fixture("tftp_rrq_boot_ipxe.hex"));
    EXPECT_EQ(tftp::decode(raw), tftp::Packet(rrq));
}

TEST(TftpDecode, BlksizeOption) {
    tftp::ReadRequest rrq{"boot.ipxe", "octet", {{"BLKSIZE", "1024"}}};
    auto decoded = std::get<tftp::ReadRequest>(tftp::decode(tftp::encode(rrq)));
    EXPECT_EQ(tftp::requested_block_size(decoded), 1024u);

    rrq.options = {{"blksize", "65464"}};
    EXPECT_EQ(tftp::requested_block_size(rrq), tftp::max_block_size);
    rrq.options = {{"blksize", "4"}};
    EXPECT_EQ(tftp::requested_block_size(rrq), tftp::min_block_size);
    rrq.options = {{"blksize", "big"}};
    EXPECT_EQ(tftp::requested_block_size(rrq), std::nullopt);
    rrq.options = {{"tsize", "0"}};
    EXPECT_EQ(tftp::requested_block_size(rrq), std::nullopt);
}

TEST(TftpDecode, ErrorPaths) {
    auto kind = [](Bytes raw) {
        try {
            tftp::decode(raw);
        } catch (const DecodeError& e) {
            return e.kind();
        }
        ADD_FAILURE();
        return DecodeErrorKind::Unsupported;
    };
    EXPECT_EQ(kind({0}), DecodeErrorKind::TooShort);
    EXPECT_EQ(kind({0, 9}), DecodeErrorKind::UnknownOpcode);
    EXPECT_EQ(kind({0, 2, 'a', 0, 'o', 0}), DecodeErrorKind::UnknownOpcode);  // WRQ unsupported
    EXPECT_EQ(kind({0, 1, 'a', 'b'}), DecodeErrorKind::UnterminatedString);
    EXPECT_EQ(kind({0, 1, 'a', 0}), DecodeErrorKind::UnterminatedString);
    EXPECT_EQ(kind({0, 1, 'a', 0, 'o', 0, 'x', 0}), DecodeErrorKind::MalformedOption);
    EXPECT_EQ(kind({0, 4, 1}), DecodeErrorKind::TooShort);
    EXPECT_EQ(kind({0, 5, 0, 1, 'x'}), DecodeErrorKind::UnterminatedString);
}

TEST(TftpChunking, FinalBlockDetection) {
    tftp::Data full{1, Bytes(512, 0)};
    tftp::Data partial{2, Bytes(100, 0)};
    tftp::Data empty{3, {}};
    EXPECT_FALSE(tftp::is_final_block(full, 512));
    EXPECT_TRUE(tftp::is_final_block(partial, 512));
    EXPECT_TRUE(tftp::is_final_block(empty, 512));
}

TEST(TftpChunking, PacketCountMatchesBruteForceSplitter) {
    for (std::size_t b : {8u, 512u, 1024u, 1428u}) {
        for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 511u, 512u, 513u, 1024u, 1428u, 3000u, 65536u}) {
            auto chunks = test::brute_force_chunks(Bytes(n, 0x5A), b);
            EXPECT_EQ(tftp::data_packet_count(n, b), chunks.size()) << "n=" << n << " b=" << b;
        }
    }
    // Frozen oracle values for the lengths named in the acceptance notes.
    EXPECT_EQ(test::brute_force_chunks(Bytes(0), 512).size(), 1u);
    EXPECT_EQ(test::brute_force_chunks(Bytes(511), 512).size(), 1u);
    EXPECT_EQ(test::brute_force_chunks(Bytes(512), 512).size(), 2u);
    EXPECT_EQ(test::brute_force_chunks(Bytes(513), 512).size(), 2u);
    EXPECT_EQ(test::brute_force_chunks(Bytes(1024), 512).size(), 3u);
}

TEST(TftpProperty, RoundTripAllVariants) {
    test::Gen gen(0x7F7F);
    for (int i = 0; i < 3000; ++i) {
        auto pkt = gen.tftp_packet();
        ASSERT_EQ(tftp::decode(tftp::encode(pkt)), pkt) << tftp::summarize(pkt);
    }
}
