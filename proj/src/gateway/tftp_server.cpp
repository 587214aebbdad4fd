#include "sdb/gateway/tftp_server.hpp"

#include <algorithm>

namespace sdb::gateway {

TftpTransfer::TftpTransfer(std::span<const std::uint8_t> blob, std::size_t block_size, bool oack)
    : blob_(blob), block_size_(block_size), total_(tftp::data_packet_count(blob.size(), block_size)) {
    if (!oack) sent_ = 1;
}

TftpOpened TftpTransfer::open(const tftp::Packet& first, const GatewayConfig& cfg) {
    const auto* rrq = std::get_if<tftp::ReadRequest>(&first);
    if (!rrq)
        return {tftp::Error{std::uint16_t(tftp::ErrorCode::IllegalOperation), "expected RRQ"}, std::nullopt};
    if (rrq->filename != cfg.boot_filename)
        return {tftp::Error{std::uint16_t(tftp::ErrorCode::FileNotFound), "file not found"}, std::nullopt};

    tftp::OptionAck oack;
    std::size_t block_size = tftp::default_block_size;
    if (auto b = tftp::requested_block_size(*rrq)) {
        block_size = *b;
        oack.options.emplace_back("blksize", std::to_string(block_size));
    }
    if (tftp::find_option(rrq->options, "tsize"))
        oack.options.emplace_back("tsize", std::to_string(cfg.bootloader_blob.size()));

    bool negotiated = !oack.options.empty();
    TftpTransfer t(cfg.bootloader_blob, block_size, negotiated);
    if (negotiated) {
        t.oack_ = oack;
        return {oack, t};
    }
    return {t.data(1), t};
}

tftp::Data TftpTransfer::data(std::size_t n) const {
    std::size_t begin = std::min(blob_.size(), (n - 1) * block_size_);
    std::size_t end = std::min(blob_.size(), begin + block_size_);
    return tftp::Data{std::uint16_t(n & 0xFFFF), Bytes(blob_.begin() + begin, blob_.begin() + end)};
}

std::optional<tftp::Packet> TftpTransfer::on_ack(std::uint16_t block) {
    if (done_ || block != std::uint16_t(sent_ & 0xFFFF)) return std::nullopt;
    if (sent_ == total_) {
        done_ = true;
        return std::nullopt;
    }
    ++sent_;
    return data(sent_);
}

tftp::Packet TftpTransfer::retransmit() const {
    if (sent_ == 0) return *oack_;
    return data(sent_);
}

std::vector<tftp::Packet> serve_tftp(const tftp::Packet& rrq, const GatewayConfig& cfg) {
    auto opened = TftpTransfer::open(rrq, cfg);
    std::vector<tftp::Packet> out{opened.reply};
    if (!opened.transfer) return out;
    auto& t = *opened.transfer;
    std::uint16_t ack = 0;
    if (const auto* d = std::get_if<tftp::Data>(&opened.reply)) ack = d->block;
    while (auto next = t.on_ack(ack)) {
        ack = std::get<tftp::Data>(*next).block;
        out.push_back(std::move(*next));
    }
    return out;
}

}  // namespace sdb::gateway
