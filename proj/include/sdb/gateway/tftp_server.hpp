#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sdb/codec/tftp.hpp"
#include "sdb/gateway/config.hpp"

namespace sdb::gateway {

/// One read transfer of the bootloader image, lock-step per RFC 1350. Block numbers wrap
/// at 65536 on the wire; the transfer tracks the unwrapped count.
struct TftpOpened;

class TftpTransfer {
public:
    /// Only an RRQ for `cfg.boot_filename` opens a transfer. Other filenames get
    /// Error(FileNotFound); any other first packet gets Error(IllegalOperation).
    /// The blob must outlive the transfer.
    static TftpOpened open(const tftp::Packet& first, const GatewayConfig& cfg);

    /// Next packet after an ACK, or nullopt for a stale/duplicate ACK or once done.
    std::optional<tftp::Packet> on_ack(std::uint16_t block);

    /// The last packet sent, for timeout-driven resend.
    tftp::Packet retransmit() const;

    bool done() const { return done_; }
    std::size_t block_size() const { return block_size_; }
    std::size_t total_blocks() const { return total_; }

private:
    TftpTransfer(std::span<const std::uint8_t> blob, std::size_t block_size, bool oack);
    tftp::Data data(std::size_t n) const;

    std::span<const std::uint8_t> blob_;
    std::size_t block_size_;
    std::size_t total_;
    std::size_t sent_ = 0;  // 0 while an OACK awaits ACK 0
    std::optional<tftp::OptionAck> oack_;
    bool done_ = false;
};

/// Outcome of the first packet from a client: the reply to send and, when the request was
/// accepted, the transfer that continues it.
struct TftpOpened {
    tftp::Packet reply;
    std::optional<TftpTransfer> transfer;
};

/// The full packet stream a well-behaved client receives for `rrq`, acknowledging each
/// packet immediately.
std::vector<tftp::Packet> serve_tftp(const tftp::Packet& rrq, const GatewayConfig& cfg);

}  // namespace sdb::gateway
