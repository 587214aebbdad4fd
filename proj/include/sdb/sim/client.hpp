#pragma once

#include <coroutine>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdb/codec/dhcp.hpp"
#include "sdb/http/message.hpp"
#include "sdb/ipxe/script.hpp"
#include "sdb/sim/network.hpp"
#include "sdb/sim/task.hpp"

namespace sdb::sim {

enum class BootState {
    PowerOn,
    Discovering,
    OfferSelected,
    FetchingBootloader,
    ExecutingScript,
    AwaitingCredentials,
    Authenticating,
    FetchingArtifacts,
    Booted,
    Failed,
};

const char* to_string(BootState s);

enum class BootFailure {
    NoOffer,
    NoUsableOffer,
    TftpError,
    ScriptError,
    DnsError,
    HttpError,
    AuthRejected,
    DigestMismatch,
    NoCredentials,
    NoBoot,  // scripts kept ending without booting
};

const char* to_string(BootFailure f);

struct TraceEvent {
    Micros time = 0;
    std::string direction;  // "tx", "rx", "state" or "note"
    std::string protocol;   // "dhcp", "tftp", "dns", "http", "udp" or "session"
    std::string summary;
};

/// JSON Lines with keys time_us, direction, protocol, summary.
std::string trace_jsonl(const std::vector<TraceEvent>& trace);

/// Answers for login and prompt statements, consumed in order.
struct CredentialSource {
    struct Login {
        std::string username;
        std::string password;
    };
    enum class OnExhausted {
        Fail,     // Failed{AwaitingCredentials, NoCredentials}
        Suspend,  // the session stops in AwaitingCredentials, as if waiting at the keyboard
    };

    std::vector<Login> logins;
    /// Prompt and menu answers by variable name.
    std::map<std::string, std::vector<std::string>> answers;
    OnExhausted on_exhausted = OnExhausted::Fail;
    /// Consulted once the scripted answers run out; nullopt means exhausted.
    std::function<std::optional<Login>(int attempt)> interactive_login;
};

/// Network configuration after offer selection: the address from `address_offer`, boot
/// steering from `boot_offer` (the same message for a standalone server).
struct OfferSelection {
    dhcp::Message address_offer;
    dhcp::Message boot_offer;
    Ipv4Address address;
    Ipv4Address next_server;
    std::string boot_file;
};

struct NoUsableOffer {};

/// First offer carrying a boot file supplies boot steering. When it carries no address it is
/// merged with the first addressful offer. Returns NoUsableOffer when no offer carries a boot
/// file or no offer carries an address.
std::variant<OfferSelection, NoUsableOffer> select_offer(const std::vector<dhcp::Message>& offers);

/// Boot file and next server an offer steers towards: the header fields, falling back to
/// options 67 and 66.
std::string offer_boot_file(const dhcp::Message& m);
std::optional<Ipv4Address> offer_next_server(const dhcp::Message& m);

/// Compact DHCP description used in traces, e.g.
/// "OFFER xid=0000abcd yiaddr=0.0.0.0 siaddr=192.168.77.1 file=boot.ipxe options=53,54,60,66,67".
std::string describe_dhcp(const dhcp::Message& m);

enum class RetryMode { InPlace, PowerCycle };

struct ClientConfig {
    /// After a script ends without booting (the portal's "connecting" page): InPlace re-runs
    /// DHCP from the loaded bootloader and its embedded script; PowerCycle starts from PXE.
    RetryMode retry = RetryMode::InPlace;
    Micros retry_delay = ms(500);
    int max_boot_cycles = 4;
    int max_auth_attempts = 3;
    std::vector<Micros> discover_backoff = {seconds(1), seconds(2), seconds(4), seconds(8)};
    Micros offer_window = ms(100);
    std::uint16_t tftp_block_size = 1428;
    Micros tftp_timeout = seconds(1);
    int tftp_retries = 5;
    Micros dns_timeout = seconds(1);
    int dns_retries = 3;
    Micros http_timeout = seconds(30);
    int max_chain_depth = 32;
};

struct BootOutcome {
    BootState state = BootState::PowerOn;
    std::optional<BootState> failed_stage;
    std::optional<BootFailure> failure;
    std::string failure_detail;
    std::string os_id;
    /// URL -> SHA-256 hex of each artifact fetched for the boot.
    std::map<std::string, std::string> artifact_digests;
    std::string bootloader_sha256;
    Micros powered_on_at = 0;
    Micros finished_at = 0;
    int auth_attempts = 0;   // credential submissions
    int auth_rejections = 0;
    int boot_cycles = 0;
    bool suspended = false;

    bool terminal() const { return state == BootState::Booted || state == BootState::Failed || suspended; }
    Micros boot_time() const { return finished_at - powered_on_at; }
};

/// A diskless PXE client with a single interface. Nothing survives power_off(): the next
/// power_on() starts from an empty session.
class ClientNode : public Node {
public:
    ClientNode(Network& net, std::string name, MacAddress mac, ClientConfig cfg = {});
    ~ClientNode() override;

    Port& port() { return *port_; }
    MacAddress mac() const { return port_->mac; }
    const ClientConfig& config() const { return cfg_; }

    /// Starts a boot session now. Any running session is discarded first.
    void power_on(CredentialSource creds);
    void power_off();
    bool running() const { return session_.has_value() && !session_->done(); }

    const BootOutcome& outcome() const { return outcome_; }
    const std::vector<TraceEvent>& trace() const { return trace_; }
    const std::vector<BootState>& state_history() const { return states_; }
    std::optional<Ipv4Address> address() const { return ip_; }

    void on_receive(Port& port, const Packet& pkt) override;

    /// Each packet whose payload passes through here before the client sees it; used for
    /// fault injection. Return false to drop.
    std::function<bool(Packet&)> receive_filter;

private:
    struct Sleep;
    struct Receive;
    using Pred = std::function<bool(const Packet&)>;

    Task<> session();
    Task<bool> boot_cycle(bool from_pxe);
    Task<std::optional<OfferSelection>> run_dhcp(bool need_boot_info);
    Task<std::optional<Bytes>> tftp_fetch(Ipv4Address server, std::string file);
    Task<std::optional<Ipv4Address>> resolve(std::string host);
    Task<std::optional<http::Response>> http_get(std::string url);
    enum class ScriptEnd { Booted, Ended, Stopped };
    Task<ScriptEnd> run_script(ipxe::Script script);
    std::optional<std::string> next_answer(const std::string& var);

    Sleep sleep(Micros d);
    Receive receive(Pred pred, Micros timeout);

    bool send_udp(std::uint16_t src_port, Endpoint dst, Bytes payload);
    bool send_stream(std::uint16_t src_port, Endpoint dst, Bytes payload);
    std::optional<MacAddress> next_hop(Ipv4Address dst) const;
    std::uint16_t ephemeral();

    void set_state(BootState s);
    void fail(BootState stage, BootFailure reason, std::string detail);
    void trace(std::string dir, std::string proto, std::string summary);
    void trace_packet(const char* dir, const Packet& pkt);

    ClientConfig cfg_;
    Port* port_;
    CredentialSource creds_;
    std::size_t next_login_ = 0;
    std::map<std::string, std::size_t> next_answer_;

    std::optional<Task<>> session_;
    BootOutcome outcome_;
    std::vector<TraceEvent> trace_;
    std::vector<BootState> states_;

    // Volatile session state
    std::optional<Ipv4Address> ip_;
    std::optional<Ipv4Subnet> subnet_;
    std::optional<Ipv4Address> router_;
    std::optional<Ipv4Address> dns_;
    std::string embedded_;
    ipxe::VarEnv env_;
    std::uint16_t next_port_ = 0;
    std::uint32_t xid_seed_ = 0;

    // Receive wait
    std::coroutine_handle<> waiter_;
    Pred waiter_pred_;
    std::optional<Packet> waiter_result_;
    Clock::EventId waiter_timer_{};
    Clock::EventId sleep_timer_{};
};

}  // namespace sdb::sim
