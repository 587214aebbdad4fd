#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdb/gateway/gateway.hpp"
#include "sdb/sim/client.hpp"
#include "sdb/sim/network.hpp"
#include "sdb/sim/nodes.hpp"

namespace sdb::sim {

class ScenarioInvalid : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int report_schema_version = 1;

struct ArtifactSpec {
    std::string filename;
    std::size_t size = 0;
};

struct OsSpec {
    std::string name;
    std::string kernel;                 // artifact filename
    std::vector<std::string> initrds;   // artifact filenames, in order
    std::string kernel_params;
    std::optional<std::string> boot_template;  // overrides the kernel/initrd composition
    std::vector<ArtifactSpec> files;
};

struct UserSpec {
    std::string username;
    std::string password;
    std::string os;  // OS name
};

struct ClientSpec {
    std::string name;
    MacAddress mac;
    Micros power_on_delay = ms(1000);
    CredentialSource creds;
    ClientConfig config;
};

struct UpstreamSpec {
    SegmentKind kind = SegmentKind::WifiKeyed;
    std::string ssid = "enterprise";
    std::string passphrase = "correct-battery";
    std::string apn;
    bool dhcp = true;
};

struct FaultSpec {
    std::string kind;  // rogue_dhcp, corrupt_in_transit, corrupt_at_rest, loss
    std::string client;
    std::string file;   // "<os name>/<filename>" for corruption faults
    std::string segment;
    double probability = 0;
    bool offer_address = true;
};

struct StepSpec {
    std::string action;  // boot, deactivate, activate, assign_os, delete_user, restart_cloud, wait
    std::vector<std::string> clients;
    std::string user;
    std::string os;
    Micros duration = 0;
};

struct Expectation {
    std::string client;
    std::optional<std::size_t> step;  // index into steps; defaults to the client's last boot
    std::string state;                // BootState name
    std::optional<std::string> reason;
    std::optional<std::string> os;    // OS name
    std::optional<double> max_boot_time_ms;
};

struct ScenarioSpec {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    SegmentParams link;  // applied to every segment
    std::optional<UpstreamSpec> upstream;
    gateway::GatewayConfig gateway;
    std::optional<gateway::ConnectivityProfile> gateway_connect;
    bool gateway_sanitize = true;
    Ipv4Address cloud_ip{203, 0, 113, 10};
    std::string password_cost = "interactive";
    std::string admin_token = "sim-admin-token";
    std::vector<OsSpec> oses;
    std::vector<UserSpec> users;
    std::vector<ClientSpec> clients;
    std::vector<FaultSpec> faults;
    std::vector<StepSpec> steps;  // empty means one boot of every client
    std::vector<Expectation> expectations;

    /// Throws ScenarioInvalid on any unresolved reference or malformed field.
    static ScenarioSpec from_json(const nlohmann::json& j);
    static ScenarioSpec load(const std::filesystem::path& path);
    void validate() const;
};

/// Deterministic artifact content: the same (label, size) always yields the same bytes.
Bytes synthetic_artifact(const std::string& label, std::size_t size);

struct SessionRecord {
    std::size_t step = 0;
    std::string client;
    MacAddress mac;
    BootOutcome outcome;
    std::vector<TraceEvent> trace;
    std::vector<BootState> states;
};

struct RunOptions {
    /// Holds the control-plane store. A fresh temporary directory when empty; removed
    /// afterwards unless keep_store.
    std::filesystem::path store_dir;
    bool keep_store = false;
    /// When set, each session's trace is written as <trace_dir>/<client>-step<N>.jsonl.
    std::optional<std::filesystem::path> trace_dir;
    /// Packet capture export, JSON Lines.
    std::optional<std::filesystem::path> capture_path;
    std::optional<std::uint64_t> seed_override;
};

/// Everything a scenario builds: segments, per-client gateways, router, cloud and clients.
class Harness {
public:
    Harness(const ScenarioSpec& spec, const std::filesystem::path& store_dir, std::uint64_t seed);
    ~Harness();

    Network& net() { return net_; }
    RouterNode& router() { return *router_; }
    CloudNode& cloud() { return *cloud_; }
    GatewayNode& gateway(const std::string& client) { return *gateways_.at(client); }
    ClientNode& client(const std::string& name) { return *clients_.at(name); }
    RogueDhcpNode* rogue() { return rogue_.get(); }
    Segment* upstream() { return upstream_; }
    /// OS name -> os_id as assigned by the control plane.
    const std::map<std::string, std::string>& os_ids() const { return os_ids_; }
    /// "<os_id>/<filename>" -> SHA-256 computed at generation time.
    const std::map<std::string, std::string>& artifact_digests() const { return digests_; }

    /// Populates the control plane from the scenario (OSes, artifacts, users).
    void seed_cloud();
    /// Powers on the named clients (staggered by their power-on delays) and runs until all
    /// are terminal. Returns simulated time afterwards.
    Micros boot(const std::vector<std::string>& names);

private:
    const ScenarioSpec& spec_;
    Network net_;
    Segment* internet_ = nullptr;
    Segment* upstream_ = nullptr;
    std::unique_ptr<RouterNode> router_;
    std::unique_ptr<CloudNode> cloud_;
    std::unique_ptr<RogueDhcpNode> rogue_;
    std::map<std::string, std::unique_ptr<GatewayNode>> gateways_;
    std::map<std::string, std::unique_ptr<ClientNode>> clients_;
    std::map<std::string, std::string> os_ids_;
    std::map<std::string, std::string> digests_;
};

struct ScenarioResult {
    nlohmann::json report;
    std::vector<SessionRecord> sessions;
    bool expectations_met = true;
    std::vector<std::string> mismatches;
};

/// Builds the harness, runs every step and evaluates expectations. Throws ScenarioInvalid.
ScenarioResult run_scenario(const ScenarioSpec& spec, const RunOptions& opts = {});

}  // namespace sdb::sim
