#include "sdb/sim/scenario.hpp"

#include <fstream>
#include <set>

#include "sdb/cloud/crypto.hpp"
#include "sdb/cloud/templates.hpp"
#include "sdb/gateway/config.hpp"

namespace sdb::sim {

using nlohmann::json;

namespace {

constexpr std::int64_t sim_epoch_ms = 1767225600000;  // 2026-01-01T00:00:00Z

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ScenarioInvalid(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok |= it.key() == a;
        if (!ok) throw ScenarioInvalid(where + ": unknown key \"" + it.key() + "\"");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

std::optional<BootState> state_from_string(const std::string& s) {
    for (int i = 0; i <= int(BootState::Failed); ++i)
        if (s == to_string(BootState(i))) return BootState(i);
    return std::nullopt;
}

bool failure_name_valid(const std::string& s) {
    for (int i = 0; i <= int(BootFailure::NoBoot); ++i)
        if (s == to_string(BootFailure(i))) return true;
    return false;
}

std::size_t parse_size(const json& f, const std::string& where) {
    if (f.contains("size")) return f.at("size").get<std::size_t>();
    if (f.contains("size_mib")) return std::size_t(f.at("size_mib").get<double>() * 1024 * 1024);
    throw ScenarioInvalid(where + ": size or size_mib required");
}

gateway::ConnectivityProfile parse_profile(const json& j, const std::string& where) {
    check_keys(j, {"kind", "ssid", "passphrase", "apn", "username", "password"}, where);
    auto kind = j.at("kind").get<std::string>();
    if (kind == "wifi") return gateway::ConnectivityProfile::wifi(get_or<std::string>(j, "ssid", ""),
                                                                   get_or<std::string>(j, "passphrase", ""));
    if (kind == "cellular")
        return gateway::ConnectivityProfile::cellular(get_or<std::string>(j, "apn", ""),
                                                      get_or<std::string>(j, "username", ""),
                                                      get_or<std::string>(j, "password", ""));
    if (kind == "wired") return gateway::ConnectivityProfile::wired();
    throw ScenarioInvalid(where + ": unknown link kind " + kind);
}

}  // namespace

Bytes synthetic_artifact(const std::string& label, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : label) h = (h ^ c) * 0x100000001b3ull;
    Rng rng(h ^ size);
    Bytes out(size);
    std::size_t i = 0;
    while (i < size) {
        std::uint64_t v = rng.next();
        for (int k = 0; k < 8 && i < size; ++k, ++i) out[i] = std::uint8_t(v >> (8 * k));
    }
    return out;
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
    ScenarioSpec s;
    try {
        check_keys(j, {"name", "description", "seed", "network", "upstream", "gateway", "cloud", "oses", "users",
                       "clients", "faults", "steps", "expect"},
                   "scenario");
        s.name = get_or<std::string>(j, "name", "scenario");
        s.seed = get_or<std::uint64_t>(j, "seed", 1);
        if (auto n = j.find("network"); n != j.end()) {
            check_keys(*n, {"latency_ms", "jitter_ms", "loss", "bandwidth_mbps"}, "network");
            s.link.latency = Micros(get_or<double>(*n, "latency_ms", 1.0) * 1000);
            s.link.jitter = Micros(get_or<double>(*n, "jitter_ms", 0.0) * 1000);
            s.link.loss = get_or<double>(*n, "loss", 0.0);
            s.link.bandwidth_bps = std::uint64_t(get_or<double>(*n, "bandwidth_mbps", 1000.0) * 1e6);
        }
        if (auto u = j.find("upstream"); u != j.end() && !u->is_null()) {
            check_keys(*u, {"kind", "ssid", "passphrase", "apn", "dhcp"}, "upstream");
            UpstreamSpec up;
            auto kind = get_or<std::string>(*u, "kind", "wifi");
            if (kind == "wifi") up.kind = SegmentKind::WifiKeyed;
            else if (kind == "cellular") up.kind = SegmentKind::CellularKeyed;
            else if (kind == "wired") up.kind = SegmentKind::Broadcast;
            else throw ScenarioInvalid("upstream: unknown kind " + kind);
            up.ssid = get_or<std::string>(*u, "ssid", up.ssid);
            up.passphrase = get_or<std::string>(*u, "passphrase", up.passphrase);
            up.apn = get_or<std::string>(*u, "apn", "");
            up.dhcp = get_or<bool>(*u, "dhcp", true);
            s.upstream = up;
        }
        if (auto g = j.find("gateway"); g != j.end()) {
            check_keys(*g, {"config", "connect", "sanitize"}, "gateway");
            if (g->contains("config")) s.gateway = gateway::gateway_config_from_json(g->at("config"));
            if (auto c = g->find("connect"); c != g->end() && !c->is_null())
                s.gateway_connect = parse_profile(*c, "gateway.connect");
            s.gateway_sanitize = get_or<bool>(*g, "sanitize", true);
        }
        if (auto c = j.find("cloud"); c != j.end()) {
            check_keys(*c, {"ip", "password_cost", "admin_token"}, "cloud");
            if (c->contains("ip")) {
                auto ip = Ipv4Address::parse(c->at("ip").get<std::string>());
                if (!ip) throw ScenarioInvalid("cloud.ip: not an IPv4 address");
                s.cloud_ip = *ip;
            }
            s.password_cost = get_or<std::string>(*c, "password_cost", s.password_cost);
            s.admin_token = get_or<std::string>(*c, "admin_token", s.admin_token);
        }
        for (const auto& o : j.value("oses", json::array())) {
            check_keys(o, {"name", "kernel", "initrds", "kernel_params", "template", "files"}, "oses[]");
            OsSpec os;
            os.name = o.at("name").get<std::string>();
            os.kernel = get_or<std::string>(o, "kernel", "");
            os.initrds = get_or<std::vector<std::string>>(o, "initrds", {});
            os.kernel_params = get_or<std::string>(o, "kernel_params", "");
            if (o.contains("template")) os.boot_template = o.at("template").get<std::string>();
            for (const auto& f : o.value("files", json::array())) {
                check_keys(f, {"name", "size", "size_mib"}, "oses[].files[]");
                os.files.push_back({f.at("name").get<std::string>(), parse_size(f, os.name)});
            }
            s.oses.push_back(std::move(os));
        }
        for (const auto& u : j.value("users", json::array())) {
            check_keys(u, {"username", "password", "os"}, "users[]");
            s.users.push_back({u.at("username").get<std::string>(), u.at("password").get<std::string>(),
                               u.at("os").get<std::string>()});
        }
        int idx = 0;
        for (const auto& c : j.value("clients", json::array())) {
            check_keys(c, {"name", "mac", "power_on_ms", "logins", "answers", "on_exhausted", "retry",
                           "retry_delay_ms"},
                       "clients[]");
            ClientSpec cs;
            cs.name = c.at("name").get<std::string>();
            ++idx;
            if (c.contains("mac")) {
                auto mac = MacAddress::parse(c.at("mac").get<std::string>());
                if (!mac) throw ScenarioInvalid("clients[" + cs.name + "].mac: not a MAC address");
                cs.mac = *mac;
            } else {
                cs.mac = MacAddress({0x52, 0x54, 0x00, 0x5d, 0xb0, std::uint8_t(idx)});
            }
            cs.power_on_delay = Micros(get_or<double>(c, "power_on_ms", 1000.0) * 1000);
            for (const auto& l : c.value("logins", json::array())) {
                check_keys(l, {"username", "password"}, "clients[].logins[]");
                cs.creds.logins.push_back({l.at("username").get<std::string>(), l.at("password").get<std::string>()});
            }
            if (c.contains("answers"))
                cs.creds.answers = c.at("answers").get<std::map<std::string, std::vector<std::string>>>();
            auto ex = get_or<std::string>(c, "on_exhausted", "fail");
            if (ex == "fail") cs.creds.on_exhausted = CredentialSource::OnExhausted::Fail;
            else if (ex == "suspend") cs.creds.on_exhausted = CredentialSource::OnExhausted::Suspend;
            else throw ScenarioInvalid("clients[" + cs.name + "].on_exhausted: expected fail or suspend");
            auto retry = get_or<std::string>(c, "retry", "in-place");
            if (retry == "in-place") cs.config.retry = RetryMode::InPlace;
            else if (retry == "power-cycle") cs.config.retry = RetryMode::PowerCycle;
            else throw ScenarioInvalid("clients[" + cs.name + "].retry: expected in-place or power-cycle");
            cs.config.retry_delay = Micros(get_or<double>(c, "retry_delay_ms", 500.0) * 1000);
            s.clients.push_back(std::move(cs));
        }
        for (const auto& f : j.value("faults", json::array())) {
            check_keys(f, {"kind", "client", "file", "segment", "probability", "offer_address"}, "faults[]");
            FaultSpec fs;
            fs.kind = f.at("kind").get<std::string>();
            fs.client = get_or<std::string>(f, "client", "");
            fs.file = get_or<std::string>(f, "file", "");
            fs.segment = get_or<std::string>(f, "segment", "");
            fs.probability = get_or<double>(f, "probability", 0.0);
            fs.offer_address = get_or<bool>(f, "offer_address", true);
            s.faults.push_back(std::move(fs));
        }
        for (const auto& st : j.value("steps", json::array())) {
            check_keys(st, {"action", "clients", "user", "os", "ms"}, "steps[]");
            StepSpec ss;
            ss.action = st.at("action").get<std::string>();
            ss.clients = get_or<std::vector<std::string>>(st, "clients", {});
            ss.user = get_or<std::string>(st, "user", "");
            ss.os = get_or<std::string>(st, "os", "");
            ss.duration = Micros(get_or<double>(st, "ms", 0.0) * 1000);
            s.steps.push_back(std::move(ss));
        }
        for (const auto& e : j.value("expect", json::array())) {
            check_keys(e, {"client", "step", "state", "reason", "os", "max_boot_time_ms"}, "expect[]");
            Expectation ex;
            ex.client = e.at("client").get<std::string>();
            if (e.contains("step")) ex.step = e.at("step").get<std::size_t>();
            ex.state = e.at("state").get<std::string>();
            if (e.contains("reason")) ex.reason = e.at("reason").get<std::string>();
            if (e.contains("os")) ex.os = e.at("os").get<std::string>();
            if (e.contains("max_boot_time_ms")) ex.max_boot_time_ms = e.at("max_boot_time_ms").get<double>();
            s.expectations.push_back(std::move(ex));
        }
    } catch (const json::exception& e) {
        throw ScenarioInvalid(std::string("malformed scenario: ") + e.what());
    } catch (const gateway::ConfigError& e) {
        throw ScenarioInvalid(std::string("gateway.config: ") + e.what());
    }
    s.validate();
    return s;
}

ScenarioSpec ScenarioSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioInvalid("cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioInvalid(path.string() + ": " + e.what());
    }
    return from_json(j);
}

void ScenarioSpec::validate() const {
    auto bad = [](const std::string& m) { throw ScenarioInvalid(m); };
    try {
        gateway.validate();
    } catch (const gateway::ConfigError& e) {
        bad(std::string("gateway.config: ") + e.what());
    }
    try {
        cloud::PasswordCost::parse(password_cost);
    } catch (const std::exception&) {
        bad("cloud.password_cost: unknown cost " + password_cost);
    }
    std::set<std::string> os_names;
    std::set<std::string> file_refs;
    for (const auto& os : oses) {
        if (os.name.empty()) bad("OS with empty name");
        if (!os_names.insert(os.name).second) bad("duplicate OS " + os.name);
        std::set<std::string> files;
        for (const auto& f : os.files) {
            if (!files.insert(f.filename).second) bad(os.name + ": duplicate file " + f.filename);
            if (f.size == 0) bad(os.name + ": empty file " + f.filename);
            file_refs.insert(os.name + "/" + f.filename);
        }
        if (!os.boot_template) {
            if (os.kernel.empty()) bad(os.name + ": kernel or template required");
            if (!files.count(os.kernel)) bad(os.name + ": kernel " + os.kernel + " is not among its files");
            for (const auto& i : os.initrds)
                if (!files.count(i)) bad(os.name + ": initrd " + i + " is not among its files");
        }
    }
    std::set<std::string> user_names;
    for (const auto& u : users) {
        if (u.username.empty()) bad("user with empty name");
        if (!user_names.insert(u.username).second) bad("duplicate user " + u.username);
        if (!os_names.count(u.os)) bad("user " + u.username + " assigned to undefined OS " + u.os);
    }
    std::set<std::string> client_names;
    std::set<MacAddress> macs;
    for (const auto& c : clients) {
        if (c.name.empty()) bad("client with empty name");
        if (!client_names.insert(c.name).second) bad("duplicate client " + c.name);
        if (!macs.insert(c.mac).second) bad("duplicate MAC " + c.mac.to_string());
    }
    auto need_client = [&](const std::string& n, const std::string& where) {
        if (!client_names.count(n)) bad(where + " references undefined client " + n);
    };
    auto need_user = [&](const std::string& n, const std::string& where) {
        if (!user_names.count(n)) bad(where + " references undefined user \"" + n + "\"");
    };
    std::vector<std::set<std::string>> booted_in(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& st = steps[i];
        std::string where = "steps[" + std::to_string(i) + "]";
        if (st.action == "boot") {
            for (const auto& c : st.clients) need_client(c, where);
            booted_in[i] = st.clients.empty() ? client_names : std::set<std::string>(st.clients.begin(), st.clients.end());
        } else if (st.action == "deactivate" || st.action == "activate" || st.action == "delete_user") {
            need_user(st.user, where);
        } else if (st.action == "assign_os") {
            need_user(st.user, where);
            if (!os_names.count(st.os)) bad(where + " references undefined OS " + st.os);
        } else if (st.action == "restart_cloud" || st.action == "wait") {
        } else {
            bad(where + ": unknown action " + st.action);
        }
    }
    for (const auto& f : faults) {
        if (f.kind == "rogue_dhcp") {
            if (!upstream) bad("rogue_dhcp fault needs an upstream network");
        } else if (f.kind == "corrupt_in_transit" || f.kind == "corrupt_at_rest") {
            if (!f.client.empty()) need_client(f.client, "fault " + f.kind);
            if (!file_refs.count(f.file)) bad("fault " + f.kind + " references undefined file " + f.file);
        } else if (f.kind == "loss") {
            bool known = f.segment == "internet" || (f.segment == "upstream" && upstream);
            if (f.segment.rfind("link-", 0) == 0) known = client_names.count(f.segment.substr(5)) > 0;
            if (!known) bad("loss fault references undefined segment " + f.segment);
            if (f.probability < 0 || f.probability > 1) bad("loss probability outside [0, 1]");
        } else {
            bad("unknown fault kind " + f.kind);
        }
    }
    for (const auto& e : expectations) {
        need_client(e.client, "expectation");
        if (!state_from_string(e.state)) bad("expectation for " + e.client + ": unknown state " + e.state);
        if (e.reason && !failure_name_valid(*e.reason))
            bad("expectation for " + e.client + ": unknown reason " + *e.reason);
        if (e.os && !os_names.count(*e.os)) bad("expectation for " + e.client + " references undefined OS " + *e.os);
        if (e.step) {
            if (steps.empty() ? *e.step != 0 : *e.step >= steps.size())
                bad("expectation for " + e.client + ": step out of range");
            if (!steps.empty() && !booted_in[*e.step].count(e.client))
                bad("expectation for " + e.client + ": step " + std::to_string(*e.step) + " does not boot it");
        }
    }
}

// ---------------------------------------------------------------- Harness

Harness::Harness(const ScenarioSpec& spec, const std::filesystem::path& store_dir, std::uint64_t seed)
    : spec_(spec), net_(seed) {
    internet_ = &net_.add_segment("internet", SegmentKind::Broadcast, spec.link);
    if (spec.upstream) {
        SegmentParams p = spec.link;
        p.ssid = spec.upstream->ssid;
        p.passphrase = spec.upstream->passphrase;
        p.apn = spec.upstream->apn;
        upstream_ = &net_.add_segment("upstream", spec.upstream->kind, p);
    }

    RouterConfig rc;
    rc.dhcp_enabled = !spec.upstream || spec.upstream->dhcp;
    rc.zone[spec.gateway.cloud_domain] = spec.cloud_ip;
    router_ = std::make_unique<RouterNode>(net_, "router", rc);
    net_.attach(router_->wan(), *internet_);
    if (upstream_) net_.attach(router_->lan(), *upstream_, {upstream_->params().ssid, upstream_->params().passphrase,
                                                            upstream_->params().apn});

    cloud::ControlPlaneConfig cc;
    cc.store_dir = store_dir;
    cc.base_url = "http://" + spec.gateway.cloud_domain;
    cc.password_cost = cloud::PasswordCost::parse(spec.password_cost);
    cc.clock = [this] { return sim_epoch_ms + net_.now() / 1000; };
    cloud_ = std::make_unique<CloudNode>(net_, "cloud", spec.cloud_ip, cc, spec.admin_token);
    net_.attach(cloud_->port(), *internet_);

    for (const auto& f : spec.faults) {
        if (f.kind == "rogue_dhcp" && !rogue_) {
            rogue_ = std::make_unique<RogueDhcpNode>(net_, "rogue", Ipv4Address{10, 0, 0, 66},
                                                     gateway::make_bootloader_blob("evil.example"), f.offer_address);
            net_.attach(rogue_->port(), *upstream_, {upstream_->params().ssid, upstream_->params().passphrase,
                                                     upstream_->params().apn});
        }
    }

    for (const auto& c : spec.clients) {
        auto gw = std::make_unique<GatewayNode>(net_, "gw-" + c.name, spec.gateway);
        gw->set_sanitize(spec.gateway_sanitize);
        if (upstream_) {
            if (upstream_->kind() == SegmentKind::Broadcast) gw->set_upstream_candidates({}, upstream_);
            else gw->set_upstream_candidates({upstream_});
        }
        auto client = std::make_unique<ClientNode>(net_, c.name, c.mac, c.config);
        auto& link = net_.add_segment("link-" + c.name, SegmentKind::PointToPoint, spec.link);
        net_.attach(gw->internal(), link);
        net_.attach(client->port(), link);
        if (spec.gateway_connect) {
            auto* g = gw.get();
            auto profile = *spec.gateway_connect;
            net_.clock().schedule_at(0, [g, profile] { g->connect(profile); });
        }
        gateways_[c.name] = std::move(gw);
        clients_[c.name] = std::move(client);
    }

    for (const auto& f : spec.faults) {
        if (f.kind == "loss") {
            if (auto* seg = net_.find_segment(f.segment)) seg->params().loss = f.probability;
        }
    }
}

Harness::~Harness() {
    // Clients first: their sessions hold timers on the shared clock.
    clients_.clear();
}

void Harness::seed_cloud() {
    auto* cp = cloud_->control_plane();
    for (const auto& os : spec_.oses) {
        auto tmpl = os.boot_template ? *os.boot_template : cloud::default_template(os.kernel, os.initrds);
        auto id = cp->create_os(os.name, tmpl, os.kernel_params);
        os_ids_[os.name] = id;
        for (const auto& f : os.files) {
            auto bytes = synthetic_artifact(os.name + "/" + f.filename, f.size);
            auto info = cp->upload_file(id, f.filename, bytes);
            digests_[id + "/" + f.filename] = info.sha256;
        }
    }
    for (const auto& u : spec_.users) cp->create_user(u.username, u.password, os_ids_.at(u.os));

    for (const auto& f : spec_.faults) {
        auto slash = f.file.find('/');
        if (f.kind == "corrupt_at_rest") {
            auto path = cp->config().store_dir / "files" / os_ids_.at(f.file.substr(0, slash)) / f.file.substr(slash + 1);
            std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
            char c = 0;
            io.seekg(0);
            io.get(c);
            io.seekp(0);
            io.put(char(c ^ 0x01));
        } else if (f.kind == "corrupt_in_transit") {
            auto id = os_ids_.at(f.file.substr(0, slash));
            auto digest = digests_.at(id + "/" + f.file.substr(slash + 1));
            std::string marker = std::string(cloud::digest_header) + ": " + digest;
            for (auto& [name, client] : clients_) {
                if (!f.client.empty() && f.client != name) continue;
                client->receive_filter = [marker](Packet& p) {
                    if (p.proto != Proto::Stream || p.payload.empty()) return true;
                    std::string_view text(reinterpret_cast<const char*>(p.payload.data()), p.payload.size());
                    auto head_end = text.find("\r\n\r\n");
                    if (head_end != std::string_view::npos && text.substr(0, head_end).find(marker) != std::string_view::npos)
                        p.payload.back() ^= 0x01;
                    return true;
                };
            }
        }
    }
}

Micros Harness::boot(const std::vector<std::string>& names) {
    std::vector<ClientNode*> nodes;
    for (const auto& n : names) nodes.push_back(clients_.at(n).get());
    auto started = std::make_shared<std::size_t>(0);
    for (const auto& cs : spec_.clients) {
        auto it = std::find(names.begin(), names.end(), cs.name);
        if (it == names.end()) continue;
        ClientNode* node = clients_.at(cs.name).get();
        node->power_off();
        auto creds = cs.creds;
        net_.clock().schedule_after(cs.power_on_delay, [node, creds, started] {
            node->power_on(creds);
            ++*started;
        });
    }
    net_.clock().run_until([&] {
        if (*started < nodes.size()) return false;
        for (auto* n : nodes)
            if (!n->outcome().terminal()) return false;
        return true;
    });
    return net_.now();
}

// ---------------------------------------------------------------- run_scenario

namespace {

json session_json(const SessionRecord& s, const std::map<std::string, std::string>& os_names,
                  const std::optional<std::string>& trace_path) {
    const auto& o = s.outcome;
    json artifacts = json::array();
    for (const auto& [url, sha] : o.artifact_digests) artifacts.push_back({{"url", url}, {"sha256", sha}});
    json j{{"step", s.step},
           {"client", s.client},
           {"mac", s.mac.to_string()},
           {"state", o.suspended ? std::string("AwaitingCredentials") : std::string(to_string(o.state))},
           {"suspended", o.suspended},
           {"os_id", o.os_id.empty() ? json(nullptr) : json(o.os_id)},
           {"os", os_names.count(o.os_id) ? json(os_names.at(o.os_id)) : json(nullptr)},
           {"boot_time_ms", double(o.boot_time()) / 1000.0},
           {"artifacts", artifacts},
           {"bootloader_sha256", o.bootloader_sha256},
           {"auth_attempts", o.auth_attempts},
           {"auth_rejections", o.auth_rejections},
           {"boot_cycles", o.boot_cycles},
           {"trace_path", trace_path ? json(*trace_path) : json(nullptr)}};
    if (o.failure)
        j["failure"] = {{"stage", to_string(*o.failed_stage)}, {"reason", to_string(*o.failure)},
                        {"detail", o.failure_detail}};
    else
        j["failure"] = nullptr;
    return j;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const RunOptions& opts) {
    spec.validate();
    std::uint64_t seed = opts.seed_override.value_or(spec.seed);

    std::filesystem::path store = opts.store_dir;
    bool temp_store = store.empty();
    if (temp_store) {
        auto tmpl = (std::filesystem::temp_directory_path() / "sdb-sim-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("cannot create temporary store directory");
        store = tmpl;
    }

    ScenarioResult result;
    {
        Harness h(spec, store, seed);
        h.seed_cloud();
        std::map<std::string, std::string> os_names;
        for (const auto& [name, id] : h.os_ids()) os_names[id] = name;

        auto steps = spec.steps;
        if (steps.empty()) steps.push_back(StepSpec{"boot", {}, "", "", 0});
        json sessions = json::array();
        json steps_out = json::array();
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& st = steps[i];
            auto* cp = h.cloud().control_plane();
            json step_json{{"index", i}, {"action", st.action}, {"start_ms", double(h.net().now()) / 1000.0}};
            if (st.action == "boot") {
                std::vector<std::string> names = st.clients;
                if (names.empty())
                    for (const auto& c : spec.clients) names.push_back(c.name);
                h.boot(names);
                for (const auto& n : names) {
                    auto& c = h.client(n);
                    SessionRecord rec{i, n, c.mac(), c.outcome(), c.trace(), c.state_history()};
                    std::optional<std::string> trace_path;
                    if (opts.trace_dir) {
                        std::filesystem::create_directories(*opts.trace_dir);
                        auto p = *opts.trace_dir / (n + "-step" + std::to_string(i) + ".jsonl");
                        std::ofstream(p) << trace_jsonl(rec.trace);
                        trace_path = p.string();
                    }
                    sessions.push_back(session_json(rec, os_names, trace_path));
                    result.sessions.push_back(std::move(rec));
                }
            } else if (st.action == "deactivate") {
                cp->deactivate_user(st.user);
            } else if (st.action == "activate") {
                cp->activate_user(st.user);
            } else if (st.action == "delete_user") {
                cp->delete_user(st.user);
            } else if (st.action == "assign_os") {
                cp->assign_os(st.user, h.os_ids().at(st.os));
            } else if (st.action == "restart_cloud") {
                h.cloud().stop();
                h.cloud().start();
            } else if (st.action == "wait") {
                h.net().clock().advance(h.net().now() + st.duration);
            }
            step_json["end_ms"] = double(h.net().now()) / 1000.0;
            steps_out.push_back(step_json);
        }

        // Expectations against the matching session (default: the client's last one).
        for (const auto& e : spec.expectations) {
            const SessionRecord* rec = nullptr;
            for (const auto& s : result.sessions)
                if (s.client == e.client && (!e.step || s.step == *e.step)) rec = &s;
            std::string who = e.client + (e.step ? " (step " + std::to_string(*e.step) + ")" : "");
            if (!rec) {
                result.mismatches.push_back(who + ": never booted");
                continue;
            }
            const auto& o = rec->outcome;
            std::string state = o.suspended ? "AwaitingCredentials" : to_string(o.state);
            if (state != e.state) result.mismatches.push_back(who + ": state " + state + ", expected " + e.state);
            if (e.reason && (!o.failure || *e.reason != to_string(*o.failure)))
                result.mismatches.push_back(who + ": reason " + (o.failure ? to_string(*o.failure) : "none") +
                                            ", expected " + *e.reason);
            if (e.os) {
                auto want = h.os_ids().at(*e.os);
                if (o.os_id != want) result.mismatches.push_back(who + ": os " + o.os_id + ", expected " + want);
                for (const auto& [url, sha] : o.artifact_digests) {
                    auto pos = url.find("/files/");
                    auto key = pos == std::string::npos ? url : url.substr(pos + 7);
                    auto it = h.artifact_digests().find(key);
                    if (it == h.artifact_digests().end() || it->second != sha)
                        result.mismatches.push_back(who + ": artifact " + url + " does not match the uploaded file");
                }
            }
            if (e.max_boot_time_ms && double(o.boot_time()) / 1000.0 > *e.max_boot_time_ms)
                result.mismatches.push_back(who + ": boot time " + std::to_string(double(o.boot_time()) / 1000.0) +
                                            " ms exceeds " + std::to_string(*e.max_boot_time_ms));
        }

        // Audit: one log row per credential submission, tagged with the submitting MAC.
        std::map<std::string, std::size_t> attempts_by_mac;
        std::size_t attempts = 0;
        for (const auto& s : result.sessions) {
            attempts += std::size_t(s.outcome.auth_attempts);
            attempts_by_mac[s.mac.to_string()] += std::size_t(s.outcome.auth_attempts);
        }
        std::map<std::string, std::size_t> rows_by_mac;
        std::size_t rows = 0;
        if (auto* cp = h.cloud().control_plane()) {
            cloud::LogFilter all;
            all.page_size = 500;
            for (std::size_t page = 1;; ++page) {
                all.page = page;
                auto lp = cp->list_auth_log(all);
                for (const auto& e : lp.entries) ++rows_by_mac[e.mac];
                rows += lp.entries.size();
                if (page * lp.page_size >= lp.total) break;
            }
        }
        std::erase_if(attempts_by_mac, [](const auto& kv) { return kv.second == 0; });
        bool audit = rows == attempts && rows_by_mac == attempts_by_mac;

        json gateways = json::object();
        for (const auto& c : spec.clients) {
            auto& g = h.gateway(c.name);
            auto st = g.logic().state();
            gateways[g.name()] = {
                {"mode", gateway::to_string(st.mode.kind)},
                {"upstream_server", st.mode.upstream_server ? json(st.mode.upstream_server->to_string()) : json(nullptr)},
                {"link", st.profile ? json(gateway::to_string(st.profile->status)) : json(nullptr)},
                {"sanitized_replies", g.sanitized()}};
        }

        if (opts.capture_path) std::ofstream(*opts.capture_path) << h.net().capture_jsonl();

        result.expectations_met = result.mismatches.empty();
        result.report = json{{"schema_version", report_schema_version},
                             {"scenario", spec.name},
                             {"seed", seed},
                             {"ok", result.expectations_met},
                             {"sim_time_ms", double(h.net().now()) / 1000.0},
                             {"steps", steps_out},
                             {"sessions", sessions},
                             {"gateways", gateways},
                             {"audit",
                              {{"auth_attempts", attempts}, {"log_entries", rows}, {"macs_match", audit}}},
                             {"network", {{"delivered", h.net().delivered()}, {"dropped", h.net().dropped()}}},
                             {"mismatches", result.mismatches}};
    }
    if (temp_store && !opts.keep_store) std::filesystem::remove_all(store);
    return result;
}

}  // namespace sdb::sim
