// sdb: run the boot gateway or the cloud module, administer the cloud, or simulate a scenario.
//
// Exit codes: 0 success, 1 expectation mismatch, 2 usage or validation error,
// 3 environment or runtime error.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdb/cloud/control_plane.hpp"
#include "sdb/cloud/service.hpp"
#include "sdb/cloud/templates.hpp"
#include "sdb/gateway/config.hpp"
#include "sdb/gateway/gateway.hpp"
#include "sdb/live/admin_client.hpp"
#include "sdb/live/cloud_server.hpp"
#include "sdb/live/gateway_server.hpp"
#include "sdb/sim/scenario.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sdb;

namespace {

enum Exit { ok = 0, mismatch = 1, usage = 2, runtime = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError(p.string() + ": cannot read");
    return {std::istreambuf_iterator<char>(in), {}};
}

// Line of the first occurrence of "key" in the JSON text, for error messages.
std::optional<std::size_t> line_of_key(const std::string& text, const std::string& key) {
    auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return std::nullopt;
    return std::size_t(std::count(text.begin(), text.begin() + std::ptrdiff_t(pos), '\n') + 1);
}

json parse_json_file(const fs::path& p, std::string& text) {
    text = read_file(p);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(p.string() + ": " + e.what());
    }
}

// "key: message" errors get the key's line prepended.
[[noreturn]] void config_error(const fs::path& p, const std::string& text, const std::string& message) {
    auto key = message.substr(0, message.find(':'));
    if (auto dot = key.rfind('.'); dot != std::string::npos) key = key.substr(dot + 1);
    auto line = line_of_key(text, key);
    throw UsageError(p.string() + (line ? ":" + std::to_string(*line) : std::string()) + ": " + message);
}

void wait_for_signal() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
}

void block_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

// ---------------------------------------------------------------- gateway

struct GatewayArgs {
    std::string config;
    std::string bind = "0.0.0.0";
    std::string broadcast = "255.255.255.255";
    std::string link_hook;
    bool check = false;
};

// Runs the hook with the profile in the environment. Exit 0 = connected, 2 = credentials
// rejected, anything else = network not found.
gateway::AttachResult run_link_hook(const std::string& cmd, const gateway::ConnectivityProfile& p) {
    pid_t pid = fork();
    if (pid < 0) return gateway::AttachResult::NoSuchNetwork;
    if (pid == 0) {
        setenv("SDB_LINK_KIND", gateway::to_string(p.kind), 1);
        setenv("SDB_LINK_SSID", p.ssid.c_str(), 1);
        setenv("SDB_LINK_PASSPHRASE", p.passphrase.c_str(), 1);
        setenv("SDB_LINK_APN", p.apn.c_str(), 1);
        setenv("SDB_LINK_USERNAME", p.username.c_str(), 1);
        setenv("SDB_LINK_PASSWORD", p.password.c_str(), 1);
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return gateway::AttachResult::Connected;
    if (WIFEXITED(status) && WEXITSTATUS(status) == 2) return gateway::AttachResult::AuthFailure;
    return gateway::AttachResult::NoSuchNetwork;
}

int cmd_gateway(const GatewayArgs& a) {
    gateway::GatewayConfig cfg;
    if (!a.config.empty()) {
        std::string text;
        auto j = parse_json_file(a.config, text);
        try {
            cfg = gateway::gateway_config_from_json(j);
            cfg.validate();
        } catch (const gateway::ConfigError& e) {
            config_error(a.config, text, e.what());
        }
    }
    cfg.ensure_bootloader();
    live::LiveGatewayOptions opts;
    auto bind = Ipv4Address::parse(a.bind);
    auto bcast = Ipv4Address::parse(a.broadcast);
    if (!bind || !bcast) throw UsageError("--bind/--broadcast: expected a.b.c.d");
    opts.bind_ip = *bind;
    opts.broadcast_ip = *bcast;
    if (!a.link_hook.empty())
        opts.attach_hook = [cmd = a.link_hook](const gateway::ConnectivityProfile& p) { return run_link_hook(cmd, p); };
    if (a.check) {
        std::cout << gateway::to_json(cfg).dump(2) << "\n";
        return ok;
    }

    block_signals();
    gateway::Gateway gw(cfg);
    live::LiveGateway server(gw, opts);
    server.start();
    std::cerr << "gateway " << cfg.static_ip.to_string() << " listening: dhcp=" << server.dhcp_port()
              << " tftp=" << server.tftp_port() << " dns=" << server.dns_port() << " http=" << server.http_port()
              << "\n";
    if (cfg.upstream_connected) {
        auto mode = server.probe();
        std::cerr << "upstream probe: " << (mode.kind == gateway::ModeKind::Proxy ? "proxy" : "standalone") << "\n";
    }
    wait_for_signal();
    server.stop();
    return ok;
}

// ---------------------------------------------------------------- cloud

struct CloudArgs {
    std::string config;
    std::string store;
    std::string listen;
    int port = -1;
    std::string token;
    std::string base_url;
    std::string password_cost;
    std::string admin_assets;
    bool check = false;
};

int cmd_cloud(CloudArgs a) {
    if (!a.config.empty()) {
        std::string text;
        auto j = parse_json_file(a.config, text);
        static const std::set<std::string> known = {"store_dir", "listen",        "port",        "admin_token",
                                                    "base_url",  "password_cost", "admin_assets"};
        if (!j.is_object()) throw UsageError(a.config + ": expected a JSON object");
        for (const auto& [k, v] : j.items())
            if (!known.contains(k)) config_error(a.config, text, k + ": unknown key");
        try {
            if (a.store.empty()) a.store = j.value("store_dir", "");
            if (a.listen.empty()) a.listen = j.value("listen", "");
            if (a.port < 0) a.port = j.value("port", -1);
            if (a.token.empty()) a.token = j.value("admin_token", "");
            if (a.base_url.empty()) a.base_url = j.value("base_url", "");
            if (a.password_cost.empty()) a.password_cost = j.value("password_cost", "");
            if (a.admin_assets.empty()) a.admin_assets = j.value("admin_assets", "");
        } catch (const json::type_error& e) {
            throw UsageError(a.config + ": " + e.what());
        }
    }
    if (a.store.empty()) a.store = "sdb-store";
    if (a.listen.empty()) a.listen = "0.0.0.0";
    if (a.port < 0) a.port = 8080;
    if (a.port > 65535) throw UsageError("port: out of range");
    if (a.base_url.empty()) a.base_url = "http://boot.cloud.example";
    if (a.password_cost.empty()) a.password_cost = "interactive";

    cloud::ControlPlaneConfig cc;
    cc.store_dir = a.store;
    cc.base_url = a.base_url;
    try {
        cc.password_cost = cloud::PasswordCost::parse(a.password_cost);
    } catch (const std::exception&) {
        throw UsageError("password_cost: expected interactive, moderate or minimal");
    }
    cloud::ControlPlane cp(cc);
    if (a.check) {
        auto bad = cp.verify_files();
        json r = {{"store", a.store},
                  {"os", cp.list_os().size()},
                  {"users", cp.list_users().size()},
                  {"log_entries", cp.auth_log_count()},
                  {"corrupt_files", bad}};
        std::cout << r.dump(2) << "\n";
        return bad.empty() ? ok : runtime;
    }
    if (a.token.empty()) throw UsageError("an admin token is required (--token or SDB_TOKEN)");

    block_signals();
    std::optional<fs::path> assets;
    if (!a.admin_assets.empty()) assets = a.admin_assets;
    cloud::CloudService svc(cp, a.token, assets);
    live::LiveCloud server(svc, a.listen, std::uint16_t(a.port));
    server.start();
    std::cerr << "cloud listening on " << a.listen << ":" << server.port() << " store=" << a.store << "\n";
    wait_for_signal();
    server.stop();
    return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    bool json_out = false;
    std::string report;
    std::string trace_dir;
    std::string capture;
    std::string store;
};

int cmd_simulate(const SimulateArgs& a) {
    sim::ScenarioSpec spec;
    try {
        spec = sim::ScenarioSpec::load(a.scenario);
    } catch (const sim::ScenarioInvalid& e) {
        std::cerr << "ScenarioInvalid: " << e.what() << "\n";
        return usage;
    }
    sim::RunOptions opts;
    opts.seed_override = a.seed;
    if (!a.trace_dir.empty()) opts.trace_dir = a.trace_dir;
    if (!a.capture.empty()) opts.capture_path = a.capture;
    if (!a.store.empty()) {
        opts.store_dir = a.store;
        opts.keep_store = true;
    }
    auto result = sim::run_scenario(spec, opts);
    if (!a.report.empty()) {
        std::ofstream out(a.report);
        out << result.report.dump(2) << "\n";
        if (!out) throw std::runtime_error(a.report + ": cannot write");
    }
    if (a.json_out) {
        std::cout << result.report.dump(2) << "\n";
    } else {
        std::cout << "scenario " << spec.name << " seed " << result.report.at("seed") << "\n";
        for (const auto& s : result.report.at("sessions")) {
            std::ostringstream line;
            line << "  step " << s.at("step") << "  " << s.at("client").get<std::string>() << "  "
                 << s.at("state").get<std::string>();
            if (!s.at("os").is_null()) line << "  " << s.at("os").get<std::string>();
            if (!s.at("failure").is_null())
                line << "  " << s.at("failure").at("stage").get<std::string>() << "/"
                     << s.at("failure").at("reason").get<std::string>();
            line << "  " << s.at("boot_time_ms") << " ms";
            std::cout << line.str() << "\n";
        }
        const auto& audit = result.report.at("audit");
        std::cout << "  audit: " << audit.at("auth_attempts") << " attempts, " << audit.at("log_entries")
                  << " log entries\n";
    }
    for (const auto& m : result.mismatches) std::cerr << "mismatch: " << m << "\n";
    return result.expectations_met ? ok : mismatch;
}

// ---------------------------------------------------------------- admin

struct AdminArgs {
    std::string url = "http://127.0.0.1:8080";
    std::string token;
    bool json_out = false;
};

void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
    auto emit = [&](const std::vector<std::string>& r) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            line += r[i];
            if (i + 1 < r.size()) line += std::string(w[i] - r[i].size() + 2, ' ');
        }
        std::cout << line << "\n";
    };
    emit(header);
    for (const auto& r : rows) emit(r);
}

std::string ms_to_iso(std::int64_t ms) {
    std::time_t t = ms / 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void show_users(const json& list, bool as_json) {
    if (as_json) {
        std::cout << list.dump(2) << "\n";
        return;
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& u : list)
        rows.push_back({u.at("username"), u.at("assigned_os"), u.at("active").get<bool>() ? "active" : "inactive"});
    print_table({"USERNAME", "OS", "STATUS"}, rows);
}

void show_os(const json& list, bool as_json) {
    if (as_json) {
        std::cout << list.dump(2) << "\n";
        return;
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& o : list) {
        std::string files;
        for (const auto& f : o.at("files")) files += (files.empty() ? "" : ",") + f.at("filename").get<std::string>();
        rows.push_back({o.at("os_id"), o.at("name"), files});
    }
    print_table({"OS_ID", "NAME", "FILES"}, rows);
}

void show_logs(const json& page, bool as_json) {
    if (as_json) {
        std::cout << page.dump(2) << "\n";
        return;
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : page.at("entries")) {
        bool okay = e.at("success").get<bool>();
        rows.push_back({ms_to_iso(e.at("timestamp_ms")), e.at("username"), e.at("mac"), e.at("client_ip"),
                        okay ? "success" : "failure",
                        e.at("failure_reason").is_null() ? "" : e.at("failure_reason").get<std::string>()});
    }
    print_table({"TIME", "USERNAME", "MAC", "CLIENT_IP", "RESULT", "REASON"}, rows);
    std::cout << "page " << page.at("page") << ", " << page.at("total") << " matching\n";
}

void show_one(const json& j, bool as_json, const std::string& text) {
    if (as_json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text << "\n";
}

int admin_error_exit(const live::AdminError& e) {
    std::cerr << e.what() << "\n";
    if (e.status() == 0 || e.status() >= 500) return runtime;
    return usage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdb: secure diskless boot gateway, cloud module and simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sdb 1.0");

    // gateway
    GatewayArgs ga;
    auto* gw = app.add_subcommand("gateway", "Serve DHCP, TFTP, DNS and the portal on real sockets");
    gw->add_option("--config", ga.config, "Gateway config (JSON)")->envname("SDB_CONFIG")->check(CLI::ExistingFile);
    gw->add_option("--bind", ga.bind, "Address to bind")->envname("SDB_BIND")->capture_default_str();
    gw->add_option("--broadcast", ga.broadcast, "Broadcast address for DHCP replies")->capture_default_str();
    gw->add_option("--link-hook", ga.link_hook, "Command that brings the upstream link up for portal submissions")
        ->envname("SDB_LINK_HOOK");
    gw->add_flag("--check", ga.check, "Validate the config, print it and exit");

    // cloud
    CloudArgs ca;
    auto* cl = app.add_subcommand("cloud", "Serve the cloud module (boot routes, /api, /admin)");
    cl->add_option("--config", ca.config, "Cloud config (JSON)")->envname("SDB_CONFIG")->check(CLI::ExistingFile);
    cl->add_option("--store", ca.store, "Store directory")->envname("SDB_STORE");
    cl->add_option("--listen", ca.listen, "Listen address")->envname("SDB_LISTEN");
    cl->add_option("--port", ca.port, "Listen port")->envname("SDB_PORT");
    cl->add_option("--token", ca.token, "Admin bearer token")->envname("SDB_TOKEN");
    cl->add_option("--base-url", ca.base_url, "Base URL written into boot scripts")->envname("SDB_BASE_URL");
    cl->add_option("--password-cost", ca.password_cost, "interactive, moderate or minimal")
        ->envname("SDB_PASSWORD_COST");
    cl->add_option("--admin-assets", ca.admin_assets, "Admin UI bundle directory")->envname("SDB_ADMIN_ASSETS");
    cl->add_flag("--check", ca.check, "Open the store, verify artifact digests, print a summary and exit");

    // simulate
    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario in the simulated network");
    sim_cmd->add_option("--scenario,scenario", sa.scenario, "Scenario file (JSON)")
        ->envname("SDB_SCENARIO")
        ->required()
        ->check(CLI::ExistingFile);
    sim_cmd->add_option("--seed", sa.seed, "Override the scenario seed")->envname("SDB_SEED");
    sim_cmd->add_flag("--json", sa.json_out, "Print the full JSON report");
    sim_cmd->add_option("--report", sa.report, "Also write the JSON report to this file");
    sim_cmd->add_option("--trace-dir", sa.trace_dir, "Write per-session JSONL traces here");
    sim_cmd->add_option("--capture", sa.capture, "Write the packet capture (JSONL) here");
    sim_cmd->add_option("--store", sa.store, "Keep the control-plane store in this directory");

    // admin
    AdminArgs aa;
    auto* ad = app.add_subcommand("admin", "Administer a running cloud module over /api");
    ad->require_subcommand(1);
    ad->fallthrough();  // inherited by the nested subcommands, so --token etc. may come last
    ad->add_option("--url", aa.url, "Cloud base URL")->envname("SDB_URL")->capture_default_str();
    ad->add_option("--token", aa.token, "Admin bearer token")->envname("SDB_TOKEN");
    ad->add_flag("--json", aa.json_out, "JSON output");

    std::function<json(live::AdminClient&)> action;
    std::function<void(const json&)> render;

    auto* users = ad->add_subcommand("users", "List users");
    users->callback([&] {
        action = [](live::AdminClient& c) { return c.list_users(); };
        render = [&](const json& j) { show_users(j, aa.json_out); };
    });

    auto* user = ad->add_subcommand("user", "Manage one user");
    user->require_subcommand(1);
    static std::string u_name, u_password, u_os;
    auto* u_create = user->add_subcommand("create", "Create a user");
    u_create->add_option("username", u_name)->required();
    u_create->add_option("--password", u_password, "Password")->envname("SDB_PASSWORD")->required();
    u_create->add_option("--os", u_os, "OS id, name or id prefix")->required();
    u_create->callback([&] {
        action = [](live::AdminClient& c) { return c.create_user(u_name, u_password, c.resolve_os(u_os)); };
        render = [&](const json& j) {
            show_one(j, aa.json_out, "created " + j.at("username").get<std::string>() + " -> " +
                                         j.at("assigned_os").get<std::string>());
        };
    });
    auto* u_delete = user->add_subcommand("delete", "Delete a user");
    u_delete->add_option("username", u_name)->required();
    u_delete->callback([&] {
        action = [](live::AdminClient& c) {
            c.delete_user(u_name);
            return json{{"deleted", u_name}};
        };
        render = [&](const json& j) { show_one(j, aa.json_out, "deleted " + u_name); };
    });
    for (const char* verb : {"deactivate", "activate"}) {
        auto* sub = user->add_subcommand(verb, std::string(verb) + " a user");
        sub->add_option("username", u_name)->required();
        bool on = std::string(verb) == "activate";
        sub->callback([&, on] {
            action = [on](live::AdminClient& c) { return on ? c.activate_user(u_name) : c.deactivate_user(u_name); };
            render = [&](const json& j) {
                show_one(j, aa.json_out,
                         j.at("username").get<std::string>() + (j.at("active").get<bool>() ? " active" : " inactive"));
            };
        });
    }
    auto* u_assign = user->add_subcommand("assign", "Assign an OS");
    u_assign->add_option("username", u_name)->required();
    u_assign->add_option("--os", u_os, "OS id, name or id prefix")->required();
    u_assign->callback([&] {
        action = [](live::AdminClient& c) { return c.assign_os(u_name, c.resolve_os(u_os)); };
        render = [&](const json& j) {
            show_one(j, aa.json_out,
                     j.at("username").get<std::string>() + " -> " + j.at("assigned_os").get<std::string>());
        };
    });
    auto* u_passwd = user->add_subcommand("passwd", "Set a user's password");
    u_passwd->add_option("username", u_name)->required();
    u_passwd->add_option("--password", u_password, "New password")->envname("SDB_PASSWORD")->required();
    u_passwd->callback([&] {
        action = [](live::AdminClient& c) { return c.set_password(u_name, u_password); };
        render = [&](const json& j) { show_one(j, aa.json_out, "password updated for " + u_name); };
    });

    auto* os = ad->add_subcommand("os", "Manage OS definitions");
    os->require_subcommand(1);
    static std::string o_name, o_template, o_kernel, o_params, o_id;
    static std::vector<std::string> o_initrds;
    auto* o_list = os->add_subcommand("list", "List OS definitions");
    o_list->callback([&] {
        action = [](live::AdminClient& c) { return c.list_os(); };
        render = [&](const json& j) { show_os(j, aa.json_out); };
    });
    auto* o_create = os->add_subcommand("create", "Create an OS definition");
    o_create->add_option("name", o_name)->required();
    auto* tmpl_opt = o_create->add_option("--template", o_template, "Boot template file")->check(CLI::ExistingFile);
    auto* kernel_opt = o_create->add_option("--kernel", o_kernel, "Kernel filename (generates the template)");
    o_create->add_option("--initrd", o_initrds, "Initrd filename, repeatable")->needs(kernel_opt);
    o_create->add_option("--params", o_params, "Kernel parameters");
    tmpl_opt->excludes(kernel_opt);
    o_create->callback([&] {
        if (o_template.empty() && o_kernel.empty()) throw CLI::ValidationError("os create", "--template or --kernel required");
        action = [](live::AdminClient& c) {
            auto t = o_template.empty() ? cloud::default_template(o_kernel, o_initrds) : read_file(o_template);
            return c.create_os(o_name, t, o_params);
        };
        render = [&](const json& j) {
            show_one(j, aa.json_out, "created " + j.at("os_id").get<std::string>() + " (" +
                                         j.at("name").get<std::string>() + ")");
        };
    });
    auto* o_show = os->add_subcommand("show", "Show one OS definition");
    o_show->add_option("os", o_id)->required();
    o_show->callback([&] {
        action = [](live::AdminClient& c) { return c.get_os(c.resolve_os(o_id)); };
        render = [&](const json& j) {
            if (aa.json_out) {
                std::cout << j.dump(2) << "\n";
                return;
            }
            std::cout << j.at("os_id").get<std::string>() << "  " << j.at("name").get<std::string>() << "\n"
                      << j.at("boot_template").get<std::string>();
            std::vector<std::vector<std::string>> rows;
            for (const auto& f : j.at("files"))
                rows.push_back({f.at("filename"), std::to_string(f.at("size").get<std::uint64_t>()), f.at("sha256")});
            print_table({"FILE", "SIZE", "SHA256"}, rows);
        };
    });
    auto* o_delete = os->add_subcommand("delete", "Delete an OS definition");
    o_delete->add_option("os", o_id)->required();
    o_delete->callback([&] {
        action = [](live::AdminClient& c) {
            auto id = c.resolve_os(o_id);
            c.delete_os(id);
            return json{{"deleted", id}};
        };
        render = [&](const json& j) { show_one(j, aa.json_out, "deleted " + j.at("deleted").get<std::string>()); };
    });

    auto* files = ad->add_subcommand("files", "Upload or delete OS files");
    files->require_subcommand(1);
    static std::vector<std::string> f_paths;
    static std::string f_name;
    auto* f_upload = files->add_subcommand("upload", "Upload files to an OS");
    f_upload->add_option("os", o_id)->required();
    f_upload->add_option("paths", f_paths)->required()->check(CLI::ExistingFile);
    f_upload->add_option("--name", f_name, "Stored filename (single upload only)");
    f_upload->callback([&] {
        if (!f_name.empty() && f_paths.size() != 1) throw CLI::ValidationError("--name", "needs exactly one file");
        action = [](live::AdminClient& c) {
            auto id = c.resolve_os(o_id);
            json out = json::array();
            for (const auto& p : f_paths) {
                auto text = read_file(p);
                auto name = f_name.empty() ? fs::path(p).filename().string() : f_name;
                out.push_back(c.upload_file(id, name, Bytes(text.begin(), text.end())));
            }
            return out;
        };
        render = [&](const json& j) {
            if (aa.json_out) {
                std::cout << j.dump(2) << "\n";
                return;
            }
            for (const auto& f : j)
                std::cout << f.at("filename").get<std::string>() << "  " << f.at("size") << " bytes  "
                          << f.at("sha256").get<std::string>() << "\n";
        };
    });
    auto* f_delete = files->add_subcommand("delete", "Delete one OS file");
    f_delete->add_option("os", o_id)->required();
    f_delete->add_option("filename", f_name)->required();
    f_delete->callback([&] {
        action = [](live::AdminClient& c) {
            c.delete_file(c.resolve_os(o_id), f_name);
            return json{{"deleted", f_name}};
        };
        render = [&](const json& j) { show_one(j, aa.json_out, "deleted " + f_name); };
    });

    auto* logs = ad->add_subcommand("logs", "Show the authentication log");
    static live::LogQuery lq;
    static bool failed_only = false, succeeded_only = false;
    static std::string l_user, l_mac;
    auto* failed_flag = logs->add_flag("--failed", failed_only, "Failures only");
    logs->add_flag("--succeeded", succeeded_only, "Successes only")->excludes(failed_flag);
    logs->add_option("--user", l_user, "Filter by username");
    logs->add_option("--mac", l_mac, "Filter by MAC");
    logs->add_option("--page", lq.page, "Page number (1-based)")->check(CLI::PositiveNumber);
    logs->add_option("--page-size", lq.page_size, "Entries per page")->check(CLI::PositiveNumber);
    logs->callback([&] {
        if (failed_only) lq.success = false;
        if (succeeded_only) lq.success = true;
        if (!l_user.empty()) lq.username = l_user;
        if (!l_mac.empty()) lq.mac = l_mac;
        action = [](live::AdminClient& c) { return c.logs(lq); };
        render = [&](const json& j) { show_logs(j, aa.json_out); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (gw->parsed()) return cmd_gateway(ga);
        if (cl->parsed()) return cmd_cloud(ca);
        if (sim_cmd->parsed()) return cmd_simulate(sa);
        if (ad->parsed() && action) {
            live::AdminClient client(aa.url, aa.token);
            try {
                render(action(client));
            } catch (const live::AdminError& e) {
                return admin_error_exit(e);
            }
            return ok;
        }
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return usage;
    } catch (const live::PortBindFailure& e) {
        std::cerr << "PortBindFailure: " << e.what() << "\n";
        return runtime;
    } catch (const cloud::CloudError& e) {
        std::cerr << cloud::to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == cloud::ErrorKind::StoreCorruption ? runtime : usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime;
    }
    return usage;
}
