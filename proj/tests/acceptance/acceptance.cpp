// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is non-zero when any
// criterion fails.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fuzz_support.hpp"
#include "sdb/cloud/control_plane.hpp"
#include "sdb/cloud/crypto.hpp"
#include "sdb/cloud/templates.hpp"
#include "sdb/sim/scenario.hpp"
#include "temp_dir.hpp"
#include "test_support.hpp"

using namespace sdb;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;
    std::vector<std::string> problems;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (problems.size() < 8) problems.push_back(what);
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scenario_path(const std::string& name) { return fs::path(SDB_SCENARIO_DIR) / (name + ".json"); }

const sim::UserSpec* user_of(const sim::ScenarioSpec& spec, const std::string& client) {
    for (const auto& c : spec.clients) {
        if (c.name != client || c.creds.logins.empty()) continue;
        for (const auto& u : spec.users)
            if (u.username == c.creds.logins.back().username) return &u;
    }
    return nullptr;
}

const sim::OsSpec* os_named(const sim::ScenarioSpec& spec, const std::string& name) {
    for (const auto& o : spec.oses)
        if (o.name == name) return &o;
    return nullptr;
}

/// filename -> digest of the bytes the harness generates for that OS.
std::map<std::string, std::string> expected_digests(const sim::OsSpec& os) {
    std::map<std::string, std::string> out;
    for (const auto& f : os.files)
        out[f.filename] = cloud::sha256_hex(sim::synthetic_artifact(os.name + "/" + f.filename, f.size));
    return out;
}

std::vector<cloud::AuthLogEntry> all_log_entries(const cloud::ControlPlane& cp) {
    std::vector<cloud::AuthLogEntry> out;
    cloud::LogFilter f;
    f.page_size = 500;
    for (std::size_t page = 1;; ++page) {
        f.page = page;
        auto lp = cp.list_auth_log(f);
        out.insert(out.end(), lp.entries.begin(), lp.entries.end());
        if (page * lp.page_size >= lp.total) break;
    }
    std::reverse(out.begin(), out.end());  // oldest first
    return out;
}

std::unique_ptr<cloud::ControlPlane> open_store(const fs::path& dir) {
    cloud::ControlPlaneConfig cc;
    cc.store_dir = dir;
    cc.password_cost = cloud::PasswordCost::minimal();
    return std::make_unique<cloud::ControlPlane>(cc);
}

std::string artifact_key(const std::string& url) {
    auto pos = url.find("/files/");
    return pos == std::string::npos ? url : url.substr(pos + 7);
}

// ---------------------------------------------------------------- three-PC lab

json lab_report;  // seed 1, reused by the latency check

Verdict three_pc_lab() {
    Verdict v;
    auto spec = sim::ScenarioSpec::load(scenario_path("three-pc-lab"));
    v.require(spec.clients.size() == 3 && spec.users.size() == 3 && spec.oses.size() == 3,
              "scenario must have 3 clients, 3 users and 3 OSes");
    std::set<std::string> names;
    for (const auto& o : spec.oses) names.insert(o.name);
    v.require(names == std::set<std::string>{"Kolibri OS", "Tiny Core Linux", "Alpine Linux"}, "OS names");
    for (const auto& o : spec.oses)
        for (const auto& f : o.files) v.require(f.size >= (1u << 20), o.name + "/" + f.filename + " under 1 MiB");

    double slowest = 0;
    json outcome_of_first;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        sim::RunOptions opts;
        opts.seed_override = seed;
        test::TempDir cap;
        opts.capture_path = cap.path() / "capture.jsonl";
        auto t0 = Clock::now();
        auto a = sim::run_scenario(spec, opts);
        slowest = std::max(slowest, seconds_since(t0));
        opts.capture_path.reset();
        auto b = sim::run_scenario(spec, opts);
        std::string tag = "seed " + std::to_string(seed) + ": ";
        v.require(a.report == b.report, tag + "two runs produced different reports");
        for (std::size_t i = 0; i < a.sessions.size() && i < b.sessions.size(); ++i) {
            const auto& ta = a.sessions[i].trace;
            const auto& tb = b.sessions[i].trace;
            bool same = ta.size() == tb.size();
            for (std::size_t k = 0; same && k < ta.size(); ++k)
                same = ta[k].time == tb[k].time && ta[k].summary == tb[k].summary;
            v.require(same, tag + a.sessions[i].client + " traces differ between runs");
        }
        if (seed == 1) lab_report = a.report;

        json outcome = json::array();
        for (const auto& s : a.report.at("sessions")) {
            std::string client = s.at("client");
            const auto* user = user_of(spec, client);
            v.require(user != nullptr, tag + client + " has no user");
            if (!user) continue;
            const auto* os = os_named(spec, user->os);
            v.require(s.at("state") == "Booted", tag + client + " ended " + s.at("state").get<std::string>());
            v.require(s.at("os") == user->os, tag + client + " booted the wrong OS");
            auto want = expected_digests(*os);
            std::set<std::string> fetched;
            std::string os_id = s.at("os_id").is_string() ? s.at("os_id").get<std::string>() : "";
            for (const auto& art : s.at("artifacts")) {
                auto key = artifact_key(art.at("url"));
                auto slash = key.find('/');
                std::string id = key.substr(0, slash), file = key.substr(slash + 1);
                v.require(id == os_id, tag + client + " fetched " + key + " outside its OS");
                v.require(want.count(file) && want[file] == art.at("sha256"), tag + client + " digest mismatch on " + key);
                fetched.insert(file);
            }
            std::set<std::string> referenced{os->kernel};
            referenced.insert(os->initrds.begin(), os->initrds.end());
            v.require(fetched == referenced, tag + client + " did not fetch exactly the OS artifacts");
            outcome.push_back({client, s.at("state"), s.at("os"), s.at("artifacts")});
        }
        if (seed == 1) outcome_of_first = outcome;
        v.require(outcome == outcome_of_first, tag + "outcome differs from seed 1");

        // The cloud only ever sees the router's public address.
        std::ifstream capture(cap.path() / "capture.jsonl");
        std::size_t cloud_packets = 0;
        for (std::string line; std::getline(capture, line);) {
            auto rec = json::parse(line);
            if (rec.at("to") != "cloud.eth0") continue;
            ++cloud_packets;
            v.require(rec.at("summary").get<std::string>().rfind("198.51.100.1:", 0) == 0,
                      tag + "cloud saw a non-NAT source: " + rec.at("summary").get<std::string>());
        }
        v.require(cloud_packets > 0, tag + "no traffic reached the cloud");
    }
    v.require(slowest < 60.0, "a run took " + std::to_string(slowest) + " s");
    std::ostringstream d;
    d << "5 seeds x 2 runs, 3/3 Booted with verified digests, slowest run " << std::fixed;
    d.precision(2);
    d << slowest << " s";
    v.detail = d.str();
    return v;
}

// ---------------------------------------------------------------- authorization soundness

Verdict authorization_soundness() {
    Verdict v;
    test::TempDir dir;
    auto cp = open_store(dir.path() / "store");
    std::mt19937_64 rng(0xA17);
    auto pick = [&](std::size_t n) { return std::size_t(rng() % n); };

    struct Os {
        std::string id;
        std::set<std::string> files;
    };
    std::vector<Os> oses;
    for (int i = 0; i < 6; ++i) {
        std::string kernel = "kernel-" + std::to_string(i);
        std::vector<std::string> initrds;
        for (std::size_t k = 0, n = pick(3); k < n; ++k)
            initrds.push_back("initrd-" + std::to_string(i) + "-" + std::to_string(k));
        Os os;
        os.id = cp->create_os("os " + std::to_string(i), cloud::default_template(kernel, initrds), "p=" + std::to_string(i));
        cp->upload_file(os.id, kernel, Bytes(64 + pick(64), std::uint8_t(i)));
        os.files.insert(kernel);
        for (const auto& f : initrds) {
            cp->upload_file(os.id, f, Bytes(32, std::uint8_t(i + 100)));
            os.files.insert(f);
        }
        oses.push_back(os);
    }

    struct Model {
        std::string password;
        std::size_t os = 0;
        bool active = true;
    };
    std::map<std::string, Model> users;
    for (int i = 0; i < 15; ++i) {
        std::string name = "user" + std::to_string(i);
        Model m{"pw-" + std::to_string(rng()), pick(oses.size()), true};
        cp->create_user(name, m.password, oses[m.os].id);
        users[name] = m;
    }
    std::vector<std::string> names;
    for (const auto& [n, m] : users) names.push_back(n);

    std::size_t attempts = 0, successes = 0, assignments = 0;
    while (attempts < 1500 || assignments < 1000) {
        auto roll = pick(100);
        auto& name = names[pick(names.size())];
        auto& m = users[name];
        if (roll < 40) {
            m.os = pick(oses.size());
            cp->assign_os(name, oses[m.os].id);
            ++assignments;
            continue;
        }
        if (roll < 45) {
            m.active = !m.active;
            m.active ? cp->activate_user(name) : cp->deactivate_user(name);
            continue;
        }
        bool unknown = pick(10) == 0;
        std::string who = unknown ? "ghost" + std::to_string(pick(5)) : name;
        bool right = pick(10) < 7;
        std::string password = right ? m.password : (pick(2) ? "wrong" : names[pick(names.size())]);
        auto out = cp->authenticate_and_issue(who, password, "52:54:00:00:00:01", "10.0.0.2");
        ++attempts;
        bool expect = !unknown && m.active && password == m.password;
        v.require(out.success == expect, "attempt " + std::to_string(attempts) + ": success " +
                                             std::to_string(out.success) + ", model says " + std::to_string(expect));
        auto urls = ipxe::referenced_urls(out.script);
        if (!out.success) {
            for (const auto& u : urls) v.require(u.find("/files/") == std::string::npos, "failure script names " + u);
            continue;
        }
        ++successes;
        const auto& os = oses[m.os];
        v.require(out.os_id == os.id, "issued " + out.os_id + " for a user assigned " + os.id);
        std::size_t artifacts = 0;
        for (const auto& u : urls) {
            if (u.find("/files/") == std::string::npos) continue;
            ++artifacts;
            auto key = artifact_key(u);
            auto slash = key.find('/');
            v.require(key.substr(0, slash) == os.id && os.files.count(key.substr(slash + 1)),
                      "success script for " + os.id + " references " + u);
        }
        v.require(artifacts == os.files.size(), "success script does not reference every artifact of " + os.id);
    }
    v.detail = std::to_string(attempts) + " attempts (" + std::to_string(successes) + " successful), " +
               std::to_string(assignments) + " reassignments, 0 tolerance";
    return v;
}

// ---------------------------------------------------------------- offboarding

Verdict offboarding() {
    Verdict v;
    auto spec = sim::ScenarioSpec::load(scenario_path("offboarding"));
    test::TempDir dir;
    sim::RunOptions opts;
    opts.store_dir = dir.path() / "store";
    opts.keep_store = true;
    auto r = sim::run_scenario(spec, opts);

    std::size_t deactivate_step = 0;
    std::string user;
    for (std::size_t i = 0; i < spec.steps.size(); ++i)
        if (spec.steps[i].action == "deactivate") deactivate_step = i, user = spec.steps[i].user;
    v.require(!user.empty(), "scenario deactivates nobody");

    const sim::SessionRecord* before = nullptr;
    const sim::SessionRecord* after = nullptr;
    for (const auto& s : r.sessions) {
        const auto* u = user_of(spec, s.client);
        if (!u || u->username != user) continue;
        (s.step < deactivate_step ? before : after) = &s;
    }
    v.require(before && before->outcome.state == sim::BootState::Booted, "user did not boot before deactivation");
    v.require(after != nullptr, "no boot attempt after deactivation");
    if (!after) return v;
    v.require(after->outcome.state == sim::BootState::Failed && after->outcome.failure == sim::BootFailure::AuthRejected,
              "post-deactivation boot did not end Failed{AuthRejected}");

    auto cp = open_store(opts.store_dir);
    cloud::LogFilter f;
    f.mac = after->mac.to_string();
    f.success = false;
    auto rows = cp->list_auth_log(f);
    bool found = false;
    for (const auto& e : rows.entries)
        if (e.username == user && e.failure_reason == cloud::FailureReason::Deactivated &&
            e.mac == after->mac.to_string())
            found = true;
    v.require(found, "no Deactivated log row carrying " + after->mac.to_string());
    v.require(rows.total == std::size_t(after->outcome.auth_attempts),
              "failed rows for the MAC do not match the rejected attempts");
    v.detail = user + " on " + after->client + ": Failed{AuthRejected}, " + std::to_string(rows.total) +
               " Deactivated row(s) for " + after->mac.to_string();
    return v;
}

// ---------------------------------------------------------------- audit completeness

std::vector<sim::ScenarioSpec> audit_corpus() {
    std::vector<sim::ScenarioSpec> out;
    for (const auto& entry : fs::directory_iterator(SDB_SCENARIO_DIR))
        if (entry.path().extension() == ".json") out.push_back(sim::ScenarioSpec::load(entry.path()));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });

    // Randomized login sequences on top of the wrong-password topology.
    auto base = sim::ScenarioSpec::load(scenario_path("wrong-password"));
    std::mt19937_64 rng(0xA0D17);
    for (int i = 0; i < 20; ++i) {
        auto s = base;
        s.name = "random-logins-" + std::to_string(i);
        s.seed = rng();
        s.expectations.clear();
        for (auto& c : s.clients) {
            c.creds.logins.clear();
            for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) {
                const auto& u = s.users[rng() % s.users.size()];
                switch (rng() % 3) {
                    case 0: c.creds.logins.push_back({u.username, u.password}); break;
                    case 1: c.creds.logins.push_back({u.username, "nope"}); break;
                    default: c.creds.logins.push_back({"nobody", "x"}); break;
                }
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

Verdict audit_completeness() {
    Verdict v;
    std::size_t scenarios = 0, total_attempts = 0;
    for (const auto& spec : audit_corpus()) {
        test::TempDir dir;
        sim::RunOptions opts;
        opts.store_dir = dir.path() / "store";
        opts.keep_store = true;
        auto r = sim::run_scenario(spec, opts);
        ++scenarios;

        // Per MAC, the usernames submitted in order.
        std::map<std::string, std::vector<std::string>> submitted;
        std::size_t attempts = 0;
        for (const auto& s : r.sessions) {
            const sim::ClientSpec* cs = nullptr;
            for (const auto& c : spec.clients)
                if (c.name == s.client) cs = &c;
            auto n = std::size_t(s.outcome.auth_attempts);
            attempts += n;
            for (std::size_t k = 0; k < n && k < cs->creds.logins.size(); ++k)
                submitted[s.mac.to_string()].push_back(cs->creds.logins[k].username);
        }
        total_attempts += attempts;

        auto cp = open_store(opts.store_dir);
        auto rows = all_log_entries(*cp);
        std::map<std::string, std::vector<std::string>> logged;
        for (const auto& e : rows) logged[e.mac].push_back(e.username);
        v.require(rows.size() == attempts, spec.name + ": " + std::to_string(rows.size()) + " log rows for " +
                                               std::to_string(attempts) + " attempts");
        v.require(logged == submitted, spec.name + ": log rows do not match the submitting MACs");
        v.require(cp->auth_log_count() == rows.size(), spec.name + ": auth_log_count disagrees with the listing");
    }
    v.detail = std::to_string(scenarios) + " scenarios, " + std::to_string(total_attempts) +
               " attempts, rows and MACs equal";
    return v;
}

// ---------------------------------------------------------------- mode switching

Verdict mode_switching() {
    Verdict v;
    auto spec = sim::ScenarioSpec::load(scenario_path("mode-switching"));
    v.require(!spec.gateway_connect && spec.upstream, "scenario must start with an unconnected gateway");
    auto r = sim::run_scenario(spec);
    v.require(r.sessions.size() == 1, "expected one session");
    if (r.sessions.empty()) return v;
    const auto& s = r.sessions.front();
    std::string gw_ip = spec.gateway.static_ip.to_string();
    std::string cloud_ip = spec.cloud_ip.to_string();
    std::string gw_src = gw_ip + ":67 > ";

    auto find = [&](std::size_t from, const std::function<bool(const sim::TraceEvent&)>& pred) {
        for (std::size_t i = from; i < s.trace.size(); ++i)
            if (pred(s.trace[i])) return i;
        return s.trace.size();
    };
    auto has = [](const sim::TraceEvent& e, std::string_view text) { return e.summary.find(text) != std::string::npos; };

    auto captive = find(0, [&](const auto& e) {
        return e.direction == "rx" && e.protocol == "dns" && has(e, "answer " + spec.gateway.cloud_domain + " " + gw_ip);
    });
    v.require(captive < s.trace.size(), "no captive DNS answer pointing at the gateway");
    auto portal = find(captive, [&](const auto& e) { return e.direction == "note" && has(e, "prompt ssid"); });
    v.require(portal < s.trace.size(), "captive portal never prompted for Wi-Fi credentials");

    std::size_t proxy_offers = 0;
    for (std::size_t i = portal; i < s.trace.size(); ++i) {
        const auto& e = s.trace[i];
        if (e.direction != "rx" || e.protocol != "dhcp" || !has(e, gw_src) || !has(e, " OFFER ")) continue;
        ++proxy_offers;
        v.require(has(e, "yiaddr=0.0.0.0"), "proxy OFFER carries an address: " + e.summary);
        auto opts = e.summary.substr(e.summary.find("options=") + 8);
        std::set<std::string> codes;
        std::stringstream ss(opts);
        for (std::string c; std::getline(ss, c, ',');) codes.insert(c);
        v.require(!codes.count("6"), "proxy OFFER carries option 6: " + e.summary);
    }
    v.require(proxy_offers > 0, "no gateway OFFER after the portal");
    auto real_dns = find(portal, [&](const auto& e) {
        return e.direction == "rx" && e.protocol == "dns" && has(e, "answer " + spec.gateway.cloud_domain + " " + cloud_ip);
    });
    v.require(real_dns < s.trace.size(), "cloud domain never resolved to the real cloud after the switch");
    v.require(s.outcome.state == sim::BootState::Booted, "client did not boot after the switch");

    auto gws = r.report.at("gateways");
    for (const auto& [name, g] : gws.items()) v.require(g.at("mode") == "Proxy", name + " ended in mode " + g.at("mode").get<std::string>());
    v.detail = "captive DNS -> " + gw_ip + ", " + std::to_string(proxy_offers) +
               " proxy OFFER(s) without address or option 6, mode Proxy, Booted";
    return v;
}

// ---------------------------------------------------------------- proxyDHCP poisoning

Verdict poisoning() {
    Verdict v;
    auto base = sim::ScenarioSpec::load(scenario_path("rogue-dhcp"));
    auto cfg = base.gateway;
    cfg.ensure_bootloader();
    auto blob_digest = cloud::sha256_hex(cfg.bootloader_blob);

    std::size_t sessions = 0;
    for (bool sanitize : {true, false}) {
        auto spec = base;
        spec.gateway_sanitize = sanitize;
        auto r = sim::run_scenario(spec);
        std::string tag = sanitize ? "sanitizing bridge: " : "selection policy alone: ";
        for (const auto& s : r.sessions) {
            ++sessions;
            bool rogue_seen = false, rogue_boot_file = false;
            for (const auto& e : s.trace) {
                if (e.direction != "rx" || e.protocol != "dhcp" || e.summary.rfind("10.0.0.66:67 >", 0) != 0) continue;
                rogue_seen = true;
                rogue_boot_file |= e.summary.find(" file=") != std::string::npos;
            }
            v.require(rogue_seen, tag + s.client + " never saw a rogue offer");
            if (!sanitize) v.require(rogue_boot_file, tag + s.client + " saw no rogue boot file");
            v.require(s.outcome.bootloader_sha256 == blob_digest, tag + s.client + " fetched bootloader " + s.outcome.bootloader_sha256);
            v.require(s.outcome.state == sim::BootState::Booted, tag + s.client + " did not boot");
        }
    }
    v.detail = std::to_string(sessions) + " sessions with rogue offers present, bootloader sha256 " +
               blob_digest.substr(0, 16) + "... in every case";
    return v;
}

// ---------------------------------------------------------------- codecs

Verdict codec_conformance() {
    Verdict v;
    constexpr int round_trips = 10000;
    constexpr std::size_t fuzz_inputs = 1000000;
    test::Gen gen(0xC0DEC);
    int ok_dhcp = 0, ok_tftp = 0, ok_query = 0, ok_answer = 0;
    for (int i = 0; i < round_trips; ++i) {
        auto m = gen.dhcp_message();
        ok_dhcp += dhcp::decode(dhcp::encode(m)) == m;
        auto p = gen.tftp_packet();
        ok_tftp += tftp::decode(tftp::encode(p)) == p;
        auto q = gen.dns_query();
        ok_query += dns::decode_query(dns::encode_query(q)) == q;
        auto a = gen.dns_answer();
        ok_answer += dns::decode_answer(dns::encode_answer(a)) == a;
    }
    v.require(ok_dhcp == round_trips, "DHCP round trips " + std::to_string(ok_dhcp));
    v.require(ok_tftp == round_trips, "TFTP round trips " + std::to_string(ok_tftp));
    v.require(ok_query == round_trips, "DNS query round trips " + std::to_string(ok_query));
    v.require(ok_answer == round_trips, "DNS answer round trips " + std::to_string(ok_answer));

    struct Target {
        const char* name;
        std::vector<Bytes> seeds;
        std::function<void(const Bytes&)> decode;
    };
    std::vector<Target> targets = {
        {"dhcp", {test::load_fixture("dhcp_discover_pxe.hex"), test::load_fixture("dhcp_offer_minimal.hex")},
         [](const Bytes& b) { dhcp::decode(b); }},
        {"tftp", {test::load_fixture("tftp_rrq_boot_ipxe.hex"), tftp::encode(tftp::Data{3, Bytes(100, 1)})},
         [](const Bytes& b) { tftp::decode(b); }},
        {"dns-query", {test::load_fixture("dns_query_a.hex")}, [](const Bytes& b) { dns::decode_query(b); }},
        {"dns-answer", {test::load_fixture("dns_answer_captive.hex")}, [](const Bytes& b) { dns::decode_answer(b); }},
    };
    double slowest_input = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        auto& tg = targets[t];
        auto timed = [&](const Bytes& b) {
            auto t0 = Clock::now();
            try {
                tg.decode(b);
            } catch (...) {
                slowest_input = std::max(slowest_input, seconds_since(t0));
                throw;
            }
            slowest_input = std::max(slowest_input, seconds_since(t0));
        };
        auto stats = test::fuzz_decoder(100 + t, fuzz_inputs, tg.seeds, timed);
        v.require(stats.inputs == fuzz_inputs, std::string(tg.name) + " fuzz count");
        v.require(stats.other_exceptions == 0,
                  std::string(tg.name) + ": " + std::to_string(stats.other_exceptions) + " untyped failures");
    }
    v.require(slowest_input < 1.0, "a single decode took " + std::to_string(slowest_input) + " s");
    v.detail = std::to_string(round_trips) + " round trips x 4 codecs, " + std::to_string(fuzz_inputs) +
               " fuzz inputs x 4 decoders, 0 crashes or untyped errors";
    return v;
}

// ---------------------------------------------------------------- boot latency

Verdict boot_latency() {
    Verdict v;
    auto spec = sim::ScenarioSpec::load(scenario_path("three-pc-lab"));
    v.require(spec.link.latency == sim::ms(1) && spec.link.loss == 0.0 && spec.link.jitter == 0,
              "scenario is not at 1 ms hop latency with zero loss");
    if (lab_report.is_null()) lab_report = sim::run_scenario(spec).report;
    double worst = 0;
    for (const auto& s : lab_report.at("sessions")) {
        v.require(s.contains("boot_time_ms") && s.at("boot_time_ms").is_number(), "boot_time_ms missing from report");
        double t = s.at("boot_time_ms");
        worst = std::max(worst, t);
        v.require(t <= 3000.0, s.at("client").get<std::string>() + " took " + std::to_string(t) + " ms");
    }
    std::ostringstream d;
    d << "worst simulated boot " << worst << " ms (limit 3000 ms)";
    v.detail = d.str();
    return v;
}

// ---------------------------------------------------------------- durability

Verdict durability() {
    Verdict v;
    auto spec = sim::ScenarioSpec::load(scenario_path("three-pc-lab"));
    spec.password_cost = "minimal";
    test::TempDir dir;
    auto store = dir.path() / "store";
    std::vector<std::string> clients;
    for (const auto& c : spec.clients) clients.push_back(c.name);

    int ready[2];
    if (pipe(ready) != 0) throw std::runtime_error("pipe failed");
    std::fflush(stdout);
    pid_t child = fork();
    if (child == 0) {
        close(ready[0]);
        int status = 1;
        try {
            sim::Harness h(spec, store, 1);
            h.seed_cloud();
            h.boot(clients);
            status = 0;
        } catch (...) {
        }
        char c = status == 0 ? 'y' : 'n';
        if (write(ready[1], &c, 1) != 1) _exit(2);
        for (;;) pause();  // killed by the parent mid-life, never shut down cleanly
    }
    close(ready[1]);
    char c = 0;
    bool phase1 = read(ready[0], &c, 1) == 1 && c == 'y';
    close(ready[0]);
    kill(child, SIGKILL);
    int wstatus = 0;
    waitpid(child, &wstatus, 0);
    v.require(phase1, "phase 1 failed in the child");
    v.require(WIFSIGNALED(wstatus) && WTERMSIG(wstatus) == SIGKILL, "child was not killed by SIGKILL");

    std::size_t logs_before = 0;
    {
        auto cp = open_store(store);
        auto users = cp->list_users();
        v.require(users.size() == spec.users.size(), "user count after restart");
        std::map<std::string, std::string> os_id_by_name;
        for (const auto& os : cp->list_os()) os_id_by_name[os.name] = os.os_id;
        for (const auto& u : spec.users) {
            auto rec = cp->get_user(u.username);
            v.require(rec.active && rec.assigned_os == os_id_by_name[u.os], u.username + " lost its assignment");
        }
        for (const auto& os : spec.oses) {
            auto want = expected_digests(os);
            auto def = cp->get_os(os_id_by_name[os.name]);
            v.require(def.files.size() == want.size(), os.name + " lost files");
            for (const auto& f : def.files) {
                auto body = cp->serve_file(def.os_id, f.filename);
                v.require(cloud::sha256_hex(body.data) == want[f.filename], os.name + "/" + f.filename + " changed on disk");
            }
        }
        v.require(cp->verify_files().empty(), "verify_files reports damage");
        auto rows = all_log_entries(*cp);
        logs_before = rows.size();
        std::set<std::string> macs;
        for (const auto& e : rows) macs.insert(e.mac);
        std::set<std::string> want_macs;
        for (const auto& cs : spec.clients) want_macs.insert(cs.mac.to_string());
        v.require(rows.size() == spec.clients.size() && macs == want_macs, "phase 1 log rows missing after kill");
    }

    // Phase 2 boots against the recovered store without reseeding.
    {
        sim::Harness h(spec, store, 2);
        h.boot(clients);
        auto* cp = h.cloud().control_plane();
        std::map<std::string, std::string> os_id_by_name;
        for (const auto& os : cp->list_os()) os_id_by_name[os.name] = os.os_id;
        for (const auto& name : clients) {
            const auto& o = h.client(name).outcome();
            const auto* u = user_of(spec, name);
            v.require(o.state == sim::BootState::Booted && o.os_id == os_id_by_name[u->os],
                      name + " did not boot its OS after restart");
        }
        v.require(cp->auth_log_count() == logs_before + clients.size(), "phase 2 log rows");
    }
    v.detail = "SIGKILL after phase 1; " + std::to_string(spec.users.size()) + " users, all artifacts digest-verified, " +
               std::to_string(logs_before) + " log rows survived; phase 2 booted 3/3";
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Verdict (*run)();
    };
    // Durability forks, so it runs before anything could have started a thread.
    const Criterion criteria[] = {
        {"durability", durability},
        {"three-pc-lab", three_pc_lab},
        {"authorization-soundness", authorization_soundness},
        {"offboarding", offboarding},
        {"audit-completeness", audit_completeness},
        {"mode-switching", mode_switching},
        {"proxydhcp-poisoning", poisoning},
        {"codec-conformance", codec_conformance},
        {"boot-latency", boot_latency},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        auto t0 = Clock::now();
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.ok = false;
            v.problems.push_back(std::string("exception: ") + e.what());
        }
        std::printf("%s %-24s %s (%.1f s)\n", v.ok ? "PASS" : "FAIL", c.name, v.detail.c_str(), seconds_since(t0));
        for (const auto& p : v.problems) std::printf("     - %s\n", p.c_str());
        std::fflush(stdout);
        failed += !v.ok;
    }
    std::printf("%d/%zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
