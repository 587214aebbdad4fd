#include "sdb/ipxe/script.hpp"

#include <algorithm>

#include "sdb/url.hpp"

namespace sdb::ipxe {

namespace {

constexpr std::string_view whitespace = " \t";

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(whitespace);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(whitespace);
    return s.substr(b, e - b + 1);
}

/// Splits off the first whitespace-delimited token.
std::pair<std::string_view, std::string_view> split_token(std::string_view s) {
    s = trim(s);
    auto sp = s.find_first_of(whitespace);
    if (sp == std::string_view::npos) return {s, {}};
    return {s.substr(0, sp), trim(s.substr(sp))};
}

bool is_token(std::string_view s) {
    return !s.empty() && s.find_first_of(" \t\r\n") == std::string_view::npos;
}

bool is_var_name(std::string_view s) {
    return !s.empty() && s.front() != '-' && std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '/' || c == '-' || c == '.';
    });
}

/// Free text fields survive a render/parse round trip only if they carry no line breaks
/// and no surrounding whitespace.
bool is_text(std::string_view s) {
    return s.find_first_of("\r\n") == std::string_view::npos && trim(s).size() == s.size();
}

[[noreturn]] void malformed(int line, const std::string& what) {
    throw ScriptError(ScriptErrorKind::MalformedArgs, line, what);
}

Statement parse_statement(std::string_view line_text, int line) {
    auto [cmd, rest] = split_token(line_text);
    if (cmd == "echo") return Echo{std::string(rest)};
    if (cmd == "set") {
        auto [v, value] = split_token(rest);
        if (!is_var_name(v)) malformed(line, "set needs a variable name");
        return Set{std::string(v), std::string(value)};
    }
    if (cmd == "login") {
        if (!rest.empty()) malformed(line, "login takes no arguments");
        return Login{};
    }
    if (cmd == "prompt") {
        bool masked = false;
        auto [first, after] = split_token(rest);
        if (first == "--masked") {
            masked = true;
            std::tie(first, after) = split_token(after);
        }
        if (!is_var_name(first)) malformed(line, "prompt needs a variable name");
        return Prompt{std::string(first), std::string(after), masked};
    }
    if (cmd == "chain") {
        auto [u, extra] = split_token(rest);
        if (u.empty() || !extra.empty()) malformed(line, "chain takes exactly one URL");
        return Chain{std::string(u)};
    }
    if (cmd == "kernel") {
        auto [u, params] = split_token(rest);
        if (u.empty()) malformed(line, "kernel needs a URL");
        return Kernel{std::string(u), std::string(params)};
    }
    if (cmd == "initrd") {
        auto [u, extra] = split_token(rest);
        if (u.empty() || !extra.empty()) malformed(line, "initrd takes exactly one URL");
        return Initrd{std::string(u)};
    }
    if (cmd == "boot") {
        if (!rest.empty()) malformed(line, "boot takes no arguments");
        return Boot{};
    }
    if (cmd == "menu") return MenuStart{std::string(rest)};
    if (cmd == "item") {
        auto [key, label] = split_token(rest);
        if (!is_var_name(key)) malformed(line, "item needs a key");
        return MenuItem{std::string(key), std::string(label)};
    }
    if (cmd == "choose") {
        auto [v, extra] = split_token(rest);
        if (!is_var_name(v) || !extra.empty()) malformed(line, "choose takes one variable name");
        return Choose{std::string(v)};
    }
    throw ScriptError(ScriptErrorKind::UnknownCommand, line, std::string(cmd));
}

/// `lines[i]` is the source line of statements[i]; 0 when unknown.
void check_order(const Script& s, const std::vector<int>& lines) {
    bool kernel_seen = false;
    bool boot_seen = false;
    for (std::size_t i = 0; i < s.statements.size(); ++i) {
        int line = i < lines.size() ? lines[i] : 0;
        const auto& st = s.statements[i];
        if (boot_seen) throw ScriptError(ScriptErrorKind::BadOrder, line, "statement after boot");
        if (std::holds_alternative<Kernel>(st)) kernel_seen = true;
        if (std::holds_alternative<Boot>(st)) {
            if (!kernel_seen) throw ScriptError(ScriptErrorKind::BadOrder, line, "boot before kernel");
            boot_seen = true;
        }
    }
}

std::string join(std::string_view cmd, std::string_view rest) {
    std::string out(cmd);
    if (!rest.empty()) {
        out.push_back(' ');
        out.append(rest);
    }
    return out;
}

}  // namespace

const char* to_string(ScriptErrorKind kind) {
    switch (kind) {
        case ScriptErrorKind::NoShebang: return "NoShebang";
        case ScriptErrorKind::UnknownCommand: return "UnknownCommand";
        case ScriptErrorKind::MalformedArgs: return "MalformedArgs";
        case ScriptErrorKind::BadOrder: return "BadOrder";
        case ScriptErrorKind::UndefinedVariable: return "UndefinedVariable";
    }
    return "ScriptError";
}

ScriptError::ScriptError(ScriptErrorKind kind, int line, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) +
                         (line > 0 ? " at line " + std::to_string(line) : std::string{}) + ": " +
                         detail),
      kind_(kind),
      line_(line),
      detail_(detail) {}

Script parse_script(std::string_view text) {
    Script script;
    std::vector<int> lines;
    int line_no = 0;
    bool first = true;
    while (!text.empty() || first) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (first) {
            first = false;
            if (trim(line) != shebang) throw ScriptError(ScriptErrorKind::NoShebang, 1, "first line must be #!ipxe");
            continue;
        }
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        script.statements.push_back(parse_statement(t, line_no));
        lines.push_back(line_no);
    }
    check_order(script, lines);
    return script;
}

std::string_view command_name(const Statement& st) {
    static constexpr std::string_view names[] = {"echo",   "set",  "login", "prompt",
                                                  "chain",  "kernel", "initrd", "boot",
                                                  "menu",   "item", "choose"};
    return names[st.index()];
}

std::string render_statement(const Statement& st) {
    struct Visitor {
        std::string operator()(const Echo& s) const { return join("echo", s.text); }
        std::string operator()(const Set& s) const { return join("set " + s.var, s.value); }
        std::string operator()(const Login&) const { return "login"; }
        std::string operator()(const Prompt& s) const {
            return join(std::string("prompt ") + (s.masked ? "--masked " : "") + s.var, s.message);
        }
        std::string operator()(const Chain& s) const { return "chain " + s.url; }
        std::string operator()(const Kernel& s) const { return join("kernel " + s.url, s.params); }
        std::string operator()(const Initrd& s) const { return "initrd " + s.url; }
        std::string operator()(const Boot&) const { return "boot"; }
        std::string operator()(const MenuStart& s) const { return join("menu", s.title); }
        std::string operator()(const MenuItem& s) const { return join("item " + s.key, s.label); }
        std::string operator()(const Choose& s) const { return "choose " + s.var; }
    };
    return std::visit(Visitor{}, st);
}

void validate(const Script& script) {
    for (std::size_t i = 0; i < script.statements.size(); ++i) {
        int line = int(i) + 2;
        struct Check {
            int line;
            void require(bool ok, const char* what) const {
                if (!ok) malformed(line, what);
            }
            void operator()(const Echo& s) const { require(is_text(s.text), "echo text"); }
            void operator()(const Set& s) const {
                require(is_var_name(s.var) && is_text(s.value), "set var/value");
            }
            void operator()(const Login&) const {}
            void operator()(const Prompt& s) const {
                require(is_var_name(s.var) && is_text(s.message), "prompt var/message");
            }
            void operator()(const Chain& s) const { require(is_token(s.url), "chain url"); }
            void operator()(const Kernel& s) const {
                require(is_token(s.url) && is_text(s.params), "kernel url/params");
            }
            void operator()(const Initrd& s) const { require(is_token(s.url), "initrd url"); }
            void operator()(const Boot&) const {}
            void operator()(const MenuStart& s) const { require(is_text(s.title), "menu title"); }
            void operator()(const MenuItem& s) const {
                require(is_var_name(s.key) && is_text(s.label), "item key/label");
            }
            void operator()(const Choose& s) const { require(is_var_name(s.var), "choose var"); }
        };
        std::visit(Check{line}, script.statements[i]);
    }
    std::vector<int> lines(script.statements.size());
    for (std::size_t i = 0; i < lines.size(); ++i) lines[i] = int(i) + 2;
    check_order(script, lines);
}

std::string render_script(const Script& script) {
    std::string out(shebang);
    out.push_back('\n');
    for (const auto& st : script.statements) {
        out += render_statement(st);
        out.push_back('\n');
    }
    return out;
}

std::string expand(std::string_view text, const VarEnv& env, bool url_encode) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
            auto close = text.find('}', i + 2);
            if (close == std::string_view::npos)
                throw ScriptError(ScriptErrorKind::UndefinedVariable, 0,
                                  std::string(text.substr(i + 2)));
            std::string name(text.substr(i + 2, close - i - 2));
            auto it = env.find(name);
            if (it == env.end()) throw ScriptError(ScriptErrorKind::UndefinedVariable, 0, name);
            out += url_encode ? url::percent_encode(it->second) : it->second;
            i = close + 1;
        } else {
            out.push_back(text[i++]);
        }
    }
    return out;
}

Statement substitute(const Statement& st, const VarEnv& env) {
    struct Visitor {
        const VarEnv& env;
        std::string raw(const std::string& s) const { return expand(s, env, false); }
        std::string in_url(const std::string& s) const { return expand(s, env, true); }
        Statement operator()(const Echo& s) const { return Echo{raw(s.text)}; }
        Statement operator()(const Set& s) const { return Set{s.var, raw(s.value)}; }
        Statement operator()(const Login& s) const { return s; }
        Statement operator()(const Prompt& s) const { return Prompt{s.var, raw(s.message), s.masked}; }
        Statement operator()(const Chain& s) const { return Chain{in_url(s.url)}; }
        Statement operator()(const Kernel& s) const { return Kernel{in_url(s.url), raw(s.params)}; }
        Statement operator()(const Initrd& s) const { return Initrd{in_url(s.url)}; }
        Statement operator()(const Boot& s) const { return s; }
        Statement operator()(const MenuStart& s) const { return MenuStart{raw(s.title)}; }
        Statement operator()(const MenuItem& s) const { return MenuItem{s.key, raw(s.label)}; }
        Statement operator()(const Choose& s) const { return s; }
    };
    return std::visit(Visitor{env}, st);
}

Script substitute(const Script& script, const VarEnv& env) {
    Script out;
    out.statements.reserve(script.statements.size());
    for (const auto& st : script.statements) out.statements.push_back(substitute(st, env));
    return out;
}

bool has_placeholders(const Script& script) {
    for (const auto& st : script.statements)
        if (render_statement(st).find("${") != std::string::npos) return true;
    return false;
}

std::vector<std::string> referenced_urls(const Script& script) {
    std::vector<std::string> urls;
    for (const auto& st : script.statements) {
        if (auto* c = std::get_if<Chain>(&st)) urls.push_back(c->url);
        if (auto* k = std::get_if<Kernel>(&st)) urls.push_back(k->url);
        if (auto* i = std::get_if<Initrd>(&st)) urls.push_back(i->url);
    }
    return urls;
}

}  // namespace sdb::ipxe
