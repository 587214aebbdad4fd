#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdb::ipxe {

inline constexpr std::string_view shebang = "#!ipxe";
inline constexpr std::string_view media_type = "text/plain";

struct Echo {
    std::string text;
    bool operator==(const Echo&) const = default;
};
struct Set {
    std::string var;
    std::string value;
    bool operator==(const Set&) const = default;
};
/// Collects `username` and `password` in one step.
struct Login {
    bool operator==(const Login&) const = default;
};
struct Prompt {
    std::string var;
    std::string message;
    bool masked = false;
    bool operator==(const Prompt&) const = default;
};
struct Chain {
    std::string url;
    bool operator==(const Chain&) const = default;
};
struct Kernel {
    std::string url;
    std::string params;
    bool operator==(const Kernel&) const = default;
};
struct Initrd {
    std::string url;
    bool operator==(const Initrd&) const = default;
};
struct Boot {
    bool operator==(const Boot&) const = default;
};
struct MenuStart {
    std::string title;
    bool operator==(const MenuStart&) const = default;
};
struct MenuItem {
    std::string key;
    std::string label;
    bool operator==(const MenuItem&) const = default;
};
struct Choose {
    std::string var;
    bool operator==(const Choose&) const = default;
};

using Statement =
    std::variant<Echo, Set, Login, Prompt, Chain, Kernel, Initrd, Boot, MenuStart, MenuItem, Choose>;

struct Script {
    std::vector<Statement> statements;
    bool operator==(const Script&) const = default;
};

using VarEnv = std::map<std::string, std::string>;

namespace var {
inline constexpr std::string_view mac = "net0/mac";
inline constexpr std::string_view username = "username";
inline constexpr std::string_view password = "password";
}  // namespace var

enum class ScriptErrorKind {
    NoShebang,
    UnknownCommand,
    MalformedArgs,
    /// Boot without an earlier kernel, a second boot, or anything after boot.
    BadOrder,
    UndefinedVariable,
};

const char* to_string(ScriptErrorKind kind);

class ScriptError : public std::runtime_error {
public:
    ScriptError(ScriptErrorKind kind, int line, const std::string& detail);
    ScriptErrorKind kind() const { return kind_; }
    /// 1-based source line, 0 when not tied to a line.
    int line() const { return line_; }
    /// Variable name for UndefinedVariable, otherwise the detail text.
    const std::string& detail() const { return detail_; }

private:
    ScriptErrorKind kind_;
    int line_;
    std::string detail_;
};

/// Blank lines and '#' comments after the shebang are skipped. Throws ScriptError.
Script parse_script(std::string_view text);

/// Canonical text: shebang, one statement per line, LF endings, trailing newline.
std::string render_script(const Script& script);

/// Throws ScriptError when a statement cannot be rendered faithfully or when the ordering
/// rules around `boot` are broken.
void validate(const Script& script);

std::string render_statement(const Statement& st);
std::string_view command_name(const Statement& st);

/// Replaces every ${name} placeholder. Values placed into URL fields (chain, kernel, initrd)
/// are percent-encoded. Throws ScriptError(UndefinedVariable).
Script substitute(const Script& script, const VarEnv& env);
Statement substitute(const Statement& st, const VarEnv& env);

/// Raw ${name} expansion on one string.
std::string expand(std::string_view text, const VarEnv& env, bool url_encode);

/// True when any ${...} placeholder remains in the script.
bool has_placeholders(const Script& script);

/// URLs referenced by chain, kernel and initrd statements, in order.
std::vector<std::string> referenced_urls(const Script& script);

}  // namespace sdb::ipxe
