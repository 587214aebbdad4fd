#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sdb::url {

/// RFC 3986 percent-encoding: everything except ALPHA / DIGIT / "-" / "." / "_" / "~" becomes
/// %XX with upper-case hex.
std::string percent_encode(std::string_view in);

/// Decodes %XX sequences and, when `plus_as_space` is set, '+' as a space. Malformed escapes
/// are kept literally.
std::string percent_decode(std::string_view in, bool plus_as_space = false);

/// Parses "a=1&b=2" (application/x-www-form-urlencoded); later duplicates are ignored.
std::map<std::string, std::string> parse_query(std::string_view query);

std::string build_query(const std::map<std::string, std::string>& fields);

struct Url {
    std::string scheme;  // "http" or "tftp"
    std::string host;
    std::uint16_t port = 0;
    std::string path = "/";  // without the query
    std::string query;       // without '?'

    /// Path plus "?query" when a query is present.
    std::string target() const;
    std::string to_string() const;
};

/// Absolute URLs only ("scheme://host[:port]/path?query").
std::optional<Url> parse(std::string_view text);

}  // namespace sdb::url
