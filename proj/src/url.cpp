#include "sdb/url.hpp"

#include <charconv>

namespace sdb::url {

namespace {

bool unreserved(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '.' || c == '_' || c == '~';
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::uint16_t default_port(std::string_view scheme) {
    if (scheme == "http") return 80;
    if (scheme == "tftp") return 69;
    if (scheme == "https") return 443;
    return 0;
}

}  // namespace

std::string percent_encode(std::string_view in) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(in.size());
    for (unsigned char c : in) {
        if (unreserved(c)) {
            out.push_back(char(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xF]);
        }
    }
    return out;
}

std::string percent_decode(std::string_view in, bool plus_as_space) {
    std::string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        char c = in[i];
        if (c == '%' && i + 2 < in.size()) {
            int hi = hex_value(in[i + 1]);
            int lo = hex_value(in[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(char(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(plus_as_space && c == '+' ? ' ' : c);
    }
    return out;
}

std::map<std::string, std::string> parse_query(std::string_view query) {
    std::map<std::string, std::string> fields;
    while (!query.empty()) {
        auto amp = query.find('&');
        auto pair = query.substr(0, amp);
        if (!pair.empty()) {
            auto eq = pair.find('=');
            std::string key = percent_decode(pair.substr(0, eq), true);
            std::string value =
                eq == std::string_view::npos ? std::string{} : percent_decode(pair.substr(eq + 1), true);
            fields.emplace(std::move(key), std::move(value));
        }
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    }
    return fields;
}

std::string build_query(const std::map<std::string, std::string>& fields) {
    std::string out;
    for (const auto& [k, v] : fields) {
        if (!out.empty()) out.push_back('&');
        out += percent_encode(k) + "=" + percent_encode(v);
    }
    return out;
}

std::string Url::target() const { return query.empty() ? path : path + "?" + query; }

std::string Url::to_string() const {
    std::string s = scheme + "://" + host;
    if (port != default_port(scheme)) s += ":" + std::to_string(port);
    return s + target();
}

std::optional<Url> parse(std::string_view text) {
    auto sep = text.find("://");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    Url u;
    u.scheme = std::string(text.substr(0, sep));
    text.remove_prefix(sep + 3);
    auto path_start = text.find_first_of("/?");
    auto authority = text.substr(0, path_start);
    text = path_start == std::string_view::npos ? std::string_view{} : text.substr(path_start);
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        unsigned port = 0;
        auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || p != port_text.data() + port_text.size() || port == 0 || port > 65535)
            return std::nullopt;
        u.port = std::uint16_t(port);
        authority = authority.substr(0, colon);
    } else {
        u.port = default_port(u.scheme);
        if (u.port == 0) return std::nullopt;
    }
    if (authority.empty()) return std::nullopt;
    u.host = std::string(authority);
    auto q = text.find('?');
    u.path = std::string(text.substr(0, q));
    if (u.path.empty()) u.path = "/";
    if (q != std::string_view::npos) u.query = std::string(text.substr(q + 1));
    return u;
}

}  // namespace sdb::url
