#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sdb::http {

struct CaseInsensitiveLess {
    bool operator()(std::string_view a, std::string_view b) const;
    using is_transparent = void;
};

using Headers = std::map<std::string, std::string, CaseInsensitiveLess>;

struct Request {
    std::string method = "GET";
    std::string target = "/";  // path plus optional "?query"
    Headers headers;
    std::string body;

    std::string path() const;
    std::string query() const;
    /// Query fields merged with an application/x-www-form-urlencoded body; body wins.
    std::map<std::string, std::string> fields() const;
    std::optional<std::string> header(std::string_view name) const;
};

struct Response {
    int status = 200;
    Headers headers;
    std::string body;

    static Response text(int status, std::string body, std::string content_type = "text/plain; charset=utf-8");
    static Response json(int status, std::string body);
    std::optional<std::string> header(std::string_view name) const;
};

const char* reason_phrase(int status);

/// HTTP/1.1 framing with Content-Length, used on the simulated byte stream.
std::string serialize(const Request& req);
std::string serialize(const Response& resp);
std::optional<Request> parse_request(std::string_view raw);
std::optional<Response> parse_response(std::string_view raw);

/// Parses "bytes=a-b" / "bytes=a-" against a body of `size` bytes. Returns nullopt when the
/// header is not a single satisfiable range.
struct ByteRange {
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive
};
std::optional<ByteRange> parse_range(std::string_view header, std::size_t size);

}  // namespace sdb::http
