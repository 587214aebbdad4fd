#include "sdb/http/message.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "sdb/url.hpp"

namespace sdb::http {

bool CaseInsensitiveLess::operator()(std::string_view a, std::string_view b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) < std::tolower(static_cast<unsigned char>(y));
    });
}

std::string Request::path() const { return target.substr(0, target.find('?')); }

std::string Request::query() const {
    auto q = target.find('?');
    return q == std::string::npos ? std::string{} : target.substr(q + 1);
}

std::map<std::string, std::string> Request::fields() const {
    auto out = url::parse_query(query());
    auto ct = header("Content-Type");
    if (ct && ct->starts_with("application/x-www-form-urlencoded")) {
        for (auto& [k, v] : url::parse_query(body)) out[k] = v;
    }
    return out;
}

std::optional<std::string> Request::header(std::string_view name) const {
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> Response::header(std::string_view name) const {
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

Response Response::text(int status, std::string body, std::string content_type) {
    Response r;
    r.status = status;
    r.headers["Content-Type"] = std::move(content_type);
    r.body = std::move(body);
    return r;
}

Response Response::json(int status, std::string body) {
    return text(status, std::move(body), "application/json");
}

const char* reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 201: return "Created";
        case 204: return "No Content";
        case 206: return "Partial Content";
        case 400: return "Bad Request";
        case 401: return "Unauthorized";
        case 404: return "Not Found";
        case 405: return "Method Not Allowed";
        case 409: return "Conflict";
        case 416: return "Range Not Satisfiable";
        case 422: return "Unprocessable Entity";
        case 500: return "Internal Server Error";
        case 503: return "Service Unavailable";
    }
    return "Unknown";
}

namespace {

std::string serialize_headers(const Headers& headers, std::size_t body_size) {
    std::string out;
    for (const auto& [k, v] : headers) {
        if (CaseInsensitiveLess{}(k, "Content-Length") || CaseInsensitiveLess{}("Content-Length", k))
            out += k + ": " + v + "\r\n";
    }
    out += "Content-Length: " + std::to_string(body_size) + "\r\n\r\n";
    return out;
}

/// Splits the start line, headers and body; checks Content-Length against the body.
bool split_message(std::string_view raw, std::string_view& start, Headers& headers,
                   std::string& body) {
    auto head_end = raw.find("\r\n\r\n");
    if (head_end == std::string_view::npos) return false;
    auto head = raw.substr(0, head_end);
    auto rest = raw.substr(head_end + 4);
    auto line_end = head.find("\r\n");
    start = head.substr(0, line_end);
    head = line_end == std::string_view::npos ? std::string_view{} : head.substr(line_end + 2);
    while (!head.empty()) {
        auto e = head.find("\r\n");
        auto line = head.substr(0, e);
        head = e == std::string_view::npos ? std::string_view{} : head.substr(e + 2);
        auto colon = line.find(':');
        if (colon == std::string_view::npos) return false;
        auto value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        headers[std::string(line.substr(0, colon))] = std::string(value);
    }
    auto cl = headers.find("Content-Length");
    std::size_t len = 0;
    if (cl != headers.end()) {
        auto [p, ec] = std::from_chars(cl->second.data(), cl->second.data() + cl->second.size(), len);
        if (ec != std::errc{}) return false;
        headers.erase(cl);
    }
    if (rest.size() != len) return false;
    body = std::string(rest);
    return true;
}

}  // namespace

std::string serialize(const Request& req) {
    return req.method + " " + req.target + " HTTP/1.1\r\n" + serialize_headers(req.headers, req.body.size()) +
           req.body;
}

std::string serialize(const Response& resp) {
    return "HTTP/1.1 " + std::to_string(resp.status) + " " + reason_phrase(resp.status) + "\r\n" +
           serialize_headers(resp.headers, resp.body.size()) + resp.body;
}

std::optional<Request> parse_request(std::string_view raw) {
    Request req;
    std::string_view start;
    if (!split_message(raw, start, req.headers, req.body)) return std::nullopt;
    auto sp1 = start.find(' ');
    auto sp2 = start.rfind(' ');
    if (sp1 == std::string_view::npos || sp2 == sp1) return std::nullopt;
    req.method = std::string(start.substr(0, sp1));
    req.target = std::string(start.substr(sp1 + 1, sp2 - sp1 - 1));
    return req;
}

std::optional<Response> parse_response(std::string_view raw) {
    Response resp;
    std::string_view start;
    if (!split_message(raw, start, resp.headers, resp.body)) return std::nullopt;
    if (!start.starts_with("HTTP/1.1 ") || start.size() < 12) return std::nullopt;
    auto code = start.substr(9, 3);
    auto [p, ec] = std::from_chars(code.data(), code.data() + 3, resp.status);
    if (ec != std::errc{}) return std::nullopt;
    return resp;
}

std::optional<ByteRange> parse_range(std::string_view header, std::size_t size) {
    if (!header.starts_with("bytes=")) return std::nullopt;
    header.remove_prefix(6);
    auto dash = header.find('-');
    if (dash == std::string_view::npos || dash == 0 || header.find(',') != std::string_view::npos)
        return std::nullopt;
    auto parse = [](std::string_view s, std::size_t& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size();
    };
    ByteRange r;
    if (!parse(header.substr(0, dash), r.first)) return std::nullopt;
    auto last = header.substr(dash + 1);
    if (last.empty()) {
        r.last = size == 0 ? 0 : size - 1;
    } else if (!parse(last, r.last)) {
        return std::nullopt;
    }
    if (r.first > r.last || r.first >= size) return std::nullopt;
    r.last = std::min(r.last, size - 1);
    return r;
}

}  // namespace sdb::http
