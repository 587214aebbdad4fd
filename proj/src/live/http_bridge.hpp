#pragma once

#include <httplib.h>

#include "sdb/http/message.hpp"

namespace sdb::live {

inline http::Request from_httplib(const httplib::Request& in) {
    http::Request r;
    r.method = in.method;
    r.target = in.target.empty() ? in.path : in.target;
    for (const auto& [k, v] : in.headers) r.headers[k] = v;
    r.body = in.body;
    return r;
}

inline bool same_header(const std::string& a, const char* b) {
    http::CaseInsensitiveLess less;
    return !less(a, b) && !less(b, a);
}

inline void to_httplib(const http::Response& in, httplib::Response& out) {
    out.status = in.status;
    std::string type = "application/octet-stream";
    for (const auto& [k, v] : in.headers) {
        if (same_header(k, "Content-Type"))
            type = v;
        else if (!same_header(k, "Content-Length"))
            out.set_header(k, v);
    }
    if (in.status != 204) out.set_content(in.body, type);
}

}  // namespace sdb::live
