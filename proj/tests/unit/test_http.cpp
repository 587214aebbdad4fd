#include <gtest/gtest.h>

#include "sdb/http/message.hpp"

using namespace sdb::http;

TEST(Http, RequestRoundTrip) {
    Request req;
    req.method = "POST";
    req.target = "/auth?mac=52%3A54";
    req.headers["Content-Type"] = "application/x-www-form-urlencoded";
    req.body = "username=alice&password=p%40ss";
    auto back = parse_request(serialize(req));
    ASSERT_TRUE(back);
    EXPECT_EQ(back->method, "POST");
    EXPECT_EQ(back->path(), "/auth");
    EXPECT_EQ(back->body, req.body);
    auto f = back->fields();
    EXPECT_EQ(f["mac"], "52:54");
    EXPECT_EQ(f["password"], "p@ss");
    EXPECT_EQ(back->header("content-type"), "application/x-www-form-urlencoded");
}

TEST(Http, ResponseRoundTrip) {
    auto resp = Response::json(404, R"({"error":"x"})");
    auto back = parse_response(serialize(resp));
    ASSERT_TRUE(back);
    EXPECT_EQ(back->status, 404);
    EXPECT_EQ(back->body, resp.body);
    EXPECT_EQ(back->header("CONTENT-TYPE"), "application/json");
}

TEST(Http, BinaryBodySurvives) {
    Response resp;
    resp.body = std::string("\0\r\n\r\n\xff", 6);
    auto back = parse_response(serialize(resp));
    ASSERT_TRUE(back);
    EXPECT_EQ(back->body, resp.body);
}

TEST(Http, TruncatedBodyRejected) {
    auto raw = serialize(Response::text(200, "hello"));
    EXPECT_FALSE(parse_response(raw.substr(0, raw.size() - 1)));
    EXPECT_FALSE(parse_request("garbage"));
}

TEST(Http, Ranges) {
    auto r = parse_range("bytes=0-511", 1024);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->first, 0u);
    EXPECT_EQ(r->last, 511u);
    r = parse_range("bytes=1000-", 1024);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->last, 1023u);
    r = parse_range("bytes=1000-5000", 1024);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->last, 1023u);
    EXPECT_FALSE(parse_range("bytes=2000-", 1024));
    EXPECT_FALSE(parse_range("bytes=5-1", 1024));
    EXPECT_FALSE(parse_range("lines=0-1", 1024));
    EXPECT_FALSE(parse_range("bytes=0-1,4-5", 1024));
}
