#include <gtest/gtest.h>

#include <random>

#include "sdb/ipxe/script.hpp"

using namespace sdb;
using namespace sdb::ipxe;

namespace {

ScriptErrorKind parse_error(std::string_view text, int* line = nullptr) {
    try {
        parse_script(text);
    } catch (const ScriptError& e) {
        if (line) *line = e.line();
        return e.kind();
    }
    ADD_FAILURE() << "parsed: " << text;
    return ScriptErrorKind::NoShebang;
}

}  // namespace

TEST(ParseScript, Chainload) {
    auto s = parse_script("#!ipxe\nchain http://boot.cloud.example/boot");
    ASSERT_EQ(s.statements.size(), 1u);
    EXPECT_EQ(std::get<Chain>(s.statements[0]).url, "http://boot.cloud.example/boot");
}

TEST(ParseScript, KernelInitrdBoot) {
    auto s = parse_script("#!ipxe\nkernel http://h/k p=1\ninitrd http://h/i\nboot");
    ASSERT_EQ(s.statements.size(), 3u);
    EXPECT_EQ(std::get<Kernel>(s.statements[0]), (Kernel{"http://h/k", "p=1"}));
    EXPECT_EQ(std::get<Initrd>(s.statements[1]).url, "http://h/i");
    EXPECT_TRUE(std::holds_alternative<Boot>(s.statements[2]));
}

TEST(ParseScript, CommentsBlankLinesAndCrlf) {
    auto s = parse_script("#!ipxe\r\n\r\n# a comment\r\n  echo   hello  world \r\nlogin\r\n");
    ASSERT_EQ(s.statements.size(), 2u);
    EXPECT_EQ(std::get<Echo>(s.statements[0]).text, "hello  world");
}

TEST(ParseScript, Errors) {
    int line = 0;
    EXPECT_EQ(parse_error("chain http://x/"), ScriptErrorKind::NoShebang);
    EXPECT_EQ(parse_error(""), ScriptErrorKind::NoShebang);
    EXPECT_EQ(parse_error("#!ipxe\nfrobnicate", &line), ScriptErrorKind::UnknownCommand);
    EXPECT_EQ(line, 2);
    EXPECT_EQ(parse_error("#!ipxe\necho ok\nchain", &line), ScriptErrorKind::MalformedArgs);
    EXPECT_EQ(line, 3);
    EXPECT_EQ(parse_error("#!ipxe\nchain a b"), ScriptErrorKind::MalformedArgs);
    EXPECT_EQ(parse_error("#!ipxe\nlogin now"), ScriptErrorKind::MalformedArgs);
    EXPECT_EQ(parse_error("#!ipxe\nprompt --masked"), ScriptErrorKind::MalformedArgs);
    EXPECT_EQ(parse_error("#!ipxe\nboot"), ScriptErrorKind::BadOrder);
    EXPECT_EQ(parse_error("#!ipxe\nkernel k\nboot\necho late", &line), ScriptErrorKind::BadOrder);
    EXPECT_EQ(line, 4);
    EXPECT_EQ(parse_error("#!ipxe\nkernel k\nboot\nboot"), ScriptErrorKind::BadOrder);
    EXPECT_EQ(parse_error("#!ipxe\nkernel k\nboot\ninitrd i"), ScriptErrorKind::BadOrder);
}

TEST(RenderScript, Keywords) {
    EXPECT_EQ(render_statement(Echo{"hi"}), "echo hi");
    EXPECT_EQ(render_statement(Echo{""}), "echo");
    EXPECT_EQ(render_statement(Login{}), "login");
    EXPECT_EQ(render_statement(Prompt{"passphrase", "Wi-Fi password", true}),
              "prompt --masked passphrase Wi-Fi password");
    EXPECT_EQ(render_statement(Kernel{"http://h/k", ""}), "kernel http://h/k");
    EXPECT_EQ(render_script(Script{{Chain{"http://x/boot"}}}), "#!ipxe\nchain http://x/boot\n");
}

TEST(Substitute, MacIsPercentEncodedInUrls) {
    Script s{{Chain{"http://c/auth?mac=${net0/mac}"}, Echo{"mac ${net0/mac}"}}};
    VarEnv env{{"net0/mac", "52:54:00:12:34:56"}};
    auto out = substitute(s, env);
    EXPECT_EQ(std::get<Chain>(out.statements[0]).url, "http://c/auth?mac=52%3A54%3A00%3A12%3A34%3A56");
    EXPECT_EQ(std::get<Echo>(out.statements[1]).text, "mac 52:54:00:12:34:56");
    EXPECT_FALSE(has_placeholders(out));
    EXPECT_TRUE(has_placeholders(s));
}

TEST(Substitute, IdentityWithoutPlaceholdersAndUndefinedVariable) {
    Script s{{Kernel{"http://h/k", "quiet"}, Boot{}}};
    EXPECT_EQ(substitute(s, {}), s);
    try {
        substitute(Script{{Chain{"http://x/${nosuch}"}}}, {});
        FAIL();
    } catch (const ScriptError& e) {
        EXPECT_EQ(e.kind(), ScriptErrorKind::UndefinedVariable);
        EXPECT_EQ(e.detail(), "nosuch");
    }
    EXPECT_THROW(expand("${open", {}, false), ScriptError);
}

TEST(Validate, RejectsUnrenderableFields) {
    EXPECT_THROW(validate(Script{{Echo{"two\nlines"}}}), ScriptError);
    EXPECT_THROW(validate(Script{{Chain{"has space"}}}), ScriptError);
    EXPECT_THROW(validate(Script{{Set{"", "v"}}}), ScriptError);
    EXPECT_THROW(validate(Script{{Prompt{"--masked", "x", false}}}), ScriptError);
    EXPECT_THROW(validate(Script{{Boot{}}}), ScriptError);
    EXPECT_NO_THROW(validate(Script{{Kernel{"k", ""}, Boot{}}}));
}

namespace {

class ScriptGen {
public:
    explicit ScriptGen(std::uint64_t seed) : rng_(seed) {}

    Script script() {
        Script s;
        std::size_t n = pick(12);
        bool kernel = false;
        for (std::size_t i = 0; i < n; ++i) {
            switch (pick(10)) {
                case 0: s.statements.push_back(Echo{text()}); break;
                case 1: s.statements.push_back(Set{name(), text()}); break;
                case 2: s.statements.push_back(Login{}); break;
                case 3: s.statements.push_back(Prompt{name(), text(), pick(2) == 1}); break;
                case 4: s.statements.push_back(Chain{url()}); break;
                case 5:
                    s.statements.push_back(Kernel{url(), text()});
                    kernel = true;
                    break;
                case 6: s.statements.push_back(Initrd{url()}); break;
                case 7: s.statements.push_back(MenuStart{text()}); break;
                case 8: s.statements.push_back(MenuItem{name(), text()}); break;
                default: s.statements.push_back(Choose{name()}); break;
            }
        }
        if (kernel && pick(2)) s.statements.push_back(Boot{});
        return s;
    }

private:
    std::size_t pick(std::size_t n) { return std::size_t(rng_() % n); }
    std::string word(std::string_view alphabet, std::size_t min_len) {
        std::string w(min_len + pick(8), 'x');
        for (auto& c : w) c = alphabet[pick(alphabet.size())];
        return w;
    }
    std::string name() { return "v" + word("abcxyz0123_/.-", 0); }
    std::string url() { return "http://h/" + word("abc${}?=&%:", 1); }
    std::string text() {
        std::string t;
        std::size_t words = pick(4);
        for (std::size_t i = 0; i < words; ++i) {
            if (i) t += pick(2) ? " " : "  ";
            t += word("abcdefXYZ#=:${}", 1);
        }
        return t;
    }

    std::mt19937_64 rng_;
};

}  // namespace

TEST(ScriptProperty, ParseRenderRoundTrip) {
    ScriptGen gen(0x1BE);
    for (int i = 0; i < 5000; ++i) {
        auto s = gen.script();
        ASSERT_NO_THROW(validate(s));
        auto text = render_script(s);
        auto parsed = parse_script(text);
        ASSERT_EQ(parsed, s) << text;
        ASSERT_EQ(render_script(parsed), text);
    }
}

TEST(ScriptProperty, RenderOfParseIsCanonical) {
    auto text = "#!ipxe\n\n  # comment\necho   a  b   \nprompt   --masked   pw    Password:\n"
                "kernel http://h/k    quiet  splash\ninitrd   http://h/i\nboot\n";
    auto canonical = render_script(parse_script(text));
    EXPECT_EQ(canonical,
              "#!ipxe\necho a  b\nprompt --masked pw Password:\nkernel http://h/k quiet  splash\n"
              "initrd http://h/i\nboot\n");
    EXPECT_EQ(render_script(parse_script(canonical)), canonical);
}
