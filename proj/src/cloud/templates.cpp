#include "sdb/cloud/templates.hpp"

#include <stdexcept>

#include "sdb/url.hpp"

namespace sdb::cloud {

namespace {

constexpr std::string_view check_base = "http://sdb-template-check.invalid";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

bool valid_filename(std::string_view name) {
    if (name.empty() || name == "." || name == "..") return false;
    return name.find_first_of("/\\?#") == std::string_view::npos;
}

}  // namespace

std::string fill_template(std::string_view tmpl, std::string_view base_url, std::string_view os_id) {
    std::string s(tmpl);
    replace_all(s, base_url_placeholder, base_url);
    replace_all(s, os_id_placeholder, os_id);
    return s;
}

std::vector<std::string> template_files(std::string_view tmpl, std::string_view os_id) {
    std::vector<std::string> files;
    auto script = ipxe::parse_script(fill_template(tmpl, check_base, os_id));
    std::string own = std::string(check_base) + "/files/" + std::string(os_id) + "/";
    for (const auto& u : ipxe::referenced_urls(script))
        if (u.rfind(own, 0) == 0) files.push_back(u.substr(own.size()));
    return files;
}

void check_template(std::string_view tmpl, std::string_view os_id) {
    ipxe::Script script;
    try {
        script = ipxe::parse_script(fill_template(tmpl, check_base, os_id));
    } catch (const ipxe::ScriptError& e) {
        throw std::invalid_argument(e.what());
    }
    std::string own = std::string(check_base) + "/files/" + std::string(os_id) + "/";
    for (const auto& u : ipxe::referenced_urls(script)) {
        if (u.rfind(check_base, 0) == 0) {
            if (u.rfind(own, 0) != 0 || !valid_filename(u.substr(own.size())))
                throw std::invalid_argument("URL " + u.substr(check_base.size()) +
                                            " must be {{base_url}}/files/{{os_id}}/<filename>");
            continue;
        }
        auto parsed = url::parse(u);
        if (!parsed) throw std::invalid_argument("URL '" + u + "' is not absolute");
        if (parsed->path.rfind("/files/", 0) == 0)
            throw std::invalid_argument("URL '" + u + "' points into a file area; use {{base_url}}");
    }
}

ipxe::Script instantiate(std::string_view tmpl, std::string_view base_url, std::string_view os_id,
                         std::string_view kernel_params) {
    auto script = ipxe::parse_script(fill_template(tmpl, base_url, os_id));
    if (!kernel_params.empty()) {
        for (auto& st : script.statements) {
            if (auto* k = std::get_if<ipxe::Kernel>(&st)) {
                if (!k->params.empty()) k->params += ' ';
                k->params += kernel_params;
            }
        }
    }
    return script;
}

ipxe::Script login_script(std::string_view base_url) {
    std::string base(base_url);
    return ipxe::Script{{
        ipxe::Echo{"/dev/SDB: sign in to boot your workspace"},
        ipxe::Login{},
        ipxe::Chain{base + "/auth?username=${username}&password=${password}&mac=${net0/mac}"},
    }};
}

ipxe::Script failure_script(std::string_view base_url) {
    return ipxe::Script{{
        ipxe::Echo{"Login failed"},
        ipxe::Chain{std::string(base_url) + "/boot"},
    }};
}

std::string default_template(std::string_view kernel, std::string_view initrd) {
    std::vector<std::string> initrds;
    if (!initrd.empty()) initrds.emplace_back(initrd);
    return default_template(kernel, initrds);
}

std::string default_template(std::string_view kernel, const std::vector<std::string>& initrds) {
    std::string t = "#!ipxe\n";
    t += "kernel {{base_url}}/files/{{os_id}}/" + std::string(kernel) + "\n";
    for (const auto& i : initrds) t += "initrd {{base_url}}/files/{{os_id}}/" + i + "\n";
    t += "boot\n";
    return t;
}

}  // namespace sdb::cloud
