#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sdb/ipxe/script.hpp"

namespace sdb::cloud {

inline constexpr std::string_view base_url_placeholder = "{{base_url}}";
inline constexpr std::string_view os_id_placeholder = "{{os_id}}";

/// Replaces {{base_url}} and {{os_id}} textually.
std::string fill_template(std::string_view tmpl, std::string_view base_url, std::string_view os_id);

/// Throws std::invalid_argument with a human-readable reason when the template does not
/// parse after placeholder substitution, or when a URL on this server points anywhere other
/// than files/<os_id>/<filename>. External absolute URLs are allowed unless their path is
/// under /files/.
void check_template(std::string_view tmpl, std::string_view os_id);

/// Filenames referenced through {{base_url}}/files/{{os_id}}/<name>.
std::vector<std::string> template_files(std::string_view tmpl, std::string_view os_id);

/// The personalised success script: the filled template with kernel_params appended to
/// every Kernel statement.
ipxe::Script instantiate(std::string_view tmpl, std::string_view base_url, std::string_view os_id,
                         std::string_view kernel_params);

/// Login form: prompts for credentials and chains to /auth with username, password and the
/// client's MAC as placeholders.
ipxe::Script login_script(std::string_view base_url);

/// Uniform rejection script: same shape whatever the reason.
ipxe::Script failure_script(std::string_view base_url);

/// Default template for a kernel + initrd OS.
std::string default_template(std::string_view kernel, std::string_view initrd);
std::string default_template(std::string_view kernel, const std::vector<std::string>& initrds);

}  // namespace sdb::cloud
