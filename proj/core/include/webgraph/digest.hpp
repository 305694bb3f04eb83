#pragma once

#include <string>
#include <string_view>

namespace webgraph {

/// Standard-alphabet base64 with '=' padding.
std::string base64_encode(std::string_view data);

/// Lowercase hex digests.
std::string md5_hex(std::string_view data);
std::string sha1_hex(std::string_view data);

std::string hex_encode(std::string_view data);

}  // namespace webgraph
