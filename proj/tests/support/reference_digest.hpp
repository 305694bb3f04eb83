#pragma once

#include <string>
#include <string_view>

// Straight transcriptions of the RFC algorithms, kept free of any library
// dependency so they can cross-check the production digest code.
namespace refdigest {

std::string base64(std::string_view data);
std::string md5_hex(std::string_view data);
std::string sha1_hex(std::string_view data);

}  // namespace refdigest
