#include "webgraph/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "webgraph/errors.hpp"

namespace webgraph {

namespace {

std::string evp_hex(const EVP_MD* md, std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
    throw InvariantViolation("EVP_Digest failed");
  }
  return hex_encode(std::string_view(reinterpret_cast<const char*>(out.data()), len));
}

}  // namespace

std::string hex_encode(std::string_view data) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (unsigned char c : data) {
    out += kHex[c >> 4];
    out += kHex[c & 0xf];
  }
  return out;
}

std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  if (data.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string md5_hex(std::string_view data) { return evp_hex(EVP_md5(), data); }

std::string sha1_hex(std::string_view data) { return evp_hex(EVP_sha1(), data); }

}  // namespace webgraph
