#include "babplan/digest.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace babplan {

std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out, &out_len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failure");
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(out_len * 2);
  for (unsigned int i = 0; i < out_len; ++i) {
    s.push_back(hex[out[i] >> 4]);
    s.push_back(hex[out[i] & 0xF]);
  }
  return s;
}

std::string sha256_hex(const std::string& data) { return sha256_hex(data.data(), data.size()); }

void append_le_doubles(std::vector<unsigned char>& buf, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8, "IEEE-754 doubles expected");
  const size_t base = buf.size();
  buf.resize(base + 8 * n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    for (int b = 0; b < 8; ++b)
      buf[base + 8 * i + static_cast<size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
}

}  // namespace babplan
