#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace babplan {

// Hex-encoded SHA-256.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);

// Canonical byte stream for hashing doubles: little-endian IEEE-754 in the
// order given.
void append_le_doubles(std::vector<unsigned char>& buf, const double* data, std::size_t n);

}  // namespace babplan
