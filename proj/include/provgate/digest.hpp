#pragma once

#include <string>
#include <string_view>

namespace provgate {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

bool is_sha256_hex(std::string_view text);

std::string base64_encode(std::string_view bytes);
// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace provgate
