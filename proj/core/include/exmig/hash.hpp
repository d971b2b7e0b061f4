#pragma once

#include <string>
#include <string_view>

namespace exmig {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First `hex_chars` characters of sha256_hex(data).
std::string short_hash(std::string_view data, std::size_t hex_chars = 16);

} // namespace exmig
