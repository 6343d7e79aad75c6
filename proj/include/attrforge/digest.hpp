#pragma once

#include <string>
#include <string_view>

namespace attrforge {

// Lowercase hex SHA-256 of the exact bytes.
std::string sha256_hex(std::string_view bytes);

// Digest of a file's contents; throws std::runtime_error when unreadable.
std::string sha256_file_hex(const std::string& path);

}  // namespace attrforge
