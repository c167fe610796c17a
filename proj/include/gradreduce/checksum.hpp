#pragma once

#include <string>

namespace gradreduce {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// SHA-256 of a file's contents; throws Io when it cannot be read.
std::string sha256_file(const std::string& path);

} // namespace gradreduce
