#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ftp {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Whole-file read; throws Error naming the path on failure.
std::string read_file(const std::filesystem::path& path);

/// Truncating write; throws Error naming the path on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ftp
