#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pocscan {

// Lowercase hex SHA-256 digest of a byte buffer.
std::string sha256_hex(const std::uint8_t* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_hex(const std::vector<std::uint8_t>& data);

// Digest of a file's exact bytes; throws IngestError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

} // namespace pocscan
