#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sddlab::io {

// Writes to "<path>.tmp" and renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::byte> bytes);
std::uint32_t crc32(std::string_view text);
std::string hex32(std::uint32_t value);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view text);

// CRC-32 over the little-endian bytes of the labels.
std::uint32_t label_hash(std::span<const int> labels);

}  // namespace sddlab::io
