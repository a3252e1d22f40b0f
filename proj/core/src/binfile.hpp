#pragma once

// On-disk container format shared by every binary artifact this library
// reads or writes: one compact UTF-8 JSON header line, space-padded so the
// payload starts at a 64-byte boundary, then a raw little-endian payload.
// The header's "dtype" field names the payload element type (f32, f64, u8,
// u16). Internal header, not installed.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ruq::detail {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts are unsupported");

struct LoadedContainer {
  nlohmann::json header;
  std::vector<std::byte> payload;
};

// Reads the whole file: parses the header line, returns the remaining bytes
// verbatim. Throws ValidationError on unreadable files or malformed headers.
LoadedContainer load_container(const std::filesystem::path& path);

// Writes header + alignment padding + payload.
void save_container(const std::filesystem::path& path, const nlohmann::json& header,
                    const void* payload, std::size_t payload_bytes);

// Header field access with ValidationError on missing/mistyped fields;
// `path` only feeds the error message.
std::size_t header_size_field(const nlohmann::json& header, const char* key,
                              const std::filesystem::path& path);
std::string header_dtype(const nlohmann::json& header, const std::filesystem::path& path,
                         const char* fallback);

std::size_t dtype_bytes(const std::string& dtype, const std::filesystem::path& path);

// Expected payload size check with a diagnosable message.
void check_payload_size(std::size_t actual, std::size_t expected,
                        const std::filesystem::path& path);

}  // namespace ruq::detail
