#include "binfile.hpp"

#include <fstream>

#include "ruq/errors.hpp"

namespace ruq::detail {

namespace {
constexpr std::size_t kAlign = 64;
constexpr std::size_t kMaxHeaderBytes = 64 << 20;  // ids arrays can get large
}  // namespace

LoadedContainer load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  std::string line;
  line.reserve(256);
  char c;
  while (in.get(c)) {
    if (c == '\n') break;
    line.push_back(c);
    if (line.size() > kMaxHeaderBytes) {
      throw ValidationError("malformed header (no newline within limit): " + path.string());
    }
  }
  if (line.empty() || !in) {
    throw ValidationError("malformed header (empty or truncated): " + path.string());
  }
  LoadedContainer out;
  try {
    out.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed header in " + path.string() + ": " + e.what());
  }
  if (!out.header.is_object()) {
    throw ValidationError("malformed header (not a JSON object): " + path.string());
  }
  std::vector<std::byte> payload;
  in.seekg(0, std::ios::end);
  const auto end_pos = in.tellg();
  const std::streamoff start = static_cast<std::streamoff>(line.size()) + 1;
  in.seekg(start, std::ios::beg);
  if (end_pos > start) {
    payload.resize(static_cast<std::size_t>(end_pos - start));
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (!in) {
      throw ValidationError("short read on payload: " + path.string());
    }
  }
  out.payload = std::move(payload);
  return out;
}

void save_container(const std::filesystem::path& path, const nlohmann::json& header,
                    const void* payload, std::size_t payload_bytes) {
  std::string line = header.dump();
  const std::size_t used = line.size() + 1;  // header + newline
  line.append((kAlign - used % kAlign) % kAlign, ' ');
  line.push_back('\n');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot write file: " + path.string());
  }
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (payload_bytes > 0) {
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
  }
  out.flush();
  if (!out) {
    throw ValidationError("write failed: " + path.string());
  }
}

std::size_t header_size_field(const nlohmann::json& header, const char* key,
                              const std::filesystem::path& path) {
  if (!header.contains(key) || !header[key].is_number_unsigned()) {
    throw ValidationError("header of " + path.string() + " is missing numeric field \"" +
                          key + "\"");
  }
  return header[key].get<std::size_t>();
}

std::string header_dtype(const nlohmann::json& header, const std::filesystem::path& path,
                         const char* fallback) {
  if (!header.contains("dtype")) return fallback;
  if (!header["dtype"].is_string()) {
    throw ValidationError("header of " + path.string() + " has non-string dtype");
  }
  return header["dtype"].get<std::string>();
}

std::size_t dtype_bytes(const std::string& dtype, const std::filesystem::path& path) {
  if (dtype == "f32") return 4;
  if (dtype == "f64") return 8;
  if (dtype == "u8") return 1;
  if (dtype == "u16") return 2;
  throw ValidationError("unsupported dtype \"" + dtype + "\" in " + path.string());
}

void check_payload_size(std::size_t actual, std::size_t expected,
                        const std::filesystem::path& path) {
  if (actual != expected) {
    throw ValidationError("payload size mismatch in " + path.string() + ": expected " +
                          std::to_string(expected) + " bytes, found " +
                          std::to_string(actual));
  }
}

}  // namespace ruq::detail
