#include "ntlgen/io/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ntlgen/error.hpp"

namespace ntlgen::io {
namespace {

static_assert(sizeof(float) == 4);

std::uint32_t swap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t parse_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::string floats_to_bytes(std::span<const float> values) {
  std::string out(values.size() * 4, '\0');
  std::memcpy(out.data(), values.data(), out.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t w;
      std::memcpy(&w, out.data() + 4 * i, 4);
      w = swap32(w);
      std::memcpy(out.data() + 4 * i, &w, 4);
    }
  }
  return out;
}

std::vector<float> bytes_to_floats(const char* data, std::size_t bytes) {
  std::vector<float> out(bytes / 4);
  std::memcpy(out.data(), data, out.size() * 4);
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : out) {
      std::uint32_t w;
      std::memcpy(&w, &f, 4);
      w = swap32(w);
      std::memcpy(&f, &w, 4);
    }
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IOError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic, const std::string& header,
                     std::span<const float> payload) {
  if (magic.size() != 8) throw FormatError("container magic must be 8 bytes");
  std::string bytes(magic);
  append_u64(bytes, header.size());
  bytes += header;
  bytes += floats_to_bytes(payload);
  write_bytes(path, bytes);
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() < 16 || std::string_view(bytes).substr(0, 8) != magic) {
    throw FormatError(path.string() + ": missing " + std::string(magic) + " header");
  }
  const std::uint64_t header_len = parse_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw FormatError(path.string() + ": truncated header");
  const std::size_t payload_at = 16 + static_cast<std::size_t>(header_len);
  const std::size_t payload_bytes = bytes.size() - payload_at;
  if (payload_bytes % 4 != 0) throw FormatError(path.string() + ": payload is not a whole number of floats");
  return {bytes.substr(16, header_len), bytes_to_floats(bytes.data() + payload_at, payload_bytes)};
}

void write_f32(const std::filesystem::path& path, std::span<const float> values) {
  write_bytes(path, floats_to_bytes(values));
}

std::vector<float> read_f32(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() % 4 != 0) throw FormatError(path.string() + ": length is not a multiple of 4");
  return bytes_to_floats(bytes.data(), bytes.size());
}

void write_text(const std::filesystem::path& path, const std::string& text) { write_bytes(path, text); }

std::string read_text(const std::filesystem::path& path) { return read_bytes(path); }

}  // namespace ntlgen::io
