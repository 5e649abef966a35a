#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ntlgen::io {

// Binary layout shared by checkpoints and flat rasters:
//   8-byte magic | u64 LE header length | UTF-8 JSON header | f32 LE payload
struct Container {
  std::string header;
  std::vector<float> payload;
};

// Written to a sibling temporary and renamed into place. IOError on failure.
void write_container(const std::filesystem::path& path, std::string_view magic, const std::string& header,
                     std::span<const float> payload);

// FormatError on a wrong magic, truncated header or a payload that is not a
// whole number of floats; IOError if the file cannot be opened.
Container read_container(const std::filesystem::path& path, std::string_view magic);

// Raw little-endian float files.
void write_f32(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ntlgen::io
