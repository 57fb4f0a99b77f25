#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace detrank {

/// Writes to a sibling temp file and renames over `path`, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
[[nodiscard]] std::string read_file_text(const std::filesystem::path& path);

}  // namespace detrank
