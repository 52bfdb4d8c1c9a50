#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace manitwin {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Current UTC time as ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace manitwin
