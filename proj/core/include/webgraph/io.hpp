#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace webgraph {

/// Reads a whole file. Throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partial artifact. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Splits one CSV line on commas. Fields never contain quotes or commas in
/// the artifacts written by this library.
std::vector<std::string> split_csv_line(std::string_view line);

/// Lines without their trailing '\r' / '\n'; a trailing empty line is dropped.
std::vector<std::string> split_lines(std::string_view text);

}  // namespace webgraph
