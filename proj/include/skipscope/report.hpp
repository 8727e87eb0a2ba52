#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace skipscope {

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

// Writes `contents` to `path` through a temporary sibling and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

} // namespace skipscope
