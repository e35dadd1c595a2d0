#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace prnn::detail {

// Parses a plain-text key=value file. '#' starts a comment; blank lines are
// skipped. Duplicate keys keep the last value. Throws std::runtime_error on
// unreadable files or lines without '='.
std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path);

}  // namespace prnn::detail
