#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cste {

/// Shortest round-trip decimal form of a double. Locale-independent, so CSV
/// output is byte-stable across reruns.
std::string format_double(double v);

std::string format_int(std::int64_t v);

/// Splits one CSV line on commas. No quoting support; field values in this
/// project never contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads all lines of a text file, tolerating a missing trailing newline.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Splits in-memory text into lines the same way read_lines does.
std::vector<std::string> split_lines(const std::string& text);

/// Writes content atomically enough for our purposes (single write + flush),
/// throwing on any stream failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

double parse_double(const std::string& s, const std::string& context);
std::int64_t parse_int(const std::string& s, const std::string& context);

}  // namespace cste
