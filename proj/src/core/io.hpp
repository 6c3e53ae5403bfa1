#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mimgan::io {

/// Writes `content` to `path` via a sibling temp file and rename, so readers
/// never observe a partially written file.
void atomic_write(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

/// Flat `key = value` text; `#` starts a comment, blank lines are ignored.
/// Later duplicates win. Throws IoError on malformed lines.
std::map<std::string, std::string> parse_kv(std::string_view text, const std::string& origin = "<text>");
std::map<std::string, std::string> read_kv_file(const std::string& path);
std::string format_kv(const std::map<std::string, std::string>& kv);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);
/// Twelve significant digits, for human-facing summaries (0.3, not
/// 0.30000000000000004).
std::string format_display(double v);

}  // namespace mimgan::io
