#pragma once

#include <string>
#include <vector>

namespace biomark {

/// Shortest round-trip decimal form of v (std::to_chars). Deterministic,
/// parses back to the identical double.
std::string fmt_double(double v);

std::string slurp_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> split_csv_line(const std::string& line);

/// Strict double parse of a full token; returns false on any trailing junk.
bool parse_double(const std::string& tok, double& out);

} // namespace biomark
