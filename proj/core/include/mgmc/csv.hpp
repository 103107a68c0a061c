#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mgmc::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 style: comma separated, optional double quotes with "" escapes.
std::vector<std::string> split_line(const std::string& line);
Table parse(const std::string& text);
Table read_file(const std::filesystem::path& path);

std::string escape(const std::string& field);
std::string join(const std::vector<std::string>& fields);
// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace mgmc::csv
