#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace trendlens::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1.
  int column(const std::string& name) const;
};

// RFC 4180-style parsing: quoted cells, doubled quotes, embedded newlines,
// tolerant of CRLF line endings. First record is the header.
Table parse(const std::string& text);
Table read_file(const std::filesystem::path& path);

}  // namespace trendlens::csv
