#include "csv.hpp"

#include <fstream>
#include <sstream>

#include "trendlens/errors.hpp"

namespace trendlens::csv {

int Table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Table parse(const std::string& text) {
  Table table;
  std::vector<std::string> record;
  std::string cell;
  bool in_quotes = false;
  bool record_has_data = false;

  auto end_cell = [&]() {
    record.push_back(std::move(cell));
    cell.clear();
  };
  auto end_record = [&]() {
    end_cell();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
    record_has_data = false;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_has_data = true;
        break;
      case ',':
        end_cell();
        record_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (record_has_data || !cell.empty() || !record.empty()) end_record();
        break;
      default:
        cell.push_back(c);
        record_has_data = true;
    }
  }
  if (record_has_data || !cell.empty() || !record.empty()) end_record();
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace trendlens::csv
