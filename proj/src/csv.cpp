#include "mui/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mui/error.hpp"

namespace mui::csv {

std::string field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string line(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += field(row[i]);
  }
  return out + "\r\n";
}

std::string num(double v, int digits) {
  char buf[64];
  if (digits >= 0) {
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
  }
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  f << line(header);
  for (const auto& r : rows) f << line(r);
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::size_t Table::col(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorCode::kFormat, "missing CSV column '" + std::string(name) + "'");
}

Table parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string cur;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cur));
      cur.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cur.empty()) {
        row.push_back(std::move(cur));
        rows.push_back(std::move(row));
      }
      row.clear();
      cur.clear();
      any = false;
    } else {
      cur += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kFormat, "unterminated quoted CSV field");
  if (any || !cur.empty()) {
    row.push_back(std::move(cur));
    rows.push_back(std::move(row));
  }
  Table t;
  if (rows.empty()) return t;
  t.header = std::move(rows.front());
  t.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (const auto& r : t.rows)
    if (r.size() != t.header.size()) throw Error(ErrorCode::kFormat, "CSV row width differs from header");
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace mui::csv
