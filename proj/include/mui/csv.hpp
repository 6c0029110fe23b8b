#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mui::csv {

using Row = std::vector<std::string>;

// RFC 4180: quote fields containing a comma, quote, CR or LF.
std::string field(std::string_view s);
std::string line(const Row& row);
// Shortest round-trippable decimal, or fixed precision when digits >= 0.
std::string num(double v, int digits = -1);

void write(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

struct Table {
  Row header;
  std::vector<Row> rows;

  // Column index by header name; throws ErrorCode::kFormat if absent.
  std::size_t col(std::string_view name) const;
};

Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

}  // namespace mui::csv
