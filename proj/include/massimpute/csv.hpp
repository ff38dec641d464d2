#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace massimpute::csv {

// A comma-delimited table with one header row. Cells are kept as text so
// columns can be written back verbatim.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t row_count() const { return rows.size(); }
};

// RFC 4180 style quoting is honoured on read; CR/LF line endings both work.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::string serialize(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict parse: surrounding blanks allowed, trailing garbage and non-finite
// values rejected.
std::optional<double> parse_double(std::string_view text);

}  // namespace massimpute::csv
