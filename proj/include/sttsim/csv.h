#ifndef STTSIM_CSV_H
#define STTSIM_CSV_H

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sttsim::csv
{
/// Header row plus data rows; fields never contain commas or quotes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index, or throws std::out_of_range naming the column.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read(std::istream& in);
void write(std::ostream& out, const Table& table);

/// Fixed-point, locale-independent.
std::string fixed(double v, int decimals);
/// Femtojoules printed as nanojoules with three decimals, rounded half away from zero.
std::string nanojoules3(std::int64_t femtojoules);

/// Columns padded to equal width, for terminal output.
void write_aligned(std::ostream& out, const Table& table);
} // namespace sttsim::csv

#endif
