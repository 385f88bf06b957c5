#include "sttsim/csv.h"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace sttsim::csv
{
namespace
{
std::vector<std::string> split(std::string_view line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

void put_row(std::ostream& out, const std::vector<std::string>& row)
{
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i)
      out << ',';
    out << row[i];
  }
  out << '\n';
}
} // namespace

std::size_t Table::column(std::string_view name) const
{
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw std::out_of_range("missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(std::string_view name) const { return std::find(header.begin(), header.end(), name) != header.end(); }

Table read(std::istream& in)
{
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (first) {
      t.header = split(line);
      first = false;
      continue;
    }
    auto row = split(line);
    if (row.size() != t.header.size())
      throw std::runtime_error(fmt::format("row {} has {} fields, header has {}", t.rows.size() + 2, row.size(), t.header.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write(std::ostream& out, const Table& table)
{
  put_row(out, table.header);
  for (const auto& r : table.rows)
    put_row(out, r);
}

std::string fixed(double v, int decimals) { return fmt::format("{:.{}f}", v, decimals); }

std::string nanojoules3(std::int64_t femtojoules)
{
  // 1 nJ = 1e6 fJ; three decimals keep units of 1e3 fJ.
  const bool neg = femtojoules < 0;
  const auto mag = static_cast<std::uint64_t>(neg ? -femtojoules : femtojoules);
  const auto milli = (mag + 500) / 1000;
  return fmt::format("{}{}.{:03}", neg ? "-" : "", milli / 1000, milli % 1000);
}

void write_aligned(std::ostream& out, const Table& table)
{
  std::vector<std::size_t> width(table.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  };
  widen(table.header);
  for (const auto& r : table.rows)
    widen(r);
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out << (i ? "  " : "") << fmt::format("{:<{}}", r[i], width[i]);
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows)
    emit(r);
}
} // namespace sttsim::csv
