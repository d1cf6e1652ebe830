#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pqflow/errors.hpp"
#include "pqflow/labcli.hpp"

namespace pqflow::labcli
{

const std::vector<std::string> kCsvColumns = {"t",     "lambda",    "S_min",      "volume",
                                              "r",     "cond_min",  "Q",          "G_formula",
                                              "dlambda_fd", "eig_iters", "eig_residual", "degraded"};

// to_chars ignores the global locale, which keeps files byte-stable.
std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream &out, const std::vector<monitor::TraceRecord> &records)
{
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i)
  {
    out << (i ? "," : "") << kCsvColumns[i];
  }
  out << '\n';
  for (const auto &r : records)
  {
    out << format_double(r.t) << ',' << format_double(r.lambda) << ',' << format_double(r.S_min) << ','
        << format_double(r.volume) << ',' << format_double(r.r) << ',' << format_double(r.cond_min) << ','
        << format_double(r.Q) << ',' << format_double(r.G_formula) << ',' << format_double(r.dlambda_fd)
        << ',' << r.eig_iters << ',' << format_double(r.eig_residual) << ',' << (r.degraded ? 1 : 0)
        << '\n';
  }
}

namespace
{

std::vector<std::string> split(const std::string &line)
{
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
  {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',')
  {
    cells.emplace_back();
  }
  return cells;
}

double parse_cell(const std::string &cell, int lineno)
{
  double v = 0.0;
  const char *first = cell.data(), *last = cell.data() + cell.size();
  if (first != last && *first == '+')
  {
    ++first;
  }
  // from_chars accepts "inf"/"nan" spellings that to_chars produces.
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
  {
    throw ParseError("csv line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

Table read_csv(std::istream &in, std::vector<std::string> *header)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw ParseError("csv: missing header");
  }
  if (!line.empty() && line.back() == '\r')
  {
    line.pop_back();
  }
  const auto names = split(line);
  if (names.empty())
  {
    throw ParseError("csv: empty header");
  }
  Table table;
  for (const auto &n : names)
  {
    if (!table.emplace(n, std::vector<double>{}).second)
    {
      throw ParseError("csv: duplicate column '" + n + "'");
    }
  }
  int lineno = 1;
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != names.size())
    {
      throw ParseError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(names.size()) +
                       " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
      table[names[i]].push_back(parse_cell(cells[i], lineno));
    }
  }
  if (header)
  {
    *header = names;
  }
  return table;
}

}  // namespace pqflow::labcli
