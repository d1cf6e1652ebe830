#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pqflow/errors.hpp"
#include "pqflow/labcli.hpp"

namespace pqflow::labcli
{

namespace
{

constexpr double kWidth = 760, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 30, kBottom = 50;

const char *const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string fixed(double v, int digits = 2)
{
  char buf[64];
  if (std::abs(v) < 0.5 * std::pow(10.0, -digits))
  {
    v = 0.0;  // no "-0.00"
  }
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

std::string label(double v)
{
  char buf[64];
  if (std::abs(v) < 1e-300)
  {
    v = 0.0;
  }
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

std::string escape(const std::string &s)
{
  std::string out;
  for (char c : s)
  {
    switch (c)
    {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v)
  {
    if (std::isfinite(v))
    {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad()
  {
    if (!(lo <= hi))
    {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)))
    {
      const double d = 0.05 * std::max(std::abs(hi), 1e-6);
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::string render_svg(const Table &table, const std::vector<std::string> &columns)
{
  const auto tcol = table.find("t");
  if (tcol == table.end())
  {
    throw ParseError("plot: trace has no 't' column");
  }
  const auto &t = tcol->second;
  Range xr, yr;
  for (double v : t)
  {
    xr.add(v);
  }
  for (const auto &c : columns)
  {
    const auto it = table.find(c);
    if (it == table.end())
    {
      throw ParseError("plot: unknown column '" + c + "'");
    }
    for (double v : it->second)
    {
      yr.add(v);
    }
  }
  xr.pad();
  yr.pad();

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto X = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return kTop + (yr.hi - v) / (yr.hi - yr.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(pw) << "\" height=\""
      << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i)
  {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    const double px = X(xv), py = Y(yv);
    svg << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(kTop + ph) << "\" x2=\"" << fixed(px) << "\" y2=\""
        << fixed(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << label(xv) << "</text>\n";
    svg << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(kLeft)
        << "\" y2=\"" << fixed(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">"
        << label(yv) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 10)
      << "\" text-anchor=\"middle\">t</text>\n";

  for (std::size_t c = 0; c < columns.size(); ++c)
  {
    const auto &vals = table.at(columns[c]);
    const char *colour = kPalette[c % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(t.size(), vals.size()); ++i)
    {
      if (!std::isfinite(t[i]) || !std::isfinite(vals[i]))
      {
        continue;
      }
      svg << (first ? "" : " ") << fixed(X(t[i])) << ',' << fixed(Y(vals[i]));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = kTop + 12 + 18 * double(c);
    const double lx = kLeft + pw + 15;
    svg << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 24) << "\" y2=\""
        << fixed(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fixed(lx + 30) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(columns[c])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pqflow::labcli
