#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "pqflow/errors.hpp"
#include "pqflow/labcli.hpp"

namespace pqflow::labcli
{

namespace
{

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
  {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class LineError
{
public:
  LineError(int line, std::string key) : line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string &what) const
  {
    std::ostringstream msg;
    msg << "line " << line_ << " (" << key_ << "): " << what;
    throw ParseError(msg.str());
  }

private:
  int line_;
  std::string key_;
};

// A decimal number, optionally followed by "pi" ("2pi", "0.5pi", "pi").
double parse_number(const std::string &text, const LineError &where)
{
  std::string body = text;
  double factor = 1.0;
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0)
  {
    factor = std::numbers::pi;
    body = trim(body.substr(0, body.size() - 2));
    if (body.empty())
    {
      return factor;
    }
    if (body.back() == '*')
    {
      body = trim(body.substr(0, body.size() - 1));
    }
  }
  double v = 0.0;
  const char *first = body.data(), *last = body.data() + body.size();
  if (!body.empty() && *first == '+')
  {
    ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
  {
    where.fail("expected a number, got '" + text + "'");
  }
  return v * factor;
}

int parse_int(const std::string &text, const LineError &where)
{
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
  {
    where.fail("expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string &text, const LineError &where)
{
  if (text == "true" || text == "1" || text == "yes")
  {
    return true;
  }
  if (text == "false" || text == "0" || text == "no")
  {
    return false;
  }
  where.fail("expected true or false, got '" + text + "'");
}

std::vector<FourierTerm> parse_terms(const std::string &text, const LineError &where)
{
  std::vector<FourierTerm> terms;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';'))
  {
    item = trim(item);
    if (item.empty())
    {
      continue;
    }
    std::istringstream words(item);
    std::string amp, kind, kx = "0", ky = "0";
    words >> amp >> kind;
    if (kind.empty())
    {
      where.fail("Fourier term needs 'amp kind [kx [ky]]', got '" + item + "'");
    }
    words >> kx >> ky;
    std::string extra;
    if (words >> extra)
    {
      where.fail("trailing text in Fourier term '" + item + "'");
    }
    FourierTerm t;
    t.amp = parse_number(amp, where);
    if (kind == "cos")
    {
      t.kind = FourierTerm::Cos;
    }
    else if (kind == "sin")
    {
      t.kind = FourierTerm::Sin;
    }
    else if (kind == "const")
    {
      t.kind = FourierTerm::Const;
    }
    else
    {
      where.fail("unknown Fourier kind '" + kind + "' (cos, sin or const)");
    }
    t.kx = parse_int(kx, where);
    t.ky = parse_int(ky, where);
    terms.push_back(t);
  }
  return terms;
}

Manifold parse_manifold(const std::string &text, const LineError &where)
{
  if (text == "conformal_torus")
  {
    return Manifold::ConformalTorus;
  }
  if (text == "general_torus")
  {
    return Manifold::GeneralTorus;
  }
  if (text == "circle")
  {
    return Manifold::Circle;
  }
  if (text == "einstein_analytic")
  {
    return Manifold::EinsteinAnalytic;
  }
  where.fail("unknown manifold '" + text + "'");
}

ScalarField evaluate_terms(const Grid &grid, const std::vector<FourierTerm> &terms)
{
  const double L1 = grid.length(0), L2 = grid.length(1);
  return ScalarField::from_function(grid, [&](double x, double y)
  {
    double v = 0.0;
    for (const auto &t : terms)
    {
      const double arg = 2.0 * std::numbers::pi * (t.kx * x / L1 + t.ky * y / L2);
      v += t.amp * (t.kind == FourierTerm::Cos ? std::cos(arg) : t.kind == FourierTerm::Sin ? std::sin(arg) : 1.0);
    }
    return v;
  });
}

void validate(Scenario &s, const std::set<std::string> &seen)
{
  const LineError top(0, s.name);
  auto forbid = [&](const char *key, const char *why)
  {
    if (seen.count(key))
    {
      top.fail(std::string(key) + " is not used " + why);
    }
  };

  try
  {
    s.flow.validate();
    s.eigen.validate();
  }
  catch (const ParameterError &e)
  {
    top.fail(e.what());
  }

  if (s.manifold == Manifold::EinsteinAnalytic)
  {
    for (const char *key : {"grid.n", "grid.L1", "grid.L2", "metric.u0", "metric.g11", "metric.g12",
                            "metric.g22", "phi", "flow.normalized"})
    {
      forbid(key, "by einstein_analytic");
    }
    if (s.einstein.m < 1 || s.einstein.samples < 2 || !(s.einstein.volume0 > 0.0))
    {
      top.fail("einstein.m >= 1, einstein.samples >= 2 and einstein.volume0 > 0 are required");
    }
    if (!seen.count("einstein.lambda0"))
    {
      // First eigenvalue of the round sphere with Ric = a g in the linear case.
      if (s.eigen.p == 2.0 && s.eigen.q == 2.0 && s.einstein.m >= 2)
      {
        s.einstein.lambda0 = s.einstein.a * s.einstein.m / (s.einstein.m - 1);
      }
      else
      {
        top.fail("einstein.lambda0 is required unless p = q = 2 and m >= 2");
      }
    }
    if (!(s.einstein.lambda0 > 0.0))
    {
      top.fail("einstein.lambda0 must be positive");
    }
    const double rate = -2.0 * s.einstein.a + 2.0 * s.flow.kappa;
    if (!(rate * s.flow.t_end + 1.0 > 0.0))
    {
      top.fail("homothety factor c(t) reaches zero before flow.t_end");
    }
    return;
  }

  if (s.n < 8)
  {
    top.fail("grid.n must be at least 8");
  }
  if (!(s.L1 > 0.0) || !(s.L2 > 0.0))
  {
    top.fail("grid lengths must be positive");
  }
  if (s.manifold == Manifold::GeneralTorus)
  {
    forbid("metric.u0", "by general_torus (use metric.g11, metric.g12, metric.g22)");
  }
  else
  {
    forbid("metric.g11", "by conformal metrics (use metric.u0)");
    forbid("metric.g12", "by conformal metrics (use metric.u0)");
    forbid("metric.g22", "by conformal metrics (use metric.u0)");
  }
  if (s.manifold == Manifold::Circle)
  {
    forbid("grid.L2", "on a circle");
    for (const auto *terms : {&s.u0, &s.phi})
    {
      for (const auto &t : *terms)
      {
        if (t.ky != 0)
        {
          top.fail("Fourier terms on a circle must have ky = 0");
        }
      }
    }
  }
  try
  {
    (void)initial_state(s);
  }
  catch (const StateError &e)
  {
    top.fail(std::string("initial metric: ") + e.what());
  }
}

}  // namespace

Scenario parse_scenario(const std::string &text, const std::string &name)
{
  Scenario s;
  s.name = name;
  s.L1 = s.L2 = 2.0 * std::numbers::pi;
  s.csv_path = name + ".csv";
  s.eigen_prefix = name + "_eigen";
  std::set<std::string> seen;
  bool b_given = false;

  const std::map<std::string, std::function<void(const std::string &, const LineError &)>> handlers = {
    {"manifold", [&](const std::string &v, const LineError &w) { s.manifold = parse_manifold(v, w); }},
    {"seed", [&](const std::string &v, const LineError &w) { s.seed = std::uint64_t(parse_int(v, w)); }},
    {"grid.n", [&](const std::string &v, const LineError &w) { s.n = parse_int(v, w); }},
    {"grid.L1", [&](const std::string &v, const LineError &w) { s.L1 = parse_number(v, w); }},
    {"grid.L2", [&](const std::string &v, const LineError &w) { s.L2 = parse_number(v, w); }},
    {"metric.u0", [&](const std::string &v, const LineError &w) { s.u0 = parse_terms(v, w); }},
    {"metric.g11", [&](const std::string &v, const LineError &w) { s.g11 = parse_terms(v, w); }},
    {"metric.g12", [&](const std::string &v, const LineError &w) { s.g12 = parse_terms(v, w); }},
    {"metric.g22", [&](const std::string &v, const LineError &w) { s.g22 = parse_terms(v, w); }},
    {"phi", [&](const std::string &v, const LineError &w) { s.phi = parse_terms(v, w); }},
    {"flow.kappa", [&](const std::string &v, const LineError &w) { s.flow.kappa = parse_number(v, w); }},
    {"flow.normalized", [&](const std::string &v, const LineError &w) { s.flow.normalized = parse_bool(v, w); }},
    {"flow.t_end", [&](const std::string &v, const LineError &w) { s.flow.t_end = parse_number(v, w); }},
    {"flow.dt_safety", [&](const std::string &v, const LineError &w) { s.flow.dt_safety = parse_number(v, w); }},
    {"flow.stepper", [&](const std::string &v, const LineError &w)
     {
       try
       {
         s.flow.stepper = geomflow::parse_stepper(v);
       }
       catch (const ParameterError &e)
       {
         w.fail(e.what());
       }
     }},
    {"flow.record_every", [&](const std::string &v, const LineError &w) { s.flow.record_every = parse_int(v, w); }},
    {"eigen.p", [&](const std::string &v, const LineError &w) { s.eigen.p = parse_number(v, w); }},
    {"eigen.q", [&](const std::string &v, const LineError &w) { s.eigen.q = parse_number(v, w); }},
    {"eigen.a", [&](const std::string &v, const LineError &w) { s.eigen.a = parse_number(v, w); }},
    {"eigen.b", [&](const std::string &v, const LineError &w)
     {
       s.eigen.b = parse_number(v, w);
       b_given = true;
     }},
    {"eigen.delta", [&](const std::string &v, const LineError &w) { s.eigen.delta = parse_number(v, w); }},
    {"eigen.tol_kkt", [&](const std::string &v, const LineError &w) { s.eigen.tol_kkt = parse_number(v, w); }},
    {"eigen.max_iters", [&](const std::string &v, const LineError &w) { s.eigen.max_iters = parse_int(v, w); }},
    {"eigen.init", [&](const std::string &v, const LineError &w)
     {
       try
       {
         s.eigen.init = pqeigen::parse_init_mode(v);
       }
       catch (const ParameterError &e)
       {
         w.fail(e.what());
       }
     }},
    {"einstein.a", [&](const std::string &v, const LineError &w) { s.einstein.a = parse_number(v, w); }},
    {"einstein.m", [&](const std::string &v, const LineError &w) { s.einstein.m = parse_int(v, w); }},
    {"einstein.lambda0", [&](const std::string &v, const LineError &w) { s.einstein.lambda0 = parse_number(v, w); }},
    {"einstein.volume0", [&](const std::string &v, const LineError &w) { s.einstein.volume0 = parse_number(v, w); }},
    {"einstein.samples", [&](const std::string &v, const LineError &w) { s.einstein.samples = parse_int(v, w); }},
    {"output.csv", [&](const std::string &v, const LineError &) { s.csv_path = v; }},
    {"output.eigen_prefix", [&](const std::string &v, const LineError &) { s.eigen_prefix = v; }},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
    {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty())
    {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
      LineError(lineno, line).fail("expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const LineError where(lineno, key);
    const auto it = handlers.find(key);
    if (it == handlers.end())
    {
      where.fail("unknown key");
    }
    if (!seen.insert(key).second)
    {
      where.fail("key given twice");
    }
    if (value.empty())
    {
      where.fail("missing value");
    }
    it->second(value, where);
  }

  // b follows from (p, q, a) unless given, in which case it must agree.
  if (!b_given)
  {
    const double p = s.eigen.p, q = s.eigen.q, a = s.eigen.a;
    if (p > 1.0 && q > 1.0)
    {
      try
      {
        const auto derived = pqeigen::EigenParams::from_pqa(p, q, a);
        s.eigen.b = derived.b;
      }
      catch (const ParameterError &e)
      {
        LineError(0, "eigen").fail(e.what());
      }
    }
  }
  s.eigen.seed = s.seed;
  validate(s, seen);
  return s;
}

Scenario load_scenario(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ParseError("cannot open scenario file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try
  {
    return parse_scenario(buf.str(), std::filesystem::path(path).stem().string());
  }
  catch (const ParseError &e)
  {
    throw ParseError(path + ": " + e.what());
  }
}

CoupledState initial_state(const Scenario &s)
{
  if (s.manifold == Manifold::EinsteinAnalytic)
  {
    throw StateError("einstein_analytic scenarios have no grid state");
  }
  const Grid grid = s.manifold == Manifold::Circle ? Grid::circle(s.n, s.L1) : Grid::torus(s.n, s.L1, s.L2);
  ScalarField phi = evaluate_terms(grid, s.phi);
  if (s.manifold != Manifold::GeneralTorus)
  {
    return {MetricField::conformal(evaluate_terms(grid, s.u0)), std::move(phi), 0.0};
  }
  const std::vector<FourierTerm> one{{1.0, FourierTerm::Const, 0, 0}};
  const auto g11 = evaluate_terms(grid, s.g11.empty() ? one : s.g11);
  const auto g12 = evaluate_terms(grid, s.g12);
  const auto g22 = evaluate_terms(grid, s.g22.empty() ? one : s.g22);
  std::vector<SymMat> g(grid.size());
  for (std::size_t k = 0; k < g.size(); ++k)
  {
    g[k] = {g11[k], g12[k], g22[k]};
  }
  return {MetricField(SymTensorField(grid, std::move(g))), std::move(phi), 0.0};
}

}  // namespace pqflow::labcli
