#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "pqflow/errors.hpp"
#include "pqflow/labcli.hpp"

namespace pqflow::labcli
{

namespace
{

std::string sci(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 3);
  return std::string(buf, res.ptr);
}

void print_verdict(std::ostream &out, const monitor::Verdict &v)
{
  out << "  " << monitor::to_string(v.status) << "  " << v.name << "  margin=" << sci(v.margin);
  if (!v.location.empty())
  {
    out << "  " << v.location;
  }
  out << '\n';
}

int run_one(const std::string &path, std::ostream &out)
{
  try
  {
    const Scenario s = load_scenario(path);
    monitor::Trace trace;
    std::vector<monitor::Verdict> verdicts;
    if (s.manifold == Manifold::EinsteinAnalytic)
    {
      trace = einstein_trace(s);
      verdicts = einstein_verdicts(s, trace);
    }
    else
    {
      trace = monitor::record_flow(initial_state(s), s.flow, s.eigen);
      verdicts = monitor::evaluate(trace);
    }
    std::ofstream csv(s.csv_path, std::ios::binary);
    if (!csv)
    {
      out << path << ": cannot write '" << s.csv_path << "'\n";
      return kParseError;
    }
    write_csv(csv, trace.records);
    csv.close();

    out << s.name << ": " << trace.records.size() << " records -> " << s.csv_path << '\n';
    int code = kOk;
    for (const auto &v : verdicts)
    {
      print_verdict(out, v);
      if (v.status == monitor::Status::Fail)
      {
        code = kVerdictFailed;
      }
    }
    return code;
  }
  catch (const ParseError &e)
  {
    out << "parse error: " << e.what() << '\n';
    return kParseError;
  }
  catch (const ParameterError &e)
  {
    out << path << ": parameter error: " << e.what() << '\n';
    return kParseError;
  }
  catch (const FlowError &e)
  {
    out << path << ": flow failure at t=" << format_double(e.time) << " (min det g " << sci(e.min_det_g)
        << "): " << e.what() << '\n';
    return kFlowFailure;
  }
  catch (const SolverError &e)
  {
    out << path << ": eigensolver failure: " << e.what() << '\n';
    return kEigenFailure;
  }
  catch (const std::exception &e)
  {
    out << path << ": flow failure: " << e.what() << '\n';
    return kFlowFailure;
  }
}

void dump_field(const std::string &path, const ScalarField &f)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw ParseError("cannot write '" + path + "'");
  }
  const Grid &grid = f.grid();
  out << "i,j,x,y,value\n";
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    out << grid.i_of(k) << ',' << grid.j_of(k) << ',' << format_double(grid.x(k)) << ','
        << format_double(grid.y(k)) << ',' << format_double(f[k]) << '\n';
  }
}

// ---- built-in invariant suite ------------------------------------------

constexpr double kTwoPi = 2.0 * std::numbers::pi;

MetricField wobbly(const Grid &grid)
{
  std::vector<SymMat> g(grid.size());
  for (std::size_t k = 0; k < g.size(); ++k)
  {
    const double x = grid.x(k), y = grid.y(k);
    g[k] = {1.0 + 0.3 * std::cos(x) * std::sin(y), 0.2 * std::sin(x + y), 1.2 + 0.25 * std::sin(2 * x)};
  }
  return MetricField(SymTensorField(grid, std::move(g)));
}

CoupledState stock_state(int n)
{
  const auto grid = Grid::torus(n, kTwoPi, kTwoPi);
  auto u0 = ScalarField::from_function(grid, [](double x, double) { return 0.2 * std::cos(x); });
  return {MetricField::conformal(u0), ScalarField::constant(grid, 0.0), 0.0};
}

monitor::Verdict check_divergence()
{
  const auto grid = Grid::torus(32, kTwoPi, 3.0);
  const auto g = wobbly(grid);
  const double vol = diffgeo::volume(g);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> c(-1, 1);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 4; ++trial)
  {
    const double a1 = c(rng), a2 = c(rng), a3 = c(rng);
    const auto f = ScalarField::from_function(
      grid, [&](double x, double y) { return a1 * std::sin(x) + a2 * std::cos(2 * y) + a3 * std::sin(x + y); });
    for (double p : {1.5, 2.0, 3.0, 4.0})
    {
      const double total = diffgeo::integrate(diffgeo::p_laplacian(f, g, p, 1e-8), g);
      worst = std::min(worst, 1e-10 * f.max_abs() * vol - std::abs(total));
    }
  }
  return {"divergence_theorem", worst >= 0 ? monitor::Status::Pass : monitor::Status::Fail, worst,
          "4 fields x p in {1.5,2,3,4}"};
}

monitor::Verdict check_trace_identity()
{
  const auto grid = Grid::torus(32, kTwoPi, kTwoPi);
  const auto phi = ScalarField::from_function(grid, [](double x, double y) { return 0.5 * std::sin(x - 2 * y); });
  const CoupledState s{wobbly(grid), phi, 0.0};
  const auto ct = diffgeo::coupling_tensors(s, 0.7);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const SymMat &inv = s.g.inverse(k);
    const SymMat &S = ct.coupled[k];
    const double tr = inv.xx * S.xx + 2.0 * inv.xy * S.xy + inv.yy * S.yy;
    worst = std::min(worst, 1e-12 * (1.0 + std::abs(ct.trace[k])) - std::abs(tr - ct.trace[k]));
  }
  return {"trace_identity", worst >= 0 ? monitor::Status::Pass : monitor::Status::Fail, worst, ""};
}

monitor::Verdict check_scaling()
{
  const auto g = stock_state(16).g;
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (double p : {2.0, 4.0})
  {
    const auto params = pqeigen::EigenParams::from_pqa(p, p, p == 2.0 ? 0.0 : 1.0);
    const double base = pqeigen::first_eigenpair(g, params).lambda;
    for (double c : {0.5, 2.0})
    {
      const double scaled = pqeigen::first_eigenpair(g.times(c), params).lambda * std::pow(c, p / 2);
      const double margin = 5e-3 - std::abs(scaled / base - 1.0);
      if (margin < worst)
      {
        worst = margin;
        where = "p=" + format_double(p) + " c=" + format_double(c);
      }
    }
  }
  return {"scaling_law", worst >= 0 ? monitor::Status::Pass : monitor::Status::Fail, worst, where};
}

monitor::Verdict check_lemma()
{
  const auto g1 = stock_state(16).g;
  monitor::Verdict worst{"continuity_lemma", monitor::Status::Pass, std::numeric_limits<double>::infinity(), ""};
  for (double p : {2.0, 4.0})
  {
    const auto params = pqeigen::EigenParams::from_pqa(p, p, p == 2.0 ? 0.0 : 1.0);
    auto v = monitor::lemma_continuity_check(g1, g1.times(1.1), 0.1, params);
    if (v.margin < worst.margin)
    {
      worst.margin = v.margin;
      worst.status = v.status;
      worst.location = "p=" + format_double(p) + " " + v.location;
    }
  }
  return worst;
}

// With lambda = 0, p = q = 2 and a held field f, the variation formula is
// (1/2) d/dt int |grad f|^2 along the flow.
monitor::Verdict check_held_field()
{
  const auto grid = Grid::torus(32, kTwoPi, kTwoPi);
  const auto u0 = ScalarField::from_function(grid, [](double x, double y) { return 0.15 * std::cos(x) + 0.1 * std::sin(y); });
  const auto phi = ScalarField::from_function(grid, [](double x, double y) { return 0.4 * std::sin(x - y); });
  const CoupledState s{MetricField::conformal(u0), phi, 0.0};
  const auto f = ScalarField::from_function(grid, [](double x, double y) { return std::sin(x) * std::cos(y) + 0.3 * std::cos(2 * x); });
  const auto params = pqeigen::EigenParams::from_pqa(2, 2, 0);
  const pqeigen::EigenPair held{0.0, f, ScalarField::constant(grid, 0.0), 0.0, {}, 0, 0, true};
  geomflow::FlowConfig c;
  c.kappa = 0.6;
  const double predicted = 2.0 * monitor::variation_formula_G(s, held, c.kappa, params);
  const double dt = 0.1 * geomflow::stable_dt(s, c);
  auto energy = [&](const CoupledState &st)
  { return diffgeo::gradient_power_integral(diffgeo::FaceQuadrature(st.g), f.values(), 2.0); };
  const auto s1 = geomflow::step(s, c, dt);
  const auto s2 = geomflow::step(s1, c, dt);
  const double fd = (-3 * energy(s) + 4 * energy(s1) - energy(s2)) / (2 * dt);
  const double margin = 0.02 * std::abs(predicted) - std::abs(fd - predicted);
  return {"energy_derivative_identity", margin >= 0 ? monitor::Status::Pass : monitor::Status::Fail, margin,
          "predicted " + sci(predicted) + " fd " + sci(fd)};
}

// Geometry-only stock run: Ricci flow from the conformal torus.
std::pair<monitor::Verdict, monitor::Verdict> check_stock_run()
{
  const auto s0 = stock_state(32);
  geomflow::FlowConfig c;
  c.t_end = 0.5;
  c.record_every = 20;
  std::vector<monitor::TraceRecord> recs;
  geomflow::run(s0, c, [&](const CoupledState &s)
  {
    const auto ct = diffgeo::coupling_tensors(s, c.kappa);
    monitor::TraceRecord r;
    r.t = s.t;
    r.volume = diffgeo::volume(s.g);
    r.r = diffgeo::integrate(ct.trace, s.g) / r.volume;
    r.S_min = ct.trace.min();
    recs.push_back(r);
  });
  return {monitor::volume_rate_check(recs), monitor::comparison_bound_check(recs, geomflow::s_min(s0, 0.0), 2)};
}

monitor::Verdict check_curvature_order()
{
  double prev = 0.0, worst = std::numeric_limits<double>::infinity();
  for (int n : {16, 32, 64})
  {
    const auto grid = Grid::torus(n, kTwoPi, kTwoPi);
    auto u = [](double x, double y) { return 0.2 * std::cos(x) + 0.1 * std::sin(y); };
    const auto u0 = ScalarField::from_function(grid, u);
    const auto R = diffgeo::ricci_and_scalar(MetricField::conformal(u0)).scalar;
    double err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
      const double x = grid.x(k), y = grid.y(k);
      err = std::max(err, std::abs(R[k] - 2.0 * std::exp(-2.0 * u(x, y)) * u(x, y)));
    }
    if (prev > 0.0)
    {
      worst = std::min(worst, prev / err - 3.5);
    }
    prev = err;
  }
  return {"curvature_order", worst >= 0 ? monitor::Status::Pass : monitor::Status::Fail, worst, "n = 16, 32, 64"};
}

}  // namespace

unsigned worker_threads()
{
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("PQFLOW_THREADS"))
  {
    unsigned cap = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (ec == std::errc() && ptr == text.data() + text.size() && cap > 0)
    {
      n = std::min(n, cap);
    }
  }
  return n;
}

int cmd_run(const std::vector<std::string> &files, std::ostream &out, std::ostream &err)
{
  if (files.empty())
  {
    err << "run: no scenario files\n";
    return kParseError;
  }
  std::vector<std::ostringstream> logs(files.size());
  std::vector<int> codes(files.size(), kOk);
  std::atomic<std::size_t> next{0};
  {
    const unsigned workers = std::min<std::size_t>(worker_threads(), files.size());
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
    {
      pool.emplace_back([&]
      {
        for (std::size_t i = next++; i < files.size(); i = next++)
        {
          codes[i] = run_one(files[i], logs[i]);
        }
      });
    }
  }
  int code = kOk;
  for (std::size_t i = 0; i < files.size(); ++i)
  {
    (codes[i] == kOk || codes[i] == kVerdictFailed ? out : err) << logs[i].str();
    code = std::max(code, codes[i]);
  }
  return code;
}

int cmd_eigen(const std::string &file, std::ostream &out, std::ostream &err)
{
  try
  {
    const Scenario s = load_scenario(file);
    if (s.manifold == Manifold::EinsteinAnalytic)
    {
      err << file << ": einstein_analytic has no grid to solve on\n";
      return kParseError;
    }
    const auto state = initial_state(s);
    const auto pair = pqeigen::first_eigenpair(state.g, s.eigen);
    out << "lambda        " << format_double(pair.lambda) << '\n'
        << "kkt_residual  " << sci(pair.kkt_residual) << '\n'
        << "|B - 1|       " << sci(pair.constraints.normalization) << '\n'
        << "|C_u|         " << sci(pair.constraints.mean_u) << '\n'
        << "|C_v|         " << sci(pair.constraints.mean_v) << '\n'
        << "iterations    " << pair.iterations << '\n'
        << "restarts      " << pair.restarts << '\n'
        << "converged     " << (pair.converged ? "yes" : "no") << '\n';
    dump_field(s.eigen_prefix + "_u.csv", pair.u);
    dump_field(s.eigen_prefix + "_v.csv", pair.v);
    out << "fields        " << s.eigen_prefix << "_u.csv " << s.eigen_prefix << "_v.csv\n";
    return pair.converged ? kOk : kEigenFailure;
  }
  catch (const ParseError &e)
  {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  }
  catch (const ParameterError &e)
  {
    err << "parameter error: " << e.what() << '\n';
    return kParseError;
  }
  catch (const SolverError &e)
  {
    err << "eigensolver failure: " << e.what() << '\n';
    return kEigenFailure;
  }
}

int cmd_check(std::ostream &out)
{
  std::vector<monitor::Verdict> verdicts;
  verdicts.push_back(check_divergence());
  verdicts.push_back(check_trace_identity());
  verdicts.push_back(check_curvature_order());
  verdicts.push_back(check_scaling());
  verdicts.push_back(check_lemma());
  verdicts.push_back(check_held_field());
  const auto [rate, bound] = check_stock_run();
  verdicts.push_back(rate);
  verdicts.push_back(bound);
  int code = kOk;
  for (const auto &v : verdicts)
  {
    print_verdict(out, v);
    if (v.status != monitor::Status::Pass)
    {
      code = kVerdictFailed;
    }
  }
  return code;
}

int cmd_plot(const std::string &csv, const std::vector<std::string> &columns, const std::string &svg,
             std::ostream &err)
{
  std::ifstream in(csv, std::ios::binary);
  if (!in)
  {
    err << "plot: cannot open '" << csv << "'\n";
    return kParseError;
  }
  try
  {
    const Table table = read_csv(in);
    if (table.count("t") == 0 || table.at("t").empty())
    {
      err << "plot: empty trace '" << csv << "'\n";
      return kParseError;
    }
    if (columns.empty())
    {
      err << "plot: no columns selected\n";
      return kParseError;
    }
    const std::string text = render_svg(table, columns);
    std::ofstream out(svg, std::ios::binary);
    if (!out)
    {
      err << "plot: cannot write '" << svg << "'\n";
      return kParseError;
    }
    out << text;
    return kOk;
  }
  catch (const ParseError &e)
  {
    err << e.what() << '\n';
    return kParseError;
  }
}

}  // namespace pqflow::labcli
