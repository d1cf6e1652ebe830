// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oracles/circle_oracle.hpp"
#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"
#include "pqflow/labcli.hpp"

using namespace pqflow;
namespace fs = std::filesystem;

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome
{
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char *title, const std::function<Outcome()> &body)
{
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try
  {
    o = body();
  }
  catch (const std::exception &e)
  {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const monitor::Verdict &find(const std::vector<monitor::Verdict> &vs, const std::string &name)
{
  for (const auto &v : vs)
  {
    if (v.name == name)
    {
      return v;
    }
  }
  throw std::runtime_error("no verdict " + name);
}

MetricField conformal_metric(int n, double amp)
{
  const auto grid = Grid::torus(n, kTwoPi, kTwoPi);
  return MetricField::conformal(
    ScalarField::from_function(grid, [&](double x, double) { return amp * std::cos(x); }));
}

labcli::Scenario scenario(const std::string &file)
{
  return labcli::load_scenario((fs::path(PQFLOW_SOURCE_DIR) / "scenarios" / file).string());
}

}  // namespace

int main()
{
  criterion(1, "linear eigenvalue on the flat torus", []
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = MetricField::flat(Grid::torus(64, kTwoPi, kTwoPi));
    const auto pair = pqeigen::first_eigenpair(g, pqeigen::EigenParams::from_pqa(2, 2, 0));
    const double secs = seconds_since(t0);
    const double err = std::abs(pair.lambda - 1.0);
    return Outcome{pair.converged && err <= 0.01 && secs < 30,
                   fmt("lambda=%.10f |err|=%.2e (tol 1e-2) time %.2fs (< 30s)", pair.lambda, err, secs)};
  });

  criterion(2, "p=q=4 circle against the brute-force oracle", []
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = MetricField::flat(Grid::circle(256, kTwoPi));
    const auto pair = pqeigen::first_eigenpair(g, pqeigen::EigenParams::from_pqa(4, 4, 1));
    const auto ref = oracle::circle_p_quotient(4096, kTwoPi, 4.0);
    const double secs = seconds_since(t0);
    const double rel = std::abs(pair.lambda / ref.quotient - 1.0);
    return Outcome{pair.converged && ref.converged && rel <= 0.01 && secs < 60,
                   fmt("lambda=%.8f oracle(4096)=%.8f rel=%.2e (tol 1e-2) time %.2fs (< 60s)", pair.lambda,
                       ref.quotient, rel, secs)};
  });

  criterion(3, "scaling law lambda(c g) c^{p/2}", []
  {
    const auto g = conformal_metric(32, 0.2);
    double worst = 0.0;
    bool converged = true;
    for (double p : {2.0, 4.0})
    {
      const auto params = pqeigen::EigenParams::from_pqa(p, p, p == 2.0 ? 0.0 : 1.0);
      const double base = pqeigen::first_eigenpair(g, params).lambda;
      for (double c : {0.5, 2.0})
      {
        const auto pair = pqeigen::first_eigenpair(g.times(c), params);
        converged = converged && pair.converged;
        worst = std::max(worst, std::abs(pair.lambda * std::pow(c, p / 2) / base - 1.0));
      }
    }
    return Outcome{converged && worst <= 5e-3, fmt("max relative spread %.2e over p in {2,4}, c in {0.5,1,2} (tol 5e-3)", worst)};
  });

  criterion(4, "Einstein example closed forms", []
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = scenario("einstein.cfg");
    const auto trace = labcli::einstein_trace(s);
    double err_c = 0.0, err_S = 0.0, spread_Q = 0.0;
    const double Q0 = trace.records.front().lambda;
    for (const auto &r : trace.records)
    {
      const double c = 1.0 - 2.0 * r.t;
      err_c = std::max(err_c, std::abs(r.volume - c));  // volume0 = 1, m = 2
      err_S = std::max(err_S, std::abs(r.S_min - 2.0 / c) / (2.0 / c));
      spread_Q = std::max(spread_Q, std::abs(r.lambda * c - Q0) / Q0);
    }
    const bool closed = err_c <= 1e-12 && err_S <= 1e-12 && spread_Q <= 1e-12;

    // kappa in (0, 1): the criterion asks for strict increase of lambda c^{p/2}.
    double largest_rise = -1.0;
    for (double kappa : {0.25, 0.5, 0.75})
    {
      auto sk = s;
      sk.flow.kappa = kappa;
      sk.flow.t_end = 0.9 / (2.0 * (sk.einstein.a - kappa));
      const auto tk = labcli::einstein_trace(sk);
      geomflow::EinsteinParams ep;
      ep.a = sk.einstein.a;
      ep.kappa = kappa;
      ep.m = sk.einstein.m;
      double min_rise = std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < tk.records.size(); ++i)
      {
        const auto &a = tk.records[i - 1], &b = tk.records[i];
        const double qa = a.lambda * geomflow::einstein_c(a.t, ep), qb = b.lambda * geomflow::einstein_c(b.t, ep);
        min_rise = std::min(min_rise, (qb - qa) / qa);
      }
      largest_rise = std::max(largest_rise, min_rise);
    }
    const bool strict = largest_rise > 1e-12;
    const double secs = seconds_since(t0);
    return Outcome{closed && strict && secs < 1.0,
                   fmt("c err %.1e, S rel err %.1e, Q spread %.1e (tol 1e-12); kappa in {0.25,0.5,0.75}: "
                       "smallest step rise of Q is %.1e, strict increase %s; time %.3fs",
                       err_c, err_S, spread_Q, largest_rise, strict ? "holds" : "does not hold", secs)};
  });

  // Criteria 5 and 7 share one run.
  monitor::Trace ricci;
  double ricci_secs = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = scenario("conformal_ricci.cfg");
    ricci = monitor::record_flow(labcli::initial_state(s), s.flow, s.eigen);
    ricci_secs = seconds_since(t0);
  }

  criterion(5, "variation formula on the conformal Ricci-flow run", [&]
  {
    const auto v = monitor::formula_vs_finite_difference(ricci.records, 0.05, false);
    const bool ok = v.status == monitor::Status::Pass && ricci.records.size() >= 20 && ricci_secs < 600;
    return Outcome{ok, fmt("%zu records, worst margin %.3e at %s, run %.1fs (< 600s)", ricci.records.size(), v.margin,
                           v.location.c_str(), ricci_secs)};
  });

  criterion(6, "normalized variant and volume drift", []
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = scenario("conformal_normalized.cfg");
    const auto trace = monitor::record_flow(labcli::initial_state(s), s.flow, s.eigen);
    const double secs = seconds_since(t0);
    const auto vs = monitor::evaluate(trace);
    const auto &f = find(vs, "variation_formula_normalized");
    const auto &d = find(vs, "volume_drift");
    const bool ok = f.status == monitor::Status::Pass && d.status == monitor::Status::Pass &&
                    trace.records.size() >= 20 && secs < 600;
    return Outcome{ok, fmt("%zu records, formula margin %.3e, volume drift %.2e (tol 1e-3), run %.1fs",
                           trace.records.size(), f.margin, 1e-3 - d.margin, secs)};
  });

  criterion(7, "curvature comparison bound on the run of criterion 5", [&]
  {
    const auto v = monitor::comparison_bound_check(ricci.records, ricci.s_min0, ricci.m, 1e-3);
    return Outcome{v.status == monitor::Status::Pass,
                   fmt("S_min(0)=%.6f, worst margin %.3e at %s", ricci.s_min0, v.margin, v.location.c_str())};
  });

  criterion(8, "lambda nondecreasing for a kappa=0 surface run with S_min(0) >= 0", []
  {
    // On a torus S_min(0) >= 0 forces a flat start; a constant anisotropic
    // metric keeps the eigenproblem nontrivial.
    const auto s = labcli::parse_scenario("manifold = general_torus\ngrid.n = 32\n"
                                          "metric.g11 = 1.3 const\nmetric.g12 = 0.3 const\nmetric.g22 = 0.8 const\n"
                                          "flow.t_end = 0.3\nflow.record_every = 20\n",
                                          "flat_start");
    const auto trace = monitor::record_flow(labcli::initial_state(s), s.flow, s.eigen);
    const auto &v = find(monitor::evaluate(trace), "lambda_nondecreasing");
    return Outcome{v.status == monitor::Status::Pass,
                   fmt("%zu records, S_min(0)=%.2e, cond_min=%.2e, margin %.3e (status %s)", trace.records.size(),
                       trace.s_min0, trace.cond_min, v.margin, monitor::to_string(v.status).c_str())};
  });

  criterion(9, "continuity lemma on scaled and perturbed metrics", []
  {
    const auto g1 = conformal_metric(32, 0.2);
    std::string detail;
    bool ok = true;
    for (double p : {2.0, 4.0})
    {
      const auto params = pqeigen::EigenParams::from_pqa(p, p, p == 2.0 ? 0.0 : 1.0);
      const auto v = monitor::lemma_continuity_check(g1, g1.times(1.1), 0.1, params);
      ok = ok && v.status == monitor::Status::Pass;
      detail += fmt("p=%g scaled margin %.3e; ", p, v.margin);
    }
    // e^{2w} g1 with |2w| below log(1.1).
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-1, 1);
    const double a1 = c(rng), a2 = c(rng), a3 = c(rng);
    const double bound = 0.5 * std::log(1.1) * 0.95 / (std::abs(a1) + std::abs(a2) + std::abs(a3));
    const auto &grid = g1.grid();
    std::vector<SymMat> g2(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
    {
      const double x = grid.x(k), y = grid.y(k);
      const double w = bound * (a1 * std::sin(x) + a2 * std::cos(y) + a3 * std::sin(x + 2 * y));
      g2[k] = g1[k] * std::exp(2 * w);
    }
    const auto v = monitor::lemma_continuity_check(g1, MetricField(SymTensorField(grid, std::move(g2))), 0.1,
                                                   pqeigen::EigenParams::from_pqa(4, 4, 1));
    ok = ok && v.status == monitor::Status::Pass;
    detail += fmt("random conformal p=4 margin %.3e", v.margin);
    return Outcome{ok, detail};
  });

  criterion(10, "divergence theorem, determinism, curvature order", []
  {
    // divergence theorem
    const auto grid = Grid::torus(32, kTwoPi, 3.0);
    std::vector<SymMat> gv(grid.size());
    for (std::size_t k = 0; k < gv.size(); ++k)
    {
      const double x = grid.x(k), y = grid.y(k);
      gv[k] = {1.0 + 0.3 * std::cos(x) * std::sin(y), 0.2 * std::sin(x + y), 1.2 + 0.25 * std::sin(2 * x)};
    }
    const MetricField g(SymTensorField(grid, std::move(gv)));
    const auto f = ScalarField::from_function(grid, [](double x, double y) { return std::sin(x) + 0.5 * std::cos(3 * x - 2 * y); });
    double div = 0.0;
    for (double p : {1.5, 2.0, 3.0, 4.0})
    {
      div = std::max(div, std::abs(diffgeo::integrate(diffgeo::p_laplacian(f, g, p, 1e-8), g)) /
                            (f.max_abs() * diffgeo::volume(g)));
    }

    // byte-identical CSV on rerun
    const auto dir = fs::temp_directory_path() / "pqflow_acceptance";
    fs::create_directories(dir);
    const auto cfg = dir / "det.cfg", csv = dir / "det.csv";
    std::ofstream(cfg) << "grid.n = 16\nmetric.u0 = 0.2 cos 1 0\nphi = 0.3 sin 0 1\nflow.kappa = 0.5\n"
                          "flow.t_end = 0.1\nflow.record_every = 10\neigen.p = 4\neigen.q = 4\neigen.a = 1\n"
                          "eigen.init = random\nseed = 9\noutput.csv = "
                       << csv.string() << "\n";
    auto read = [&]
    {
      std::ifstream in(csv, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    std::ostringstream sink;
    labcli::cmd_run({cfg.string()}, sink, sink);
    const std::string first = read();
    labcli::cmd_run({cfg.string()}, sink, sink);
    const bool same = !first.empty() && read() == first;

    // curvature order
    double prev = 0.0, ratio = std::numeric_limits<double>::infinity();
    for (int n : {16, 32, 64})
    {
      const auto gr = Grid::torus(n, kTwoPi, kTwoPi);
      auto u = [](double x, double y) { return 0.2 * std::cos(x) + 0.1 * std::sin(y); };
      const auto R = diffgeo::ricci_and_scalar(MetricField::conformal(ScalarField::from_function(gr, u))).scalar;
      double err = 0.0;
      for (std::size_t k = 0; k < gr.size(); ++k)
      {
        err = std::max(err, std::abs(R[k] - 2.0 * std::exp(-2.0 * u(gr.x(k), gr.y(k))) * u(gr.x(k), gr.y(k))));
      }
      if (prev > 0.0)
      {
        ratio = std::min(ratio, prev / err);
      }
      prev = err;
    }
    return Outcome{div <= 1e-10 && same && ratio >= 3.5,
                   fmt("divergence %.1e (tol 1e-10), CSV rerun %s, curvature error ratio %.2f (>= 3.5)", div,
                       same ? "identical" : "DIFFERS", ratio)};
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
