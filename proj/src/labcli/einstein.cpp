#include <algorithm>
#include <cmath>
#include <limits>

#include "pqflow/labcli.hpp"

namespace pqflow::labcli
{

namespace
{

geomflow::EinsteinParams family(const Scenario &s)
{
  geomflow::EinsteinParams ep;
  ep.a = s.einstein.a;
  ep.kappa = s.flow.kappa;
  ep.m = s.einstein.m;
  ep.p = s.eigen.p;
  ep.degree = s.eigen.a + s.eigen.b + 2.0;
  ep.horizon = s.flow.t_end;
  return ep;
}

}  // namespace

monitor::Trace einstein_trace(const Scenario &s)
{
  const auto ep = family(s);
  monitor::Trace trace;
  trace.m = ep.m;
  trace.kappa = ep.kappa;
  trace.k = s.eigen.k();
  trace.normalized = false;
  trace.s_min0 = geomflow::einstein_S(0.0, ep);
  trace.cond_min = std::numeric_limits<double>::infinity();
  // Pointwise data are constant in space, so the surface margins carry no
  // extra information here.
  trace.surface_ricci_margin = trace.surface_gradient_margin = std::numeric_limits<double>::quiet_NaN();

  const int N = s.einstein.samples;
  for (int i = 0; i <= N; ++i)
  {
    const double t = i * s.flow.t_end / N;
    const double c = geomflow::einstein_c(t, ep);
    monitor::TraceRecord rec;
    rec.t = t;
    rec.lambda = geomflow::einstein_lambda_scaling(s.einstein.lambda0, t, ep);
    rec.S_min = geomflow::einstein_S(t, ep);
    rec.volume = s.einstein.volume0 * std::pow(c, 0.5 * ep.m);
    rec.r = rec.S_min;
    // S_ij - (S/k) g_ij = (a - kappa)(1 - m/k) g0, measured against g = c g0.
    rec.cond_min = (ep.a - ep.kappa) * (1.0 - ep.m / trace.k) / c;
    rec.Q = monitor::monotone_quantity(rec.lambda, t, trace.s_min0, ep.m);
    // Each weight scales as c^{-1} against S_ij = (a - kappa) g0.
    rec.G_formula = (ep.a - ep.kappa) / c * ep.degree * rec.lambda;
    trace.cond_min = std::min(trace.cond_min, rec.cond_min);
    trace.records.push_back(rec);
  }
  monitor::fill_finite_differences(trace.records);
  return trace;
}

std::vector<monitor::Verdict> einstein_verdicts(const Scenario &s, const monitor::Trace &trace)
{
  auto out = monitor::evaluate(trace);
  const auto ep = family(s);

  // lambda c^{p/2} along the family.
  std::vector<monitor::TraceRecord> example = trace.records;
  for (auto &r : example)
  {
    r.Q = r.lambda * std::pow(geomflow::einstein_c(r.t, ep), 0.5 * s.eigen.p);
  }
  auto v = monitor::monotonicity_verdict(example, monitor::Monotone::Q,
                                         ep.kappa <= ep.a && s.eigen.p <= s.eigen.q);
  v.name = "example_quantity_nondecreasing";
  out.push_back(v);
  return out;
}

}  // namespace pqflow::labcli
