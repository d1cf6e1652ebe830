#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"
#include "pqflow/monitor.hpp"

namespace pqflow::monitor
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double abs_pow(double x, double a)
{
  if (a == 0.0)
  {
    return 1.0;
  }
  return a == 1.0 ? std::abs(x) : std::pow(std::abs(x), a);
}

std::string at_time(double t)
{
  std::ostringstream s;
  s << "t=" << t;
  return s.str();
}

std::string at_node(const Grid &grid, std::size_t k)
{
  std::ostringstream s;
  s << "node (" << grid.i_of(k) << "," << grid.j_of(k) << ")";
  return s.str();
}

SymMat outer(const double d[2], int dim)
{
  return dim == 1 ? SymMat{d[0] * d[0], 0.0, 0.0} : SymMat{d[0] * d[0], d[0] * d[1], d[1] * d[1]};
}

double trace_with(const SymMat &inv, const SymMat &T, int dim)
{
  return dim == 1 ? inv.xx * T.xx : inv.xx * T.xx + 2.0 * inv.xy * T.xy + inv.yy * T.yy;
}

// Derivative at t[at] of the parabola through three points.
double lagrange_derivative(const double t[3], const double f[3], int at)
{
  const double x = t[at];
  return f[0] * ((x - t[1]) + (x - t[2])) / ((t[0] - t[1]) * (t[0] - t[2])) +
         f[1] * ((x - t[0]) + (x - t[2])) / ((t[1] - t[0]) * (t[1] - t[2])) +
         f[2] * ((x - t[0]) + (x - t[1])) / ((t[2] - t[0]) * (t[2] - t[1]));
}

Verdict pass_fail(std::string name, double margin, std::string location)
{
  return {std::move(name), margin >= 0.0 ? Status::Pass : Status::Fail, margin, std::move(location)};
}

}  // namespace

std::string to_string(Status s)
{
  switch (s)
  {
    case Status::Pass:
      return "PASS";
    case Status::Fail:
      return "FAIL";
    case Status::Info:
      return "INFO";
  }
  return "?";
}

double condition_tensor_min(const CoupledState &state, double kappa, double k)
{
  if (!(k > 0.0))
  {
    throw ParameterError("condition tensor needs k > 0");
  }
  const auto ct = diffgeo::coupling_tensors(state, kappa);
  const int dim = state.g.grid().dim();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < ct.trace.size(); ++n)
  {
    const SymMat T = ct.coupled[n] - state.g[n] * (ct.trace[n] / k);
    worst = std::min(worst, diffgeo::min_generalized_eigenvalue(T, state.g[n], dim));
  }
  return worst;
}

double variation_formula_G(const CoupledState &state, const pqeigen::EigenPair &pair, double kappa,
                           const pqeigen::EigenParams &params)
{
  return variation_formula_G(state.g, diffgeo::coupling_tensors(state, kappa), pair, params);
}

double variation_formula_G(const MetricField &g, const diffgeo::CouplingTensors &ct,
                           const pqeigen::EigenPair &pair, const pqeigen::EigenParams &params)
{
  require_same_grid(g.grid(), pair.u.grid(), "variation_formula_G");
  require_same_grid(g.grid(), ct.trace.grid(), "variation_formula_G");
  const Grid &grid = g.grid();
  const int dim = grid.dim();
  const diffgeo::FaceQuadrature fq(g);
  const auto W = fq.node_weight();

  double weighted = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n)
  {
    const double u = pair.u[n], v = pair.v[n];
    weighted += W[n] * ct.trace[n] * abs_pow(u, params.a) * abs_pow(v, params.b) * u * v;
  }
  double G = pair.lambda * weighted;

  struct Component
  {
    std::span<const double> f;
    double p, coef;
  };
  const Component comps[2] = {{pair.u.values(), params.p, params.a + 1.0},
                              {pair.v.values(), params.q, params.b + 1.0}};
  for (int axis = 0; axis < dim; ++axis)
  {
    for (std::size_t n = 0; n < grid.size(); ++n)
    {
      const SymMat Sf = (ct.coupled[n] + ct.coupled[fq.neighbor(axis, n)]) * 0.5;
      const SymMat &inv = fq.inverse(axis, n);
      const double wf = fq.weight(axis, n);
      const double S_face = trace_with(inv, Sf, dim);
      for (const auto &c : comps)
      {
        double Gr[2];
        fq.face_gradient(c.f, axis, n, Gr);
        const double s = sym_contract(inv, Gr, Gr, dim);
        if (!(s > 0.0))
        {
          continue;
        }
        const double sharp[2] = {inv.xx * Gr[0] + inv.xy * Gr[1], inv.xy * Gr[0] + inv.yy * Gr[1]};
        const double quad = sym_contract(Sf, sharp, sharp, dim);
        G += c.coef * wf * diffgeo::pow_half(s, c.p - 2.0) * quad -
             c.coef / c.p * wf * diffgeo::pow_half(s, c.p) * S_face;
      }
    }
  }
  return G;
}

double variation_formula_G_normalized(const CoupledState &state, const pqeigen::EigenPair &pair,
                                      double kappa, const pqeigen::EigenParams &params)
{
  const diffgeo::FaceQuadrature fq(state.g);
  const double P = diffgeo::gradient_power_integral(fq, pair.u.values(), params.p);
  const double Q = diffgeo::gradient_power_integral(fq, pair.v.values(), params.q);
  const double r = geomflow::average_r(state, kappa);
  const int m = state.g.grid().dim();
  return variation_formula_G(state, pair, kappa, params) - (params.a + 1.0) / m * r * P -
         (params.b + 1.0) / m * r * Q;
}

double monotone_quantity(double lambda, double t, double s_min0, int m)
{
  const double base = std::max(0.0, 1.0 - 2.0 / m * s_min0 * t);
  return lambda * std::pow(base, m / 2.0);
}

Trace record_flow(const CoupledState &initial, const geomflow::FlowConfig &flow,
                  const pqeigen::EigenParams &eigen)
{
  Trace trace;
  trace.m = initial.g.grid().dim();
  trace.kappa = flow.kappa;
  trace.k = eigen.k();
  trace.normalized = flow.normalized;
  trace.s_min0 = geomflow::s_min(initial, flow.kappa);
  trace.cond_min = std::numeric_limits<double>::infinity();
  trace.surface_ricci_margin = std::numeric_limits<double>::infinity();
  trace.surface_gradient_margin = std::numeric_limits<double>::infinity();

  std::optional<pqeigen::WarmStart> warm;
  geomflow::run(initial, flow, [&](const CoupledState &s)
  {
    const auto pair = pqeigen::first_eigenpair(s.g, eigen, warm);
    TraceRecord rec;
    rec.t = s.t;
    rec.lambda = pair.lambda;
    rec.degraded = !pair.converged;
    rec.eig_iters = pair.iterations;
    rec.eig_residual = pair.kkt_residual;
    if (pair.converged)
    {
      warm = pqeigen::WarmStart{pair.u, pair.v};
    }
    const auto ct = diffgeo::coupling_tensors(s, flow.kappa);
    rec.S_min = ct.trace.min();
    rec.volume = diffgeo::volume(s.g);
    rec.r = diffgeo::integrate(ct.trace, s.g) / rec.volume;
    rec.cond_min = condition_tensor_min(s, flow.kappa, trace.k);
    rec.Q = monotone_quantity(rec.lambda, s.t - initial.t, trace.s_min0, trace.m);
    rec.G_formula = flow.normalized ? variation_formula_G_normalized(s, pair, flow.kappa, eigen)
                                    : variation_formula_G(s, pair, flow.kappa, eigen);
    trace.cond_min = std::min(trace.cond_min, rec.cond_min);
    const auto [ric, grad] = surface_hypothesis_checks(s, flow.kappa, trace.k);
    trace.surface_ricci_margin = std::min(trace.surface_ricci_margin, ric.margin);
    trace.surface_gradient_margin = std::min(trace.surface_gradient_margin, grad.margin);
    trace.records.push_back(rec);
  });
  if (trace.m != 2)
  {
    trace.surface_ricci_margin = trace.surface_gradient_margin = kNaN;
  }
  else if (!(trace.k > 2.0))
  {
    trace.surface_ricci_margin = kNaN;
  }
  fill_finite_differences(trace.records);
  return trace;
}

void fill_finite_differences(std::vector<TraceRecord> &records)
{
  const std::size_t n = records.size();
  for (auto &r : records)
  {
    r.dlambda_fd = 0.0;
    r.fd_valid = false;
  }
  if (n < 2)
  {
    return;
  }
  if (n == 2)
  {
    const double d = (records[1].lambda - records[0].lambda) / (records[1].t - records[0].t);
    for (auto &r : records)
    {
      r.dlambda_fd = d;
      r.fd_valid = !records[0].degraded && !records[1].degraded;
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i)
  {
    const std::size_t first = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
    double t[3], f[3];
    bool ok = true;
    for (int j = 0; j < 3; ++j)
    {
      t[j] = records[first + j].t;
      f[j] = records[first + j].lambda;
      ok = ok && !records[first + j].degraded;
    }
    records[i].dlambda_fd = lagrange_derivative(t, f, int(i - first));
    records[i].fd_valid = ok;
  }
}

Verdict trace_integrity(std::span<const TraceRecord> records)
{
  if (records.empty())
  {
    return {"trace_integrity", Status::Fail, -1.0, "empty trace"};
  }
  double margin = std::numeric_limits<double>::infinity();
  std::string where = "all records";
  int degraded = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
  {
    const auto &r = records[i];
    const double vals[] = {r.t, r.lambda, r.S_min, r.volume, r.r, r.cond_min,
                           r.Q, r.G_formula, r.dlambda_fd, r.eig_residual};
    for (double v : vals)
    {
      if (!std::isfinite(v))
      {
        return {"trace_integrity", Status::Fail, -1.0, at_time(r.t) + " non-finite value"};
      }
    }
    if (i > 0 && records[i].t - records[i - 1].t < margin)
    {
      margin = records[i].t - records[i - 1].t;
      where = at_time(r.t);
    }
    degraded += r.degraded ? 1 : 0;
  }
  if (records.size() == 1)
  {
    margin = 0.0;
  }
  if (degraded > 0)
  {
    where += "; degraded records: " + std::to_string(degraded);
  }
  return pass_fail("trace_integrity", margin > 0.0 || records.size() == 1 ? margin : -1.0, where);
}

Verdict formula_vs_finite_difference(std::span<const TraceRecord> records, double tol, bool normalized)
{
  const std::string name = normalized ? "variation_formula_normalized" : "variation_formula";
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  int used = 0;
  for (std::size_t i = 1; i + 1 < records.size(); ++i)
  {
    const auto &r = records[i];
    if (r.degraded || !r.fd_valid)
    {
      continue;
    }
    ++used;
    const double allow = tol * (std::abs(r.dlambda_fd) + 0.01 * r.lambda);
    const double margin = allow - std::abs(r.G_formula - r.dlambda_fd);
    if (margin < worst)
    {
      worst = margin;
      where = at_time(r.t);
    }
  }
  if (used == 0)
  {
    return {name, Status::Info, 0.0, "no interior records"};
  }
  return pass_fail(name, worst, where);
}

Verdict integrated_lower_bound_check(std::span<const TraceRecord> records, double tol)
{
  std::vector<const TraceRecord *> ok;
  for (const auto &r : records)
  {
    if (!r.degraded)
    {
      ok.push_back(&r);
    }
  }
  if (ok.size() < 2)
  {
    return {"integrated_lower_bound", Status::Info, 0.0, "fewer than two records"};
  }
  std::vector<double> integral(ok.size(), 0.0);
  for (std::size_t i = 1; i < ok.size(); ++i)
  {
    integral[i] = integral[i - 1] + 0.5 * (ok[i]->t - ok[i - 1]->t) * (ok[i]->G_formula + ok[i - 1]->G_formula);
  }
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (std::size_t i = 0; i < ok.size(); ++i)
  {
    for (std::size_t j = i + 1; j < ok.size(); ++j)
    {
      const double slack = tol * (1.0 + std::max(std::abs(ok[i]->lambda), std::abs(ok[j]->lambda)));
      const double margin = ok[j]->lambda - ok[i]->lambda - (integral[j] - integral[i]) + slack;
      if (margin < worst)
      {
        worst = margin;
        where = at_time(ok[i]->t) + ".." + at_time(ok[j]->t).substr(2);
      }
    }
  }
  return pass_fail("integrated_lower_bound", worst, where);
}

Verdict comparison_bound_check(std::span<const TraceRecord> records, double s_min0, int m, double tol)
{
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  const double t0 = records.empty() ? 0.0 : records.front().t;
  for (const auto &r : records)
  {
    const double t = r.t - t0;
    if (!(1.0 - 2.0 / m * s_min0 * t > 0.0))
    {
      break;
    }
    const double y = geomflow::comparison_bound_y(t, s_min0, m);
    const double margin = r.S_min - y + tol * (1.0 + std::abs(y));
    if (margin < worst)
    {
      worst = margin;
      where = at_time(r.t);
    }
  }
  if (where.empty())
  {
    return {"comparison_bound", Status::Info, 0.0, "no records before blow-up time"};
  }
  return pass_fail("comparison_bound", worst, where);
}

Verdict volume_drift_check(std::span<const TraceRecord> records, double tol)
{
  if (records.empty())
  {
    return {"volume_drift", Status::Info, 0.0, "empty trace"};
  }
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  const double v0 = records.front().volume;
  for (const auto &r : records)
  {
    const double margin = tol - std::abs(r.volume - v0) / v0;
    if (margin < worst)
    {
      worst = margin;
      where = at_time(r.t);
    }
  }
  return pass_fail("volume_drift", worst, where);
}

Verdict volume_rate_check(std::span<const TraceRecord> records, double tol)
{
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (std::size_t i = 1; i + 1 < records.size(); ++i)
  {
    const double fd = (records[i + 1].volume - records[i - 1].volume) / (records[i + 1].t - records[i - 1].t);
    const double predicted = -records[i].r * records[i].volume;
    const double margin = tol * std::max(std::abs(fd), std::abs(predicted)) - std::abs(fd - predicted);
    if (margin < worst)
    {
      worst = margin;
      where = at_time(records[i].t);
    }
  }
  if (where.empty())
  {
    return {"volume_rate", Status::Info, 0.0, "fewer than three records"};
  }
  return pass_fail("volume_rate", worst, where);
}

Verdict monotonicity_verdict(std::span<const TraceRecord> records, Monotone which, bool hypotheses_met,
                             double tol)
{
  const std::string name = which == Monotone::Lambda ? "lambda_nondecreasing" : "Q_nondecreasing";
  double top = 0.0;
  for (const auto &r : records)
  {
    if (!r.degraded)
    {
      top = std::max(top, std::abs(which == Monotone::Lambda ? r.lambda : r.Q));
    }
  }
  const double slack = tol * (1.0 + top);
  double running = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  std::string where = "all records";
  for (const auto &r : records)
  {
    if (r.degraded)
    {
      continue;
    }
    const double v = which == Monotone::Lambda ? r.lambda : r.Q;
    if (running > -std::numeric_limits<double>::infinity())
    {
      const double margin = v - running + slack;
      if (margin < worst)
      {
        worst = margin;
        where = at_time(r.t);
      }
    }
    running = std::max(running, v);
  }
  if (worst == std::numeric_limits<double>::infinity())
  {
    worst = slack;
  }
  if (!hypotheses_met)
  {
    return {name, Status::Info, worst, "hypothesis not met; " + where};
  }
  return pass_fail(name, worst, where);
}

std::vector<Verdict> evaluate(const Trace &trace, const Tolerances &tol)
{
  std::vector<Verdict> out;
  const auto &recs = trace.records;
  out.push_back(trace_integrity(recs));
  out.push_back(formula_vs_finite_difference(recs, tol.formula, trace.normalized));
  out.push_back(integrated_lower_bound_check(recs, tol.integral));
  if (trace.normalized)
  {
    out.push_back(volume_drift_check(recs, tol.volume));
  }
  else
  {
    out.push_back(comparison_bound_check(recs, trace.s_min0, trace.m, tol.curvature));
  }

  // Positivity of S - (S/k) g along the run, or one of the two surface
  // hypotheses, which imply it.
  const bool condition = trace.cond_min >= -tol.condition ||
                         trace.surface_ricci_margin >= -tol.condition ||
                         trace.surface_gradient_margin >= -tol.condition;
  auto lambda_v = monotonicity_verdict(recs, Monotone::Lambda,
                                       !trace.normalized && condition && trace.s_min0 >= 0.0, tol.mono);
  out.push_back(lambda_v);

  // Q is asserted only before (2/m) S_min(0) t reaches 1.
  std::vector<TraceRecord> before;
  for (const auto &r : recs)
  {
    if (1.0 - 2.0 / trace.m * trace.s_min0 * (r.t - recs.front().t) > 0.0)
    {
      before.push_back(r);
    }
  }
  out.push_back(monotonicity_verdict(before, Monotone::Q,
                                     !trace.normalized && condition && trace.s_min0 > 0.0, tol.mono));

  auto info = [](std::string name, double margin)
  {
    std::string where = std::isnan(margin) ? "not applicable" : (margin >= 0.0 ? "holds" : "violated");
    return Verdict{std::move(name), Status::Info, margin, where};
  };
  out.push_back(info("condition_tensor", trace.cond_min));
  out.push_back(info("surface_ricci_hypothesis", trace.surface_ricci_margin));
  out.push_back(info("surface_gradient_hypothesis", trace.surface_gradient_margin));
  return out;
}

Verdict lemma_continuity_check(const MetricField &g1, const MetricField &g2, double eps,
                               const pqeigen::EigenParams &params)
{
  require_same_grid(g1.grid(), g2.grid(), "lemma_continuity_check");
  if (!(eps > 0.0))
  {
    throw ParameterError("pinching constant must be positive");
  }
  const Grid &grid = g1.grid();
  const int m = grid.dim();
  const double lo = 1.0 / (1.0 + eps) * (1.0 - 1e-12), hi = (1.0 + eps) * (1.0 + 1e-12);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_node = 0;
  for (std::size_t n = 0; n < grid.size(); ++n)
  {
    const auto mu = diffgeo::generalized_eigenvalues(g2[n], g1[n], m);
    const double margin = std::min(mu[0] - lo, hi - mu[1]);
    if (margin < worst)
    {
      worst = margin;
      worst_node = n;
    }
  }
  if (worst < 0.0)
  {
    std::ostringstream msg;
    msg << "metrics are not (1+" << eps << ")-pinched; worst at " << at_node(grid, worst_node)
        << " (margin " << worst << ")";
    throw ParameterError(msg.str());
  }

  const auto p1 = pqeigen::first_eigenpair(g1, params);
  const auto p2 = pqeigen::first_eigenpair(g2, params);
  if (!p1.converged || !p2.converged)
  {
    throw SolverError("eigensolve for the continuity check did not converge");
  }
  const double p = std::max(params.p, params.q);
  const double factor = std::pow(1.0 + eps, (p + m) / 2.0) - std::pow(1.0 + eps, -m / 2.0);
  const double slack = 10.0 * params.tol_kkt * std::max(1.0, p1.lambda);
  const double margin = factor * p1.lambda - (p2.lambda - p1.lambda) + slack;
  std::ostringstream where;
  where << "lambda1=" << p1.lambda << " lambda2=" << p2.lambda;
  return pass_fail("lemma_continuity", margin, where.str());
}

std::pair<Verdict, Verdict> surface_hypothesis_checks(const CoupledState &state, double kappa, double k)
{
  const Grid &grid = state.g.grid();
  const int dim = grid.dim();
  const auto d = diffgeo::partials(state.phi);
  Verdict ric{"surface_ricci_hypothesis", Status::Info, kNaN, "not applicable"};
  Verdict grad{"surface_gradient_hypothesis", Status::Info, kNaN, "not applicable"};
  if (dim != 2)
  {
    return {ric, grad};
  }

  const auto curv = diffgeo::ricci_and_scalar(state.g);
  const bool ric_applies = k > 2.0;
  const double e = ric_applies ? 2.0 * kappa * (k - 1.0) / (k - 2.0) : 0.0;
  double ric_worst = std::numeric_limits<double>::infinity();
  double grad_worst = std::numeric_limits<double>::infinity();
  std::size_t ric_node = 0, grad_node = 0;
  for (std::size_t n = 0; n < grid.size(); ++n)
  {
    const double dn[2] = {d[0][n], d[1][n]};
    const SymMat dd = outer(dn, dim);
    if (ric_applies)
    {
      const double mu = diffgeo::min_generalized_eigenvalue(curv.ricci[n] - dd * e, state.g[n], dim);
      if (mu < ric_worst)
      {
        ric_worst = mu;
        ric_node = n;
      }
    }
    const double norm2 = sym_contract(state.g.inverse(n), dn, dn, dim);
    const double mu = diffgeo::min_generalized_eigenvalue(state.g[n] * norm2 - dd * k, state.g[n], dim);
    if (mu < grad_worst)
    {
      grad_worst = mu;
      grad_node = n;
    }
  }
  if (ric_applies)
  {
    ric.margin = ric_worst;
    ric.location = (ric_worst >= 0.0 ? "holds; min at " : "violated at ") + at_node(grid, ric_node);
  }
  grad.margin = grad_worst;
  grad.location = (grad_worst >= 0.0 ? "holds; min at " : "violated at ") + at_node(grid, grad_node);
  return {ric, grad};
}

}  // namespace pqflow::monitor
