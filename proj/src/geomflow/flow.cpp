#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "pqflow/diffgeo.hpp"
#include "pqflow/errors.hpp"
#include "pqflow/geomflow.hpp"

namespace pqflow::geomflow
{

namespace
{

constexpr int kMaxHalvings = 10;

// state + dt * sum_i w_i rates_i
CoupledState combine(const CoupledState &state, double dt, std::initializer_list<std::pair<double, const Rates *>> terms)
{
  const Grid &grid = state.g.grid();
  std::vector<SymMat> g(state.g.tensor().values().begin(), state.g.tensor().values().end());
  std::vector<double> phi(state.phi.values().begin(), state.phi.values().end());
  for (const auto &[w, r] : terms)
  {
    for (std::size_t k = 0; k < g.size(); ++k)
    {
      g[k] = g[k] + r->metric[k] * (w * dt);
      phi[k] += w * dt * r->phi[k];
    }
  }
  return {MetricField(SymTensorField(grid, std::move(g))), ScalarField(grid, std::move(phi)),
          state.t + dt};
}

std::optional<CoupledState> try_step(const CoupledState &s, const FlowConfig &config, double dt)
{
  try
  {
    if (config.stepper == Stepper::Euler)
    {
      const Rates k1 = rhs(s, config);
      return combine(s, dt, {{1.0, &k1}});
    }
    const Rates k1 = rhs(s, config);
    const Rates k2 = rhs(combine(s, 0.5 * dt, {{1.0, &k1}}), config);
    const Rates k3 = rhs(combine(s, 0.5 * dt, {{1.0, &k2}}), config);
    const Rates k4 = rhs(combine(s, dt, {{1.0, &k3}}), config);
    return combine(s, dt, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
  }
  catch (const StateError &)
  {
    return std::nullopt;
  }
}

CoupledState advance(const CoupledState &s, const FlowConfig &config, double dt, int depth)
{
  if (auto next = try_step(s, config, dt))
  {
    return *std::move(next);
  }
  if (depth == kMaxHalvings)
  {
    std::ostringstream msg;
    msg << "flow step failed at t = " << s.t << " after " << kMaxHalvings
        << " step halvings (min det g = " << s.g.min_det() << ")";
    throw FlowError(msg.str(), s.t, s.g.min_det());
  }
  const CoupledState mid = advance(s, config, 0.5 * dt, depth + 1);
  return advance(mid, config, 0.5 * dt, depth + 1);
}

}  // namespace

Stepper parse_stepper(const std::string &name)
{
  if (name == "euler")
  {
    return Stepper::Euler;
  }
  if (name == "rk4")
  {
    return Stepper::RK4;
  }
  throw ParameterError("unknown stepper '" + name + "'");
}

std::string to_string(Stepper s) { return s == Stepper::Euler ? "euler" : "rk4"; }

void FlowConfig::validate() const
{
  if (!(kappa >= 0.0))
  {
    throw ParameterError("flow coupling kappa must be non-negative");
  }
  if (!(t_end > 0.0))
  {
    throw ParameterError("t_end must be positive");
  }
  if (!(dt_safety > 0.0 && dt_safety <= 1.0))
  {
    throw ParameterError("dt_safety must lie in (0, 1]");
  }
  if (record_every < 1)
  {
    throw ParameterError("record_every must be at least 1");
  }
}

Rates rhs_unnormalized(const CoupledState &state, double kappa)
{
  const Grid &grid = state.g.grid();
  const auto curv = diffgeo::ricci_and_scalar(state.g);
  const auto d = diffgeo::partials(state.phi);
  std::vector<SymMat> rate(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const SymMat dd = grid.dim() == 1 ? SymMat{d[0][k] * d[0][k], 0.0, 0.0}
                                      : SymMat{d[0][k] * d[0][k], d[0][k] * d[1][k], d[1][k] * d[1][k]};
    rate[k] = curv.ricci[k] * -2.0 + dd * (2.0 * kappa);
  }
  return {SymTensorField(grid, std::move(rate)), diffgeo::tension_field(state)};
}

double average_r(const CoupledState &state, double kappa)
{
  const auto ct = diffgeo::coupling_tensors(state, kappa);
  return diffgeo::integrate(ct.trace, state.g) / diffgeo::volume(state.g);
}

Rates rhs_normalized(const CoupledState &state, double kappa)
{
  Rates r = rhs_unnormalized(state, kappa);
  const double factor = 2.0 / state.g.grid().dim() * average_r(state, kappa);
  std::vector<SymMat> rate(r.metric.values().begin(), r.metric.values().end());
  for (std::size_t k = 0; k < rate.size(); ++k)
  {
    rate[k] = rate[k] + state.g[k] * factor;
  }
  return {SymTensorField(state.g.grid(), std::move(rate)), std::move(r.phi)};
}

Rates rhs(const CoupledState &state, const FlowConfig &config)
{
  return config.normalized ? rhs_normalized(state, config.kappa)
                           : rhs_unnormalized(state, config.kappa);
}

double stable_dt(const CoupledState &state, const FlowConfig &config)
{
  const Grid &grid = state.g.grid();
  const int m = grid.dim();
  double h = grid.spacing(0);
  if (m == 2)
  {
    h = std::min(h, grid.spacing(1));
  }
  double diffusion = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    const SymMat &inv = state.g.inverse(k);
    const double top = m == 1 ? inv.xx
                              : 0.5 * (inv.xx + inv.yy) +
                                  std::hypot(0.5 * (inv.xx - inv.yy), inv.xy);
    diffusion = std::max(diffusion, top);
  }
  return config.dt_safety * h * h / (2.0 * m * diffusion);
}

CoupledState step(const CoupledState &state, const FlowConfig &config, double dt)
{
  if (!(dt > 0.0) || !std::isfinite(dt))
  {
    throw ParameterError("time step must be positive");
  }
  return advance(state, config, dt, 0);
}

double s_min(const CoupledState &state, double kappa)
{
  return diffgeo::coupling_tensors(state, kappa).trace.min();
}

double comparison_bound_y(double t, double s_min0, int m)
{
  const double denom = 1.0 - 2.0 / m * s_min0 * t;
  if (!(denom > 0.0))
  {
    std::ostringstream msg;
    msg << "comparison bound undefined at t = " << t << " for S_min(0) = " << s_min0;
    throw DomainError(msg.str());
  }
  return s_min0 / denom;
}

int run(const CoupledState &initial, const FlowConfig &config,
        const std::function<void(const CoupledState &)> &record)
{
  config.validate();
  const double dt0 = stable_dt(initial, config);
  const double spacing = config.record_every * dt0;
  const int last = int(std::floor(config.t_end / spacing * (1.0 + 1e-12)));
  CoupledState state = initial;
  record(state);
  for (int i = 1; i <= last; ++i)
  {
    for (int s = 0; s < config.record_every; ++s)
    {
      state = step(state, config, dt0);
    }
    // Pin record times to the uniform lattice so traces are exactly spaced.
    state.t = initial.t + i * spacing;
    record(state);
  }
  return last + 1;
}

double EinsteinParams::effective_horizon() const
{
  return kappa < a ? std::min(horizon, 1.0 / (2.0 * (a - kappa))) : horizon;
}

double einstein_c(double t, const EinsteinParams &params)
{
  const double c = (-2.0 * params.a + 2.0 * params.kappa) * t + 1.0;
  if (t < 0.0 || !(c > 0.0))
  {
    std::ostringstream msg;
    msg << "homothety factor c(t) = " << c << " is not positive at t = " << t;
    throw DomainError(msg.str());
  }
  return c;
}

double einstein_S(double t, const EinsteinParams &params)
{
  return (params.a - params.kappa) * params.m / einstein_c(t, params);
}

double einstein_lambda_scaling(double lambda0, double t, const EinsteinParams &params)
{
  return lambda0 * std::pow(einstein_c(t, params), -params.degree / 2.0);
}

}  // namespace pqflow::geomflow
