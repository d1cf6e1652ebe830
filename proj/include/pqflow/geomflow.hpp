#pragma once

#include <functional>
#include <string>

#include "pqflow/grid.hpp"
#include "pqflow/metric.hpp"

namespace pqflow::geomflow
{

enum class Stepper
{
  Euler,
  RK4
};

Stepper parse_stepper(const std::string &name);
std::string to_string(Stepper s);

struct FlowConfig
{
  double kappa = 0.0;  // coupling constant of the harmonic-map term
  bool normalized = false;
  double t_end = 0.1;
  double dt_safety = 0.25;
  Stepper stepper = Stepper::RK4;
  int record_every = 1;  // steps of size dt0 between records

  // Throws ParameterError on kappa < 0, t_end <= 0, dt_safety outside (0, 1]
  // or record_every < 1.
  void validate() const;
};

struct Rates
{
  SymTensorField metric;
  ScalarField phi;
};

// (-2 Ric + 2 kappa dphi (x) dphi, Delta_g phi).
Rates rhs_unnormalized(const CoupledState &state, double kappa);
// Volume average of S = R - kappa |grad phi|^2.
double average_r(const CoupledState &state, double kappa);
// rhs_unnormalized plus (2/m) r g in the metric rate.
Rates rhs_normalized(const CoupledState &state, double kappa);
Rates rhs(const CoupledState &state, const FlowConfig &config);

// dt_safety * h_min^2 / (2 m max_k lambda_max(g^{-1}_k)).
double stable_dt(const CoupledState &state, const FlowConfig &config);

// Advances by dt with the configured stepper. When a stage produces a
// non-finite value or a metric that is not positive definite the interval is
// split in half and retried, at most 10 levels deep; beyond that FlowError.
CoupledState step(const CoupledState &state, const FlowConfig &config, double dt);

double s_min(const CoupledState &state, double kappa);

// S_min(0) / (1 - (2/m) S_min(0) t). DomainError past the blow-up time.
double comparison_bound_y(double t, double s_min0, int m);

// Drives a flow from `initial` with fixed step dt0 = stable_dt(initial) and
// calls `record` at t = i * record_every * dt0 for i = 0, 1, ... while
// t <= t_end. Returns the number of records.
int run(const CoupledState &initial, const FlowConfig &config,
        const std::function<void(const CoupledState &)> &record);

// Homothetic Einstein family g(t) = c(t) g0 for Ric(g0) = a g0, with the
// identity map as coupling map so that kappa |grad phi|^2_{g(t)} = kappa m / c.
struct EinsteinParams
{
  double a = 1.0;      // Einstein constant
  double kappa = 0.0;  // flow coupling
  int m = 2;
  double p = 2.0;
  // Homogeneity degree a_w + b_w + 2 of the eigen-system weight; equals p
  // when p = q.
  double degree = 2.0;
  double horizon = 1.0;

  // min(horizon, 1 / (2 (a - kappa))) when kappa < a, else horizon.
  double effective_horizon() const;
};

double einstein_c(double t, const EinsteinParams &params);
double einstein_S(double t, const EinsteinParams &params);
// Exact eigenvalue along the family: lambda0 c(t)^{-degree/2}.
double einstein_lambda_scaling(double lambda0, double t, const EinsteinParams &params);

}  // namespace pqflow::geomflow
