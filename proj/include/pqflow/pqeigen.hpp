#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "pqflow/grid.hpp"
#include "pqflow/metric.hpp"

namespace pqflow::pqeigen
{

enum class InitMode
{
  LowestModes,  // sum of the lowest sine/cosine modes along each axis
  Sine,         // sin(2 pi x / L1)
  Random        // seeded smooth random field
};

InitMode parse_init_mode(const std::string &name);
std::string to_string(InitMode mode);

// Exponents of the coupled system
//   Delta_p u = -lambda |u|^a |v|^b v,   Delta_q v = -lambda |u|^a |v|^b u
// tied by (a+1)/p + (b+1)/q = 1, plus solver controls.
struct EigenParams
{
  double p = 2.0;
  double q = 2.0;
  double a = 0.0;
  double b = 0.0;
  double delta = 1e-8;
  double tol_kkt = 1e-6;
  int max_iters = 50000;
  InitMode init = InitMode::LowestModes;
  std::uint64_t seed = 0;

  // Derives b = q (1 - (a+1)/p) - 1; throws ParameterError when b < 0.
  static EigenParams from_pqa(double p, double q, double a);
  // Throws ParameterError unless p, q > 1, a, b >= 0 and the exponent
  // relation holds to 1e-12.
  void validate() const;
  double k() const { return p < q ? p : q; }
};

struct ConstraintResiduals
{
  double normalization = 0.0;  // |B - 1|
  double mean_u = 0.0;         // |C_u|
  double mean_v = 0.0;         // |C_v|
};

struct EigenPair
{
  double lambda;
  ScalarField u;
  ScalarField v;
  double kkt_residual;
  ConstraintResiduals constraints;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
};

// ((a+1)/p) int |grad u|^p + ((b+1)/q) int |grad v|^q.
double functional_A(const ScalarField &u, const ScalarField &v, const MetricField &g,
                    const EigenParams &params);
// int |u|^a |v|^b u v.
double functional_B(const ScalarField &u, const ScalarField &v, const MetricField &g,
                    const EigenParams &params);
// (C_u, C_v) = (int |u|^a |v|^b v, int |u|^a |v|^b u).
std::pair<double, double> zero_mean_constraints(const ScalarField &u, const ScalarField &v,
                                                const MetricField &g, const EigenParams &params);
// max of the L^2(dmu) norms of Delta_p u + lambda |u|^a|v|^b v and
// Delta_q v + lambda |u|^a|v|^b u.
double kkt_residual(double lambda, const ScalarField &u, const ScalarField &v,
                    const MetricField &g, const EigenParams &params);
inline double kkt_residual(const EigenPair &pair, const MetricField &g, const EigenParams &params)
{
  return kkt_residual(pair.lambda, pair.u, pair.v, g, params);
}

using WarmStart = std::pair<ScalarField, ScalarField>;

// First positive eigenvalue by constrained descent on A with B = 1 and
// C_u = C_v = 0. Deterministic for fixed inputs and seed.
EigenPair first_eigenpair(const MetricField &g, const EigenParams &params,
                          const std::optional<WarmStart> &warm = std::nullopt);

// lambda of the first eigenpair on state.g. Updates warm (when non-null) with
// the converged eigenfunctions. Throws SolverError if the solve does not
// converge.
double lambda_of_t(const CoupledState &state, const EigenParams &params,
                   std::optional<WarmStart> *warm = nullptr);

}  // namespace pqflow::pqeigen
