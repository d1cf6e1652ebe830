#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pqflow/diffgeo.hpp"
#include "pqflow/geomflow.hpp"
#include "pqflow/metric.hpp"
#include "pqflow/pqeigen.hpp"

namespace pqflow::monitor
{

struct TraceRecord
{
  double t = 0.0;
  double lambda = 0.0;
  double S_min = 0.0;
  double volume = 0.0;
  double r = 0.0;
  double cond_min = 0.0;  // min generalized eigenvalue of S_ij - (S/k) g_ij
  double Q = 0.0;
  double G_formula = 0.0;
  double dlambda_fd = 0.0;
  int eig_iters = 0;
  double eig_residual = 0.0;
  bool degraded = false;  // eigensolve did not converge
  bool fd_valid = false;  // dlambda_fd uses only non-degraded neighbours
};

enum class Status
{
  Pass,
  Fail,
  Info
};
std::string to_string(Status s);

struct Verdict
{
  std::string name;
  Status status = Status::Info;
  double margin = 0.0;  // >= 0 when the check holds
  std::string location;
};

struct Tolerances
{
  double mono = 1e-3;        // relative slack for monotonicity
  double integral = 1e-2;    // relative slack for the integrated lower bound
  double curvature = 1e-3;   // relative slack for S_min >= y(t)
  double formula = 0.05;     // formula against finite differences
  double volume = 1e-3;      // volume drift under the normalized flow
  double condition = 1e-9;   // round-off allowance on cond_min >= 0
};

// Min over nodes of the smallest mu with det(T - mu g) = 0, T = S_ij - (S/k) g_ij.
double condition_tensor_min(const CoupledState &state, double kappa, double k);

// Predicted d(lambda)/dt under the unnormalized flow for a normalized
// eigenpair on state.g. Gradient terms are evaluated on the faces of the
// energy quadrature, so the value is the exact derivative of the discrete
// eigenvalue along the metric rate -2 (Ric - kappa dphi (x) dphi).
double variation_formula_G(const CoupledState &state, const pqeigen::EigenPair &pair, double kappa,
                           const pqeigen::EigenParams &params);
// The same expression for prescribed coupling tensors on g.
double variation_formula_G(const MetricField &g, const diffgeo::CouplingTensors &tensors,
                           const pqeigen::EigenPair &pair, const pqeigen::EigenParams &params);
// Same under the normalized flow: subtracts (a+1)/m r int|grad u|^p and
// (b+1)/m r int|grad v|^q.
double variation_formula_G_normalized(const CoupledState &state, const pqeigen::EigenPair &pair,
                                      double kappa, const pqeigen::EigenParams &params);

// lambda (1 - (2/m) S_min0 t)^{m/2}; the base is clamped at zero.
double monotone_quantity(double lambda, double t, double s_min0, int m);

// Everything needed to evaluate the verdicts of one flow run.
struct Trace
{
  std::vector<TraceRecord> records;
  int m = 2;
  double kappa = 0.0;
  double k = 2.0;
  bool normalized = false;
  double s_min0 = 0.0;
  // Minimum of cond_min over all records (including degraded ones).
  double cond_min = 0.0;
  // Worst margins of the two surface hypotheses over the run; NaN when the
  // hypothesis does not apply (m = 1, or k <= 2 for the first).
  double surface_ricci_margin = 0.0;
  double surface_gradient_margin = 0.0;
};

// Runs the flow and solves the eigenproblem at every record, with warm
// starts. Flow failures propagate as FlowError; non-convergent eigensolves are
// marked degraded.
Trace record_flow(const CoupledState &initial, const geomflow::FlowConfig &flow,
                  const pqeigen::EigenParams &eigen);

// Central differences of lambda at interior records, second-order one-sided
// differences at the ends. Records whose stencil touches a degraded record get
// fd_valid = false.
void fill_finite_differences(std::vector<TraceRecord> &records);

Verdict trace_integrity(std::span<const TraceRecord> records);
Verdict formula_vs_finite_difference(std::span<const TraceRecord> records, double tol, bool normalized);
Verdict integrated_lower_bound_check(std::span<const TraceRecord> records, double tol = 1e-2);
Verdict comparison_bound_check(std::span<const TraceRecord> records, double s_min0, int m,
                               double tol = 1e-3);
Verdict volume_drift_check(std::span<const TraceRecord> records, double tol = 1e-3);
// d(volume)/dt by central differences against -r * volume = -int S dmu.
Verdict volume_rate_check(std::span<const TraceRecord> records, double tol = 0.02);

enum class Monotone
{
  Lambda,
  Q
};
// Pass iff the sequence is nondecreasing up to tol * (1 + max|value|).
// When hypotheses_met is false the verdict is informational.
Verdict monotonicity_verdict(std::span<const TraceRecord> records, Monotone which, bool hypotheses_met,
                             double tol = 1e-3);

// All verdicts for a recorded run, with hypothesis gating.
std::vector<Verdict> evaluate(const Trace &trace, const Tolerances &tol = {});

// Solves on g1 and g2 and checks
//   lambda(g2) - lambda(g1) <= ((1+eps)^{(p+m)/2} - (1+eps)^{-m/2}) lambda(g1)
// with p = max(p, q), slack 10 tol_kkt max(1, lambda(g1)). Throws
// ParameterError naming the worst node when the generalized eigenvalues of g2
// with respect to g1 leave [(1+eps)^{-1}, 1+eps].
Verdict lemma_continuity_check(const MetricField &g1, const MetricField &g2, double eps,
                               const pqeigen::EigenParams &params);

// Worst pointwise margins of Ric >= e dphi (x) dphi with e = 2 kappa (k-1)/(k-2)
// (requires k > 2, m = 2) and of |grad phi|^2 g >= k dphi (x) dphi.
std::pair<Verdict, Verdict> surface_hypothesis_checks(const CoupledState &state, double kappa, double k);

}  // namespace pqflow::monitor
